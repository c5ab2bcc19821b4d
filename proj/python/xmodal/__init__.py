"""Cross-modal projection training and retrieval."""

from ._core import (
    Bm25Index,
    EmbeddingSet,
    Error,
    FormatError,
    IoError,
    PairExample,
    ProjectionParams,
    RetrievalIndex,
    SyntheticTask,
    TrainConfig,
    TrainingError,
    ValidationError,
    generate_synthetic,
    harmonic_mean,
    init_params,
    load_embeddings,
    load_pairs,
    load_params,
    npairs_loss,
    project,
    project_and_query,
    project_rows,
    save_embeddings,
    save_pairs,
    save_params,
    score_predictions,
    split_holdout,
    tokenize,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
