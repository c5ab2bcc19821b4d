#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xmodal/xmodal.hpp"

namespace py = pybind11;
using namespace xmodal;

namespace {

using FloatRows = py::array_t<float, py::array::c_style | py::array::forcecast>;

EmbeddingSet make_set(std::vector<std::string> ids, const FloatRows& values) {
  if (values.ndim() != 2) throw ValidationError("values must be a 2-D array");
  const auto n = static_cast<std::size_t>(values.shape(0));
  const auto d = static_cast<std::size_t>(values.shape(1));
  if (n != ids.size()) throw ValidationError("values has " + std::to_string(n) + " rows for " +
                                             std::to_string(ids.size()) + " ids");
  return EmbeddingSet(d, std::move(ids), std::vector<float>(values.data(), values.data() + values.size()));
}

py::array_t<float> set_values(const EmbeddingSet& set) {
  py::array_t<float> out({set.size(), set.dim()});
  std::copy(set.values().begin(), set.values().end(), out.mutable_data());
  return out;
}

py::list hits(const RetrievalResult& r) {
  py::list out;
  for (const auto& h : r.hits) out.append(py::make_tuple(h.id, h.score));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cross-modal projection training and retrieval";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  py::class_<EmbeddingSet>(m, "EmbeddingSet")
      .def(py::init(&make_set), py::arg("ids"), py::arg("values"))
      .def_property_readonly("dim", &EmbeddingSet::dim)
      .def_property_readonly("ids", &EmbeddingSet::ids)
      .def_property_readonly("values", &set_values)
      .def("row", [](const EmbeddingSet& s, const std::string& id) { return to_vector(s.row(s.index_of(id))); })
      .def("__len__", &EmbeddingSet::size)
      .def("__eq__", [](const EmbeddingSet& a, const EmbeddingSet& b) { return a == b; });
  m.def("load_embeddings", &load_embeddings, py::arg("path"));
  m.def("save_embeddings", &save_embeddings, py::arg("set"), py::arg("path"));

  py::class_<PairExample>(m, "PairExample")
      .def(py::init([](std::string a, std::string c, int label) { return PairExample{std::move(a), std::move(c), label}; }),
           py::arg("anchor_id"), py::arg("candidate_id"), py::arg("label"))
      .def_readwrite("anchor_id", &PairExample::anchor_id)
      .def_readwrite("candidate_id", &PairExample::candidate_id)
      .def_readwrite("label", &PairExample::label)
      .def("__eq__", [](const PairExample& a, const PairExample& b) { return a == b; })
      .def("__repr__", [](const PairExample& p) {
        return "PairExample(" + p.anchor_id + ", " + p.candidate_id + ", " + std::to_string(p.label) + ")";
      });
  m.def("load_pairs", &load_pairs, py::arg("path"));
  m.def("save_pairs", &save_pairs, py::arg("pairs"), py::arg("path"));
  m.def(
      "split_holdout",
      [](const std::vector<PairExample>& pairs, std::size_t holdout) {
        const auto split = split_holdout(PairDataset{pairs, {}}, holdout);
        return py::make_tuple(split.train.examples, split.test.examples);
      },
      py::arg("pairs"), py::arg("holdout"));

  py::class_<SyntheticTask>(m, "SyntheticTask")
      .def_readonly("anchors", &SyntheticTask::anchors)
      .def_readonly("candidates", &SyntheticTask::candidates)
      .def_property_readonly("pairs", [](const SyntheticTask& t) { return t.pairs.examples; })
      .def_readonly("rotation", &SyntheticTask::rotation);
  m.def("generate_synthetic", &generate_synthetic, py::arg("n_pairs"), py::arg("dim"), py::arg("noise_sigma"),
        py::arg("seed") = kDefaultSeed);

  py::class_<ProjectionParams>(m, "ProjectionParams")
      .def_readonly("d", &ProjectionParams::d)
      .def_readonly("h", &ProjectionParams::h)
      .def_readonly("w1", &ProjectionParams::w1)
      .def_readonly("b1", &ProjectionParams::b1)
      .def_readonly("w2", &ProjectionParams::w2)
      .def_readonly("b2", &ProjectionParams::b2)
      .def_readonly("w3", &ProjectionParams::w3)
      .def_readonly("b3", &ProjectionParams::b3)
      .def_property_readonly("parameter_count", &ProjectionParams::parameter_count)
      .def("__eq__", [](const ProjectionParams& a, const ProjectionParams& b) { return a == b; });
  m.def("init_params", &init_params, py::arg("d"), py::arg("h"), py::arg("seed") = kDefaultSeed);
  m.def("project", &project, py::arg("params"), py::arg("input"));
  m.def("project_rows", &project_rows, py::arg("params"), py::arg("set"));
  m.def("save_params", &save_params, py::arg("params"), py::arg("path"));
  m.def("load_params", &load_params, py::arg("path"));

  m.def(
      "npairs_loss",
      [](const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& candidates, std::vector<int> labels, double margin) {
        const auto r = npairs_loss(LossBatch{anchors, candidates, std::move(labels), margin});
        py::dict out;
        out["value"] = r.value;
        out["grad_anchors"] = r.grad_anchors;
        out["grad_candidates"] = r.grad_candidates;
        out["count"] = r.count;
        return out;
      },
      py::arg("anchors"), py::arg("candidates"), py::arg("labels"), py::arg("margin") = kDefaultMargin);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("margin", &TrainConfig::margin)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property(
          "optimizer", [](const TrainConfig& c) { return optimizer_name(c.optimizer); },
          [](TrainConfig& c, const std::string& name) { c.optimizer = parse_optimizer(name); })
      .def_readwrite("shuffle", &TrainConfig::shuffle)
      .def_readwrite("hidden_dim", &TrainConfig::hidden_dim)
      .def_readwrite("normalize_inputs", &TrainConfig::normalize_inputs);
  m.def(
      "train",
      [](const EmbeddingSet& anchors, const EmbeddingSet& candidates, const std::vector<PairExample>& pairs,
         const TrainConfig& cfg) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(anchors, candidates, PairDataset{pairs, {}}, cfg);
        }
        return py::make_tuple(r.params, r.report.epoch_losses);
      },
      py::arg("anchors"), py::arg("candidates"), py::arg("pairs"), py::arg("config") = TrainConfig{});

  py::class_<RetrievalIndex>(m, "RetrievalIndex")
      .def(py::init([](const EmbeddingSet& set, const std::string& metric) { return RetrievalIndex(set, parse_metric(metric)); }),
           py::arg("set"), py::arg("metric") = "euclidean")
      .def_property_readonly("metric", [](const RetrievalIndex& i) { return metric_name(i.metric()); })
      .def("__len__", &RetrievalIndex::size)
      .def(
          "query", [](const RetrievalIndex& i, const Eigen::VectorXd& q, std::size_t k) { return hits(i.query(q, k)); },
          py::arg("query"), py::arg("k") = 1)
      .def("scores", &RetrievalIndex::scores, py::arg("query"));
  m.def(
      "project_and_query",
      [](const ProjectionParams& p, const RetrievalIndex& i, const Eigen::VectorXd& b, std::size_t k) {
        return hits(project_and_query(p, i, b, k));
      },
      py::arg("params"), py::arg("index"), py::arg("query"), py::arg("k") = 1);

  m.def("tokenize", &tokenize, py::arg("text"));
  py::class_<Bm25Index>(m, "Bm25Index")
      .def(py::init([](const std::vector<std::pair<std::string, std::string>>& docs, double k1, double b) {
             return Bm25Index(docs, Bm25Params{k1, b});
           }),
           py::arg("documents"), py::arg("k1") = Bm25Params{}.k1, py::arg("b") = Bm25Params{}.b)
      .def_property_readonly("avgdl", &Bm25Index::avgdl)
      .def("idf", &Bm25Index::idf, py::arg("term"))
      .def("score", &Bm25Index::score, py::arg("query_tokens"), py::arg("doc_id"))
      .def(
          "retrieve", [](const Bm25Index& i, const std::string& text, std::size_t k) { return hits(i.retrieve(text, k)); },
          py::arg("text"), py::arg("k") = 1);

  m.def(
      "score_predictions",
      [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& averaging) {
        const auto r = score_predictions(pairs, parse_averaging(averaging));
        py::dict out;
        out["accuracy"] = r.accuracy;
        out["precision"] = r.precision;
        out["recall"] = r.recall;
        out["f1"] = r.f1;
        return out;
      },
      py::arg("gold_and_predicted"), py::arg("averaging") = "weighted");
  m.def("harmonic_mean", &harmonic_mean, py::arg("f1"), py::arg("throughput"));
}
