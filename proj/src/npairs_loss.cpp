#include "xmodal/npairs_loss.hpp"

#include <cmath>
#include <string>

#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

void validate(const LossBatch& batch) {
  if (batch.anchors.rows() != batch.candidates.rows() || batch.anchors.cols() != batch.candidates.cols()) {
    throw ValidationError("anchors and candidates must have identical shapes");
  }
  if (static_cast<std::size_t>(batch.anchors.rows()) != batch.labels.size()) {
    throw ValidationError("label count " + std::to_string(batch.labels.size()) + " does not match batch size " +
                          std::to_string(batch.anchors.rows()));
  }
  if (!(batch.margin >= 0.0) || !std::isfinite(batch.margin)) {
    throw ValidationError("margin must be finite and non-negative");
  }
  if (!batch.anchors.allFinite() || !batch.candidates.allFinite()) {
    throw ValidationError("loss inputs contain non-finite values");
  }
  for (const int label : batch.labels) {
    if (label != 0 && label != 1) throw ValidationError("labels must be 0 or 1");
  }
}

}  // namespace

double pairwise_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("distance between vectors of length " + std::to_string(x.size()) + " and " +
                          std::to_string(y.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

LossResult npairs_loss(const LossBatch& batch) {
  validate(batch);
  const Eigen::Index n = batch.anchors.rows();
  const Eigen::Index d = batch.anchors.cols();

  LossResult result;
  result.grad_anchors = Eigen::MatrixXd::Zero(n, d);
  result.grad_candidates = Eigen::MatrixXd::Zero(n, d);

  // Unit direction (A_i - P_j) / |A_i - P_j|, zero for coincident points.
  const auto unit = [&](Eigen::Index i, Eigen::Index j, double dist) -> Eigen::RowVectorXd {
    if (dist < kDistanceEpsilon) return Eigen::RowVectorXd::Zero(d);
    return (batch.anchors.row(i) - batch.candidates.row(j)) / dist;
  };

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (batch.labels[static_cast<std::size_t>(i)] != 1) continue;
    const double pos = (batch.anchors.row(i) - batch.candidates.row(i)).norm();
    const Eigen::RowVectorXd pos_dir = unit(i, i, pos);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      ++result.count;
      const double neg = (batch.anchors.row(i) - batch.candidates.row(j)).norm();
      const double slack = pos - neg + batch.margin;
      if (slack <= 0.0) continue;
      total += slack;
      ++result.active_terms;
      const Eigen::RowVectorXd neg_dir = unit(i, j, neg);
      // d|A-P|/dA = u, d|A-P|/dP = -u.
      result.grad_anchors.row(i) += pos_dir - neg_dir;
      result.grad_candidates.row(i) -= pos_dir;
      result.grad_candidates.row(j) += neg_dir;
    }
  }

  if (result.count == 0) return result;
  const double scale = 1.0 / static_cast<double>(result.count);
  result.value = total * scale;
  result.grad_anchors *= scale;
  result.grad_candidates *= scale;
  return result;
}

}  // namespace xmodal
