#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xmodal/projection.hpp"

namespace xmodal {

enum class OptimizerKind { sgd, adam };

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// params -= lr * grads.
void sgd_step(std::span<double> params, std::span<const double> grads, double learning_rate);

/// First and second moment estimates for a flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update over a flat parameter vector.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double learning_rate,
               const AdamHyper& hyper = {});

/// Optimizer over the six projection tensors, with state sized to match.
class ProjectionOptimizer {
 public:
  ProjectionOptimizer(OptimizerKind kind, const ProjectionParams& shape, double learning_rate,
                      AdamHyper hyper = {});

  void step(ProjectionParams& params, const ParamGrads& grads);

  OptimizerKind kind() const noexcept { return kind_; }

 private:
  OptimizerKind kind_;
  double learning_rate_;
  AdamHyper hyper_;
  std::vector<AdamState> states_;
};

}  // namespace xmodal
