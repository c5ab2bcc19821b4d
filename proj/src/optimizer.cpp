#include "xmodal/optimizer.hpp"

#include <cmath>

#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

void check_sizes(std::size_t params, std::size_t grads) {
  if (params != grads) throw ValidationError("optimizer: parameter and gradient sizes differ");
}

}  // namespace

void sgd_step(std::span<double> params, std::span<const double> grads, double learning_rate) {
  check_sizes(params.size(), grads.size());
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grads[i];
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double learning_rate,
               const AdamHyper& hyper) {
  check_sizes(params.size(), grads.size());
  check_sizes(state.m.size(), params.size());
  check_sizes(state.v.size(), params.size());

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(hyper.beta1, t);
  const double v_correction = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / m_correction;
    const double v_hat = state.v[i] / v_correction;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

ProjectionOptimizer::ProjectionOptimizer(OptimizerKind kind, const ProjectionParams& shape, double learning_rate,
                                         AdamHyper hyper)
    : kind_(kind), learning_rate_(learning_rate), hyper_(hyper) {
  if (kind_ == OptimizerKind::adam) {
    for (const auto block : shape.blocks()) states_.emplace_back(block.size());
  }
}

void ProjectionOptimizer::step(ProjectionParams& params, const ParamGrads& grads) {
  if (params.d != grads.d || params.h != grads.h) throw ValidationError("optimizer: gradient shape mismatch");
  auto p = params.blocks();
  const auto g = grads.blocks();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (kind_ == OptimizerKind::sgd) {
      sgd_step(p[k], g[k], learning_rate_);
    } else {
      adam_step(p[k], g[k], states_.at(k), learning_rate_, hyper_);
    }
  }
}

}  // namespace xmodal
