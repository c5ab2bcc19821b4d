#include "xmodal/projection.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <string_view>

#include "xmodal/binary_io.hpp"
#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

constexpr std::string_view kParamsMagic{"PRJV1\0", 6};

std::span<double> as_span(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const RowMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void fill_uniform(RowMatrix& w, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (double& x : as_span(w)) x = uniform(rng);
}

Eigen::VectorXd relu(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

// ReLU'(0) = 0: only strictly positive pre-activations pass gradient.
Eigen::VectorXd relu_mask(const Eigen::VectorXd& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

void check_input(const ProjectionParams& params, Eigen::Index size) {
  if (static_cast<std::size_t>(size) != params.d) {
    throw ValidationError("projection input has length " + std::to_string(size) + ", expected " +
                          std::to_string(params.d));
  }
}

}  // namespace

ProjectionParams ProjectionParams::zeros(std::size_t d, std::size_t h) {
  if (d == 0 || h == 0) throw ValidationError("projection dimensions must be positive");
  const auto di = static_cast<Eigen::Index>(d);
  const auto hi = static_cast<Eigen::Index>(h);
  ProjectionParams p;
  p.d = d;
  p.h = h;
  p.w1 = RowMatrix::Zero(hi, di);
  p.b1 = Eigen::VectorXd::Zero(hi);
  p.w2 = RowMatrix::Zero(hi, hi);
  p.b2 = Eigen::VectorXd::Zero(hi);
  p.w3 = RowMatrix::Zero(di, hi);
  p.b3 = Eigen::VectorXd::Zero(di);
  return p;
}

std::array<std::span<double>, 6> ProjectionParams::blocks() {
  return {as_span(w1), as_span(b1), as_span(w2), as_span(b2), as_span(w3), as_span(b3)};
}

std::array<std::span<const double>, 6> ProjectionParams::blocks() const {
  return {as_span(w1), as_span(b1), as_span(w2), as_span(b2), as_span(w3), as_span(b3)};
}

void ProjectionParams::validate() const {
  const auto di = static_cast<Eigen::Index>(d);
  const auto hi = static_cast<Eigen::Index>(h);
  if (d == 0 || h == 0) throw ValidationError("projection dimensions must be positive");
  if (w1.rows() != hi || w1.cols() != di || b1.size() != hi || w2.rows() != hi || w2.cols() != hi ||
      b2.size() != hi || w3.rows() != di || w3.cols() != hi || b3.size() != di) {
    throw ValidationError("projection tensor shapes do not match (d=" + std::to_string(d) +
                          ", h=" + std::to_string(h) + ")");
  }
  for (const auto block : blocks()) {
    for (const double x : block) {
      if (!std::isfinite(x)) throw ValidationError("projection parameters contain a non-finite value");
    }
  }
}

bool operator==(const ProjectionParams& lhs, const ProjectionParams& rhs) {
  if (lhs.d != rhs.d || lhs.h != rhs.h) return false;
  const auto a = lhs.blocks();
  const auto b = rhs.blocks();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) return false;
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      if (std::bit_cast<std::uint64_t>(a[k][i]) != std::bit_cast<std::uint64_t>(b[k][i])) return false;
    }
  }
  return true;
}

ProjectionParams init_params(std::size_t d, std::size_t h, std::uint64_t seed) {
  auto p = ProjectionParams::zeros(d, h);
  std::mt19937_64 rng(seed);
  fill_uniform(p.w1, d, rng);
  fill_uniform(p.w2, h, rng);
  fill_uniform(p.w3, h, rng);
  return p;
}

ForwardTrace forward(const ProjectionParams& params, const Eigen::VectorXd& input) {
  check_input(params, input.size());
  ForwardTrace t;
  t.input = input;
  t.pre1.noalias() = params.w1 * input;
  t.pre1 += params.b1;
  t.act1 = relu(t.pre1);
  t.pre2.noalias() = params.w2 * t.act1;
  t.pre2 += params.b2;
  t.act2 = relu(t.pre2);
  t.output.noalias() = params.w3 * t.act2;
  t.output += params.b3;
  return t;
}

ForwardTrace forward(const ProjectionParams& params, std::span<const float> input) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) x[static_cast<Eigen::Index>(i)] = input[i];
  return forward(params, x);
}

Eigen::VectorXd project(const ProjectionParams& params, const Eigen::VectorXd& input) {
  return forward(params, input).output;
}

void accumulate_backward(const ProjectionParams& params, const ForwardTrace& trace,
                         const Eigen::VectorXd& grad_output, ParamGrads& grads) {
  if (static_cast<std::size_t>(grad_output.size()) != params.d ||
      static_cast<std::size_t>(trace.act2.size()) != params.h ||
      static_cast<std::size_t>(trace.input.size()) != params.d) {
    throw ValidationError("backward: trace or upstream gradient does not match the parameter shapes");
  }
  if (grads.d != params.d || grads.h != params.h) throw ValidationError("backward: gradient buffer has wrong shape");

  grads.w3.noalias() += grad_output * trace.act2.transpose();
  grads.b3 += grad_output;

  const Eigen::VectorXd g_pre2 = (params.w3.transpose() * grad_output).cwiseProduct(relu_mask(trace.pre2));
  grads.w2.noalias() += g_pre2 * trace.act1.transpose();
  grads.b2 += g_pre2;

  const Eigen::VectorXd g_pre1 = (params.w2.transpose() * g_pre2).cwiseProduct(relu_mask(trace.pre1));
  grads.w1.noalias() += g_pre1 * trace.input.transpose();
  grads.b1 += g_pre1;
}

BackwardResult backward(const ProjectionParams& params, const ForwardTrace& trace,
                        const Eigen::VectorXd& grad_output) {
  BackwardResult result{ParamGrads::zeros(params.d, params.h), {}};
  accumulate_backward(params, trace, grad_output, result.grads);
  // Recompute the first-layer error signal for the input gradient.
  const Eigen::VectorXd g_pre2 = (params.w3.transpose() * grad_output).cwiseProduct(relu_mask(trace.pre2));
  const Eigen::VectorXd g_pre1 = (params.w2.transpose() * g_pre2).cwiseProduct(relu_mask(trace.pre1));
  result.input_grad = params.w1.transpose() * g_pre1;
  return result;
}

RowMatrix project_rows(const ProjectionParams& params, const EmbeddingSet& set) {
  if (set.dim() != params.d) {
    throw ValidationError("cannot project " + std::to_string(set.dim()) + "-dim embeddings with a d=" +
                          std::to_string(params.d) + " projection");
  }
  RowMatrix out(static_cast<Eigen::Index>(set.size()), static_cast<Eigen::Index>(params.d));
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = forward(params, set.row(i)).output.transpose();
  }
  return out;
}

std::vector<std::uint8_t> encode_params(const ProjectionParams& params) {
  params.validate();
  if (params.d > std::numeric_limits<std::uint32_t>::max() || params.h > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("projection too large for PRJV1");
  }
  binary_io::ByteWriter writer;
  writer.reserve(kProjectionHeaderBytes + params.parameter_count() * 8);
  writer.put_bytes(kParamsMagic);
  writer.put_u32(static_cast<std::uint32_t>(params.d));
  writer.put_u32(static_cast<std::uint32_t>(params.h));
  for (const auto block : params.blocks()) {
    for (const double x : block) writer.put_f64(x);
  }
  return std::move(writer.bytes());
}

ProjectionParams decode_params(std::span<const std::uint8_t> bytes) {
  binary_io::ByteReader reader(bytes);
  if (reader.take_bytes(kParamsMagic.size()) != kParamsMagic) throw FormatError("bad PRJV1 magic");
  const std::uint32_t d = reader.get_u32();
  const std::uint32_t h = reader.get_u32();
  if (d == 0 || h == 0) throw FormatError("PRJV1 header has a zero dimension");
  const std::uint64_t expected =
      (static_cast<std::uint64_t>(h) * d * 2 + static_cast<std::uint64_t>(h) * h + 2ull * h + d) * 8;
  if (reader.remaining() != expected) {
    throw FormatError("PRJV1 payload is " + std::to_string(reader.remaining()) + " bytes, expected " +
                      std::to_string(expected) + " for d=" + std::to_string(d) + ", h=" + std::to_string(h));
  }
  auto params = ProjectionParams::zeros(d, h);
  for (auto block : params.blocks()) {
    for (double& x : block) x = reader.get_f64();
  }
  params.validate();
  return params;
}

void save_params(const ProjectionParams& params, const std::filesystem::path& path) {
  binary_io::write_file(path, encode_params(params));
}

ProjectionParams load_params(const std::filesystem::path& path) {
  const auto bytes = binary_io::read_file(path);
  try {
    return decode_params(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace xmodal
