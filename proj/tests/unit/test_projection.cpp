#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "xmodal/binary_io.hpp"
#include "xmodal/errors.hpp"
#include "xmodal/projection.hpp"

using namespace xmodal;
using testing_support::TempDir;

namespace {

oracle::Mat to_mat(const RowMatrix& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

oracle::Vec to_vec(const Eigen::VectorXd& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

Eigen::VectorXd random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

ProjectionParams random_params(std::size_t d, std::size_t h, std::mt19937_64& rng) {
  auto p = init_params(d, h, rng());
  std::normal_distribution<double> normal(0.0, 0.3);
  for (double& x : std::span<double>(p.b1.data(), p.h)) x = normal(rng);
  for (double& x : std::span<double>(p.b2.data(), p.h)) x = normal(rng);
  for (double& x : std::span<double>(p.b3.data(), p.d)) x = normal(rng);
  return p;
}

// True when every pre-activation is at least `gap` away from the ReLU kink.
bool away_from_kinks(const ForwardTrace& t, double gap) {
  return t.pre1.cwiseAbs().minCoeff() > gap && t.pre2.cwiseAbs().minCoeff() > gap;
}

}  // namespace

TEST_CASE("init is deterministic, bounded, and has zero biases") {
  const auto a = init_params(4, 8, 3);
  const auto b = init_params(4, 8, 3);
  CHECK(a == b);
  CHECK_FALSE(a == init_params(4, 8, 4));
  for (const std::size_t d : {1u, 3u, 17u}) {
    const auto p = init_params(d, 5, 1);
    CHECK(p.w1.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / static_cast<double>(d)));
    CHECK(p.w2.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 5.0));
    CHECK(p.w3.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 5.0));
    CHECK(p.b1.isZero(0.0));
    CHECK(p.b2.isZero(0.0));
    CHECK(p.b3.isZero(0.0));
  }
}

TEST_CASE("parameter count at the reference sizes") {
  // 768*2048 + 2048 + 2048*2048 + 2048 + 2048*768 + 768
  const std::size_t expected = 1572864u + 2048u + 4194304u + 2048u + 1572864u + 768u;
  CHECK(expected == 7344896u);
  CHECK(ProjectionParams::zeros(768, 2048).parameter_count() == expected);
  CHECK(ProjectionParams::zeros(3, 4).parameter_count() == 3 * 4 + 4 + 16 + 4 + 12 + 3);
}

TEST_CASE("all-zero params map everything to zero") {
  const auto p = ProjectionParams::zeros(5, 7);
  std::mt19937_64 rng(1);
  CHECK(forward(p, random_vector(5, rng)).output.isZero(0.0));
}

TEST_CASE("saturated biases give output b3") {
  std::mt19937_64 rng(2);
  auto p = init_params(4, 6, 9);
  p.b1.setConstant(-1e6);
  p.b2.setConstant(-1e6);
  p.b3 = random_vector(4, rng);
  const auto t = forward(p, random_vector(4, rng));
  CHECK(t.act1.isZero(0.0));
  CHECK(t.act2.isZero(0.0));
  CHECK(t.output == p.b3);
}

TEST_CASE("forward matches the straight-line formula oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_params(6, 10, rng);
    const auto x = random_vector(6, rng);
    const auto expected =
        oracle::mlp_forward(to_mat(p.w1), to_vec(p.b1), to_mat(p.w2), to_vec(p.b2), to_mat(p.w3), to_vec(p.b3), to_vec(x));
    const auto got = forward(p, x);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(oracle::relative_error(got.output[static_cast<Eigen::Index>(i)], expected[i], 1e-300) <= 1e-12);
    }
    CHECK(got.act1 == got.pre1.cwiseMax(0.0));
    CHECK(got.act2 == got.pre2.cwiseMax(0.0));
  }
}

TEST_CASE("forward is positively homogeneous without biases") {
  std::mt19937_64 rng(8);
  const auto p = init_params(5, 9, 4);
  const auto x = random_vector(5, rng);
  for (const double c : {0.5, 2.0, 10.0}) {
    const auto scaled = forward(p, Eigen::VectorXd(c * x)).output;
    const auto base = forward(p, x).output;
    CHECK((scaled - c * base).norm() <= 1e-12 * std::max(1.0, (c * base).norm()));
  }
}

TEST_CASE("forward is pure") {
  std::mt19937_64 rng(3);
  const auto p = random_params(4, 6, rng);
  const auto x = random_vector(4, rng);
  const auto a = forward(p, x).output;
  const auto b = forward(p, x).output;
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 4) == 0);
}

TEST_CASE("forward rejects wrong input length") {
  const auto p = init_params(3, 4, 0);
  CHECK_THROWS_AS(forward(p, Eigen::VectorXd::Zero(4)), ValidationError);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  std::mt19937_64 rng(4);
  const auto p = random_params(3, 4, rng);
  const auto r = backward(p, forward(p, random_vector(3, rng)), Eigen::VectorXd::Zero(3));
  for (const auto block : r.grads.blocks())
    for (const double g : block) CHECK(g == 0.0);
  CHECK(r.input_grad.isZero(0.0));
}

TEST_CASE("dead first layer carries no gradient into w1") {
  std::mt19937_64 rng(6);
  auto p = random_params(3, 4, rng);
  p.b1.setConstant(-1e6);
  const auto r = backward(p, forward(p, random_vector(3, rng)), random_vector(3, rng));
  CHECK(r.grads.w1.isZero(0.0));
  CHECK(r.grads.b1.isZero(0.0));
  CHECK(r.input_grad.isZero(0.0));
}

TEST_CASE("ReLU subgradient at exactly zero is zero") {
  auto p = ProjectionParams::zeros(1, 1);
  p.w1(0, 0) = 1.0;  // pre1 = x = 0 exactly
  p.w2(0, 0) = 1.0;
  p.w3(0, 0) = 1.0;
  const auto r = backward(p, forward(p, Eigen::VectorXd::Zero(1)), Eigen::VectorXd::Ones(1));
  CHECK(r.grads.w2(0, 0) == 0.0);
  CHECK(r.grads.b1[0] == 0.0);
  CHECK(r.input_grad[0] == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 25) {
    const std::size_t d = 1 + rng() % 8;
    const std::size_t h = 1 + rng() % 12;
    auto p = random_params(d, h, rng);
    const auto x = random_vector(d, rng);
    const auto g = random_vector(d, rng);
    const auto trace = forward(p, x);
    if (!away_from_kinks(trace, 1e-3)) continue;
    ++checked;

    const auto analytic = backward(p, trace, g);
    // L(theta) = g . forward(theta, x) is linear in the output.
    const auto loss_with = [&](ProjectionParams& params) { return g.dot(forward(params, x).output); };

    auto blocks = p.blocks();
    const auto grad_blocks = analytic.grads.blocks();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      oracle::Vec flat(blocks[k].begin(), blocks[k].end());
      const auto numeric = oracle::central_difference(
          [&](const oracle::Vec& v) {
            std::copy(v.begin(), v.end(), blocks[k].begin());
            return loss_with(p);
          },
          flat, 1e-5);
      std::copy(flat.begin(), flat.end(), blocks[k].begin());
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        CHECK(oracle::relative_error(grad_blocks[k][i], numeric[i]) <= 1e-4);
      }
    }

    const auto numeric_input = oracle::central_difference(
        [&](const oracle::Vec& v) {
          return g.dot(forward(p, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval()).output);
        },
        to_vec(x), 1e-5);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(oracle::relative_error(analytic.input_grad[static_cast<Eigen::Index>(i)], numeric_input[i]) <= 1e-4);
    }
  }
}

TEST_CASE("backward rejects mismatched shapes") {
  const auto p = init_params(3, 4, 0);
  const auto t = forward(p, Eigen::VectorXd::Ones(3));
  CHECK_THROWS_AS(backward(p, t, Eigen::VectorXd::Ones(2)), ValidationError);
  const auto other = init_params(3, 5, 0);
  CHECK_THROWS_AS(backward(other, t, Eigen::VectorXd::Ones(3)), ValidationError);
}

TEST_CASE("checkpoint round trip and layout") {
  TempDir dir;
  std::mt19937_64 rng(12);
  const auto p = random_params(3, 5, rng);
  save_params(p, dir / "p.prj");
  CHECK(load_params(dir / "p.prj") == p);
  CHECK(std::filesystem::file_size(dir / "p.prj") == kProjectionHeaderBytes + p.parameter_count() * 8);

  const auto bytes = encode_params(p);
  CHECK(std::string(bytes.begin(), bytes.begin() + 6) == std::string("PRJV1\0", 6));
  binary_io::ByteReader reader(std::span<const std::uint8_t>(bytes).subspan(6));
  CHECK(reader.get_u32() == 3);
  CHECK(reader.get_u32() == 5);
  CHECK(reader.get_f64() == p.w1(0, 0));
  CHECK(reader.get_f64() == p.w1(0, 1));  // row-major
}

TEST_CASE("reference-size checkpoint payload size") {
  const auto p = ProjectionParams::zeros(768, 2048);
  CHECK(encode_params(p).size() == 14u + 7344896u * 8u);
}

TEST_CASE("corrupt checkpoints are format errors") {
  const auto bytes = encode_params(init_params(2, 3, 1));
  auto bad_magic = bytes;
  bad_magic[2] = 'Z';
  CHECK_THROWS_AS(decode_params(bad_magic), FormatError);
  auto wrong_shape = bytes;
  wrong_shape[10] = 4;  // h = 4, payload still sized for h = 3
  CHECK_THROWS_AS(decode_params(wrong_shape), FormatError);
  CHECK_THROWS_AS(decode_params(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1)), FormatError);
  CHECK_THROWS_AS(decode_params(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 8)), FormatError);
}

TEST_CASE("non-finite parameters are rejected") {
  auto p = init_params(2, 2, 0);
  p.b2[1] = std::nan("");
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_THROWS_AS(encode_params(p), ValidationError);
}
