#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "cfgtok/position_encoding.hpp"
#include "test_support.hpp"

namespace cfgtok {
namespace {

constexpr double kPi = std::numbers::pi;

// Dense block-diagonal rotation built entry by entry.
Eigen::MatrixXd rope_matrix(std::size_t d, double p, double base) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 1; i <= d / 2; ++i) {
    const double theta = std::exp(-2.0 * double(i) / double(d) * std::log(base));
    const double a = p * theta;
    const auto lo = 2 * i - 2, hi = 2 * i - 1;
    r(lo, lo) = std::cos(a);
    r(lo, hi) = -std::sin(a);
    r(hi, lo) = std::sin(a);
    r(hi, hi) = std::cos(a);
  }
  return r;
}

Eigen::VectorXd as_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

TEST(RoPE, ThetaFormula) {
  const RoPEConfig cfg(8, 10000.0);
  EXPECT_NEAR(cfg.theta(1), std::pow(10000.0, -0.25), 1e-15);
  EXPECT_NEAR(cfg.theta(4), 1e-4, 1e-18);
}

TEST(RoPE, ZeroPositionIsIdentity) {
  test::Rng rng(1);
  const auto x = rng.normal_vector(16);
  EXPECT_EQ(rope_rotate(x, 0.0, RoPEConfig(16)), x);
}

TEST(RoPE, QuarterTurn) {
  const RoPEConfig cfg(2);
  // d = 2: theta_1 = base^-1.
  const double p = (kPi / 2.0) / std::pow(10000.0, -1.0);
  const auto y = rope_rotate(std::vector<double>{1.0, 0.0}, p, cfg);
  EXPECT_NEAR(y[0], 0.0, 1e-9);
  EXPECT_NEAR(y[1], 1.0, 1e-9);
}

TEST(RoPE, MatchesDenseMatrix) {
  test::Rng rng(2);
  for (int n = 0; n < 50; ++n) {
    const std::size_t d = 2 * rng.integer(1, 32);
    const double base = rng.uniform(2.0, 20000.0);
    const double p = rng.uniform(-50.0, 50.0);
    const auto x = rng.normal_vector(d);
    const auto y = rope_rotate(x, p, RoPEConfig(d, base));
    EXPECT_LT((as_eigen(y) - rope_matrix(d, p, base) * as_eigen(x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RoPE, NormPreservedAndLinear) {
  test::Rng rng(3);
  const RoPEConfig cfg(32);
  for (int n = 0; n < 100; ++n) {
    const auto x = rng.normal_vector(32), y = rng.normal_vector(32);
    const double p = rng.uniform(-100, 100), a = rng.normal(), b = rng.normal();
    const auto rx = rope_rotate(x, p, cfg);
    EXPECT_NEAR(test::norm(rx), test::norm(x), 1e-6 * test::norm(x));
    std::vector<double> combo(32);
    for (std::size_t c = 0; c < 32; ++c) combo[c] = a * x[c] + b * y[c];
    const auto lhs = rope_rotate(combo, p, cfg);
    const auto ry = rope_rotate(y, p, cfg);
    for (std::size_t c = 0; c < 32; ++c) EXPECT_NEAR(lhs[c], a * rx[c] + b * ry[c], 1e-9);
  }
}

TEST(RoPE, Composition) {
  test::Rng rng(4);
  const RoPEConfig cfg(16);
  for (int n = 0; n < 100; ++n) {
    const auto x = rng.normal_vector(16);
    const double p1 = rng.uniform(-20, 20), p2 = rng.uniform(-20, 20);
    const auto two_step = rope_rotate(rope_rotate(x, p1, cfg), p2, cfg);
    const auto one_step = rope_rotate(x, p1 + p2, cfg);
    EXPECT_LT(test::max_abs_diff(two_step, one_step), 1e-6);
  }
}

TEST(RoPE, RelativeIdentity) {
  test::Rng rng(5);
  const RoPEConfig cfg(24);
  for (int n = 0; n < 100; ++n) {
    const auto x = rng.normal_vector(24), y = rng.normal_vector(24);
    const double p1 = rng.uniform(-30, 30), p2 = rng.uniform(-30, 30);
    // Direct evaluation of both sides of <R_p1 x, R_p2 y> = <x, R_(p2-p1) y>.
    const double lhs = test::dot(rope_rotate(x, p1, cfg), rope_rotate(y, p2, cfg));
    const double rhs = test::dot(x, rope_rotate(y, p2 - p1, cfg));
    EXPECT_LE(std::abs(lhs - rhs), 1e-6 * test::norm(x) * test::norm(y));
    EXPECT_LE(rope_relative_check(x, y, p1, p2, cfg), 1e-6 * test::norm(x) * test::norm(y));
  }
  const auto x = rng.normal_vector(24), y = rng.normal_vector(24);
  EXPECT_NEAR(test::dot(rope_rotate(x, 3.0, cfg), rope_rotate(y, 3.0, cfg)), test::dot(x, y), 1e-6);
  EXPECT_EQ(rope_relative_check(std::vector<double>(24, 0.0), y, 1.0, 2.0, cfg), 0.0);
}

TEST(RoPE, Errors) {
  EXPECT_THROW(RoPEConfig(3), Error);
  EXPECT_THROW(RoPEConfig(0), Error);
  EXPECT_THROW(RoPEConfig(4, 1.0), Error);
  try {
    (void)rope_rotate(std::vector<double>{1, 2}, 1.0, RoPEConfig(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dim_mismatch);
  }
}

TEST(RoPE, FloatInstantiation) {
  const std::vector<float> x{1.0f, 0.0f, 0.0f, 1.0f};
  const auto y = rope_rotate(std::span<const float>(x), 0.0, RoPEConfig(4));
  EXPECT_EQ(y, x);
}

// Independent scalar implementation: x + W2 gelu(W1 (F / sqrt d) + b1) + b2.
std::vector<double> fourier_oracle(const std::vector<double>& x, const std::vector<double>& p,
                                   const FourierConfig& cfg) {
  const std::size_t d = cfg.dim(), n = cfg.input_dim();
  const auto w = cfg.projection();
  const Mlp& mlp = cfg.mlp();
  std::vector<double> f(d);
  for (std::size_t r = 0; r < d / 2; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += w[r * n + c] * p[c];
    f[r] = std::cos(2 * kPi * s) / std::sqrt(double(d));
    f[r + d / 2] = std::sin(2 * kPi * s) / std::sqrt(double(d));
  }
  std::vector<double> h(mlp.hidden_dim);
  for (std::size_t r = 0; r < mlp.hidden_dim; ++r) {
    double s = mlp.b1[r];
    for (std::size_t c = 0; c < d; ++c) s += mlp.w1[r * d + c] * f[c];
    h[r] = mlp.activation == Activation::gelu ? s * 0.5 * std::erfc(-s / std::sqrt(2.0)) : s;
  }
  std::vector<double> out(x);
  for (std::size_t r = 0; r < d; ++r) {
    double s = mlp.b2[r];
    for (std::size_t c = 0; c < mlp.hidden_dim; ++c) s += mlp.w2[r * mlp.hidden_dim + c] * h[c];
    out[r] += s;
  }
  return out;
}

TEST(Fourier, MatchesScalarOracleOnRandomConfigs) {
  test::Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 * rng.integer(1, 24), n = rng.integer(1, 3);
    const auto cfg = FourierConfig::seeded(n, d, static_cast<std::uint64_t>(trial));
    const auto x = rng.normal_vector(d);
    std::vector<double> p(n);
    for (double& v : p) v = rng.uniform(-5, 5);
    EXPECT_LT(test::max_abs_diff(fourier_embed(x, p, cfg), fourier_oracle(x, p, cfg)), 1e-6);
  }
}

TEST(Fourier, NonSquareHiddenLayer) {
  test::Rng rng(7);
  const std::size_t d = 6, hidden = 10;
  Mlp mlp{d, hidden, d, rng.normal_vector(hidden * d), rng.normal_vector(hidden), rng.normal_vector(d * hidden),
          rng.normal_vector(d), Activation::gelu};
  const FourierConfig cfg(2, d, rng.normal_vector(d), mlp);
  const auto x = rng.normal_vector(d);
  const std::vector<double> p{0.3, -1.1};
  EXPECT_LT(test::max_abs_diff(fourier_embed(x, p, cfg), fourier_oracle(x, p, cfg)), 1e-12);
}

TEST(Fourier, ZeroProjectionIdentityMlp) {
  const std::size_t d = 8;
  const FourierConfig cfg(2, d, std::vector<double>(d, 0.0), Mlp::identity(d));
  test::Rng rng(8);
  const auto x = rng.normal_vector(d);
  const auto y = fourier_embed(x, std::vector<double>{1.7, -3.2}, cfg);
  for (std::size_t c = 0; c < d; ++c) {
    const double bump = c < d / 2 ? 1.0 / std::sqrt(double(d)) : 0.0;
    EXPECT_NEAR(y[c], x[c] + bump, 1e-15);
  }
}

TEST(Fourier, ZeroOutputMlpIsExactIdentity) {
  test::Rng rng(9);
  const std::size_t d = 16;
  const FourierConfig cfg(2, d, rng.normal_vector(d), Mlp::zero_output(d));
  for (int n = 0; n < 20; ++n) {
    const auto x = rng.normal_vector(d);
    EXPECT_EQ(fourier_embed(x, std::vector<double>{rng.normal(), rng.normal()}, cfg), x);
  }
}

TEST(Fourier, IntegerProjectionIsPeriodic) {
  // With integer W, shifting p by an integer vector leaves the features unchanged.
  const std::size_t d = 6;
  const FourierConfig cfg(2, d, {1, 0, 0, 2, 3, -1}, Mlp::identity(d));
  const std::vector<double> p{0.3, 0.7}, shifted{2.3, -4.3};
  const auto a = fourier_features(p, cfg), b = fourier_features(shifted, cfg);
  EXPECT_LT(test::max_abs_diff(a, b), 1e-12);
}

TEST(Fourier, AdditiveInFeature) {
  test::Rng rng(10);
  const auto cfg = FourierConfig::seeded(2, 12, 3);
  const std::vector<double> p{0.4, 1.9};
  const auto x = rng.normal_vector(12);
  const auto zero = fourier_embed(std::vector<double>(12, 0.0), p, cfg);
  const auto y = fourier_embed(x, p, cfg);
  for (std::size_t c = 0; c < 12; ++c) EXPECT_EQ(y[c], x[c] + zero[c]);
}

TEST(Fourier, SeededIsDeterministic) {
  const auto a = FourierConfig::seeded(2, 16, 42), b = FourierConfig::seeded(2, 16, 42);
  const auto c = FourierConfig::seeded(2, 16, 43);
  EXPECT_TRUE(std::equal(a.projection().begin(), a.projection().end(), b.projection().begin()));
  EXPECT_EQ(a.mlp().w1, b.mlp().w1);
  EXPECT_NE(a.mlp().w1, c.mlp().w1);
}

TEST(Fourier, ShapeErrors) {
  const auto cfg = FourierConfig::seeded(2, 8, 0);
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::invalid_argument;
  };
  EXPECT_EQ(code_of([&] { (void)fourier_embed(std::vector<double>(6, 0.0), std::vector<double>{0, 0}, cfg); }),
            ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([&] { (void)fourier_embed(std::vector<double>(8, 0.0), std::vector<double>{0}, cfg); }),
            ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([] { (void)FourierConfig(2, 8, std::vector<double>(7, 0.0), Mlp::identity(8)); }),
            ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([] { (void)FourierConfig(2, 8, std::vector<double>(8, 0.0), Mlp::identity(6)); }),
            ErrorCode::shape_mismatch);
}

}  // namespace
}  // namespace cfgtok
