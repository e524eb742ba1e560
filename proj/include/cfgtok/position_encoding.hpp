#pragma once

// Rotary embedding for voxel heights and Fourier features (random Gaussian
// projection + MLP) for horizontal positions.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfgtok/error.hpp"
#include "cfgtok/random.hpp"

namespace cfgtok {

class RoPEConfig {
 public:
  explicit RoPEConfig(std::size_t dim, double base = 10000.0) : dim_(dim), base_(base) {
    if (dim_ == 0 || dim_ % 2 != 0) {
      throw Error(ErrorCode::invalid_argument, "RoPE dim must be positive and even, got " + std::to_string(dim_));
    }
    if (!(std::isfinite(base_) && base_ > 1.0)) {
      throw Error(ErrorCode::invalid_argument, "RoPE base must be > 1");
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  double base() const noexcept { return base_; }

  /// theta_i = base^(-2i/d) for the 1-based pair index i = 1..d/2.
  double theta(std::size_t i) const {
    return std::pow(base_, -2.0 * static_cast<double>(i) / static_cast<double>(dim_));
  }

 private:
  std::size_t dim_;
  double base_;
};

/// Applies the block-diagonal rotation R_p: pair (x_{2i-1}, x_{2i}) turns by
/// angle p * theta_i.
template <typename T>
std::vector<T> rope_rotate(std::span<const T> x, double position, const RoPEConfig& cfg) {
  if (x.size() != cfg.dim()) {
    throw Error(ErrorCode::dim_mismatch, "RoPE input dim " + std::to_string(x.size()) + " != " +
                                             std::to_string(cfg.dim()));
  }
  std::vector<T> out(x.size());
  for (std::size_t i = 1; i <= cfg.dim() / 2; ++i) {
    const double angle = position * cfg.theta(i);
    const T c = static_cast<T>(std::cos(angle));
    const T s = static_cast<T>(std::sin(angle));
    const T a = x[2 * i - 2];
    const T b = x[2 * i - 1];
    out[2 * i - 2] = c * a - s * b;
    out[2 * i - 1] = s * a + c * b;
  }
  return out;
}

inline std::vector<double> rope_rotate(const std::vector<double>& x, double position, const RoPEConfig& cfg) {
  return rope_rotate(std::span<const double>(x), position, cfg);
}

/// |<R_{p1} x, R_{p2} y> - <x, R_{p2-p1} y>|; zero up to rounding.
inline double rope_relative_check(std::span<const double> x, std::span<const double> y, double p1, double p2,
                                  const RoPEConfig& cfg) {
  const auto rx = rope_rotate(x, p1, cfg);
  const auto ry = rope_rotate(y, p2, cfg);
  const auto rel = rope_rotate(y, p2 - p1, cfg);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    lhs += rx[n] * ry[n];
    rhs += x[n] * rel[n];
  }
  return std::abs(lhs - rhs);
}

enum class Activation { gelu, identity };

inline double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); }

/// Two affine layers with an activation between: out = W2 act(W1 x + b1) + b2.
/// Weights are row-major (out x in).
struct Mlp {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  std::vector<double> w1, b1, w2, b2;
  Activation activation = Activation::gelu;

  void validate() const {
    if (w1.size() != hidden_dim * input_dim || b1.size() != hidden_dim || w2.size() != output_dim * hidden_dim ||
        b2.size() != output_dim) {
      throw Error(ErrorCode::shape_mismatch, "MLP weight shapes do not compose " + std::to_string(input_dim) +
                                                 " -> " + std::to_string(hidden_dim) + " -> " +
                                                 std::to_string(output_dim));
    }
    for (const auto* v : {&w1, &b1, &w2, &b2}) {
      for (double e : *v) {
        if (!std::isfinite(e)) throw Error(ErrorCode::invalid_argument, "MLP weights must be finite");
      }
    }
  }

  std::vector<double> operator()(std::span<const double> in) const {
    std::vector<double> hidden(b1);
    for (std::size_t r = 0; r < hidden_dim; ++r) {
      const double* row = &w1[r * input_dim];
      for (std::size_t c = 0; c < input_dim; ++c) hidden[r] += row[c] * in[c];
      if (activation == Activation::gelu) hidden[r] = gelu(hidden[r]);
    }
    std::vector<double> out(b2);
    for (std::size_t r = 0; r < output_dim; ++r) {
      const double* row = &w2[r * hidden_dim];
      for (std::size_t c = 0; c < hidden_dim; ++c) out[r] += row[c] * hidden[c];
    }
    return out;
  }

  /// Identity layers (W = I, b = 0) with the activation bypassed.
  static Mlp identity(std::size_t dim) {
    Mlp m{dim, dim, dim, std::vector<double>(dim * dim, 0.0), std::vector<double>(dim, 0.0),
          std::vector<double>(dim * dim, 0.0), std::vector<double>(dim, 0.0), Activation::identity};
    for (std::size_t n = 0; n < dim; ++n) m.w1[n * dim + n] = m.w2[n * dim + n] = 1.0;
    return m;
  }

  /// GELU MLP whose final layer is all zeros; always outputs zero.
  static Mlp zero_output(std::size_t dim) {
    Mlp m = identity(dim);
    m.activation = Activation::gelu;
    m.w2.assign(dim * dim, 0.0);
    return m;
  }
};

class FourierConfig {
 public:
  /// `projection` is the (dim/2) x input_dim matrix W, row-major.
  FourierConfig(std::size_t input_dim, std::size_t dim, std::vector<double> projection, Mlp mlp)
      : input_dim_(input_dim), dim_(dim), projection_(std::move(projection)), mlp_(std::move(mlp)) {
    if (input_dim_ == 0) throw Error(ErrorCode::invalid_argument, "Fourier input dim must be positive");
    if (dim_ == 0 || dim_ % 2 != 0) {
      throw Error(ErrorCode::invalid_argument, "Fourier dim must be positive and even, got " + std::to_string(dim_));
    }
    if (projection_.size() != (dim_ / 2) * input_dim_) {
      throw Error(ErrorCode::shape_mismatch, "projection W has " + std::to_string(projection_.size()) +
                                                 " values, expected " + std::to_string(dim_ / 2) + "x" +
                                                 std::to_string(input_dim_));
    }
    for (double v : projection_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "projection W must be finite");
    }
    if (mlp_.input_dim != dim_ || mlp_.output_dim != dim_) {
      throw Error(ErrorCode::shape_mismatch, "MLP must map " + std::to_string(dim_) + " -> " + std::to_string(dim_));
    }
    mlp_.validate();
  }

  /// W ~ N(0, 1); MLP hidden width = dim, weights ~ N(0, 1/fan_in), zero
  /// biases, GELU. Fully determined by `seed`.
  static FourierConfig seeded(std::size_t input_dim, std::size_t dim, std::uint64_t seed) {
    GaussianSampler gauss(seed);
    std::vector<double> w((dim / 2) * input_dim);
    for (double& v : w) v = gauss();
    Mlp mlp{dim, dim, dim, std::vector<double>(dim * dim), std::vector<double>(dim, 0.0),
            std::vector<double>(dim * dim), std::vector<double>(dim, 0.0), Activation::gelu};
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& v : mlp.w1) v = gauss() * scale;
    for (double& v : mlp.w2) v = gauss() * scale;
    return FourierConfig(input_dim, dim, std::move(w), std::move(mlp));
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> projection() const noexcept { return projection_; }
  const Mlp& mlp() const noexcept { return mlp_; }

 private:
  std::size_t input_dim_;
  std::size_t dim_;
  std::vector<double> projection_;
  Mlp mlp_;
};

/// F = [cos(2 pi W p) || sin(2 pi W p)], unscaled.
inline std::vector<double> fourier_features(std::span<const double> position, const FourierConfig& cfg) {
  if (position.size() != cfg.input_dim()) {
    throw Error(ErrorCode::shape_mismatch, "position has " + std::to_string(position.size()) +
                                               " coordinates, expected " + std::to_string(cfg.input_dim()));
  }
  const std::size_t half = cfg.dim() / 2;
  const auto w = cfg.projection();
  std::vector<double> f(cfg.dim());
  for (std::size_t r = 0; r < half; ++r) {
    double proj = 0.0;
    for (std::size_t c = 0; c < cfg.input_dim(); ++c) proj += w[r * cfg.input_dim() + c] * position[c];
    const double angle = 2.0 * std::numbers::pi * proj;
    f[r] = std::cos(angle);
    f[half + r] = std::sin(angle);
  }
  return f;
}

/// Positional term MLP(F / sqrt(d)); independent of the feature vector.
inline std::vector<double> fourier_position_embedding(std::span<const double> position, const FourierConfig& cfg) {
  auto f = fourier_features(position, cfg);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim()));
  for (double& v : f) v *= scale;
  return cfg.mlp()(f);
}

/// x + MLP(F / sqrt(d)).
inline std::vector<double> fourier_embed(std::span<const double> x, std::span<const double> position,
                                         const FourierConfig& cfg) {
  if (x.size() != cfg.dim()) {
    throw Error(ErrorCode::shape_mismatch, "feature dim " + std::to_string(x.size()) + " != Fourier dim " +
                                               std::to_string(cfg.dim()));
  }
  const auto pe = fourier_position_embedding(position, cfg);
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += pe[n];
  return out;
}

}  // namespace cfgtok
