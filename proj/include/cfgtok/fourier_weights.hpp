#pragma once

// Fourier projection + MLP weights stored as a named tensor bundle with
// entries W (d/2 x n), mlp.w1 (hidden x d), mlp.b1 (hidden),
// mlp.w2 (d x hidden), mlp.b2 (d).

#include <filesystem>
#include <string>
#include <vector>

#include "cfgtok/position_encoding.hpp"
#include "cfgtok/tensor_io.hpp"

namespace cfgtok {

namespace detail {

inline std::vector<double> widen(const Tensor& t) { return {t.data.begin(), t.data.end()}; }

inline Tensor narrow(std::vector<std::uint64_t> shape, const std::vector<double>& values) {
  return {std::move(shape), std::vector<float>(values.begin(), values.end())};
}

inline void expect_shape(const Tensor& t, const std::vector<std::uint64_t>& shape, const std::string& name) {
  if (t.shape != shape) {
    std::string want, got;
    for (auto d : shape) want += (want.empty() ? "" : "x") + std::to_string(d);
    for (auto d : t.shape) got += (got.empty() ? "" : "x") + std::to_string(d);
    throw Error(ErrorCode::shape_mismatch, "weight '" + name + "' has shape " + got + ", expected " + want);
  }
}

}  // namespace detail

inline FourierConfig load_fourier_weights(const std::filesystem::path& path) {
  const auto entries = load_bundle(path);
  try {
    const Tensor& w = find_entry(entries, "W");
    if (w.shape.size() != 2) throw Error(ErrorCode::shape_mismatch, "weight 'W' must be rank 2");
    const std::uint64_t half = w.shape[0], n = w.shape[1];
    const std::uint64_t d = 2 * half;
    const Tensor& w1 = find_entry(entries, "mlp.w1");
    if (w1.shape.size() != 2) throw Error(ErrorCode::shape_mismatch, "weight 'mlp.w1' must be rank 2");
    const std::uint64_t hidden = w1.shape[0];
    detail::expect_shape(w1, {hidden, d}, "mlp.w1");
    const Tensor& b1 = find_entry(entries, "mlp.b1");
    detail::expect_shape(b1, {hidden}, "mlp.b1");
    const Tensor& w2 = find_entry(entries, "mlp.w2");
    detail::expect_shape(w2, {d, hidden}, "mlp.w2");
    const Tensor& b2 = find_entry(entries, "mlp.b2");
    detail::expect_shape(b2, {d}, "mlp.b2");

    Mlp mlp{d, hidden, d, detail::widen(w1), detail::widen(b1), detail::widen(w2), detail::widen(b2),
            Activation::gelu};
    return FourierConfig(n, d, detail::widen(w), std::move(mlp));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

/// Stored as float32; a reloaded config equals the original rounded to float.
inline void save_fourier_weights(const std::filesystem::path& path, const FourierConfig& cfg) {
  const auto d = static_cast<std::uint64_t>(cfg.dim());
  const auto& mlp = cfg.mlp();
  const auto hidden = static_cast<std::uint64_t>(mlp.hidden_dim);
  const std::vector<double> w(cfg.projection().begin(), cfg.projection().end());
  save_bundle(path, {
                        {"W", detail::narrow({d / 2, cfg.input_dim()}, w)},
                        {"mlp.w1", detail::narrow({hidden, d}, mlp.w1)},
                        {"mlp.b1", detail::narrow({hidden}, mlp.b1)},
                        {"mlp.w2", detail::narrow({d, hidden}, mlp.w2)},
                        {"mlp.b2", detail::narrow({d}, mlp.b2)},
                    });
}

}  // namespace cfgtok
