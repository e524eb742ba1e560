#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cfgtok/scene_dpo.hpp"

namespace cfgtok {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h of a scalar
/// function at x.
template <typename Fn>
std::vector<double> central_difference_gradient(Fn&& f, std::vector<double> x, double step = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Numerical gradient of the SceneDPO total, laid out per sample as
/// (lp_pos, lp_negans, lp_negscene). Only the loss value is used.
inline std::vector<SampleGradient> dpo_numerical_gradient(std::span<const DpoSample> batch,
                                                          const SceneDPOConfig& cfg, double step = 1e-5) {
  std::vector<double> flat;
  flat.reserve(batch.size() * 3);
  for (const auto& s : batch) {
    flat.push_back(s.lp_pos);
    flat.push_back(s.lp_negans);
    flat.push_back(s.lp_negscene);
  }
  SceneDPOBatch probe(batch.begin(), batch.end());
  auto total = [&](const std::vector<double>& v) {
    for (std::size_t n = 0; n < probe.size(); ++n) {
      probe[n].lp_pos = v[3 * n];
      probe[n].lp_negans = v[3 * n + 1];
      probe[n].lp_negscene = v[3 * n + 2];
    }
    return detail::evaluate_loss(probe, cfg).total;
  };
  const auto g = central_difference_gradient(total, flat, step);
  std::vector<SampleGradient> out(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) out[n] = {g[3 * n], g[3 * n + 1], g[3 * n + 2]};
  return out;
}

/// max |analytic - numerical| over every sample and component.
inline double dpo_gradient_residual(std::span<const DpoSample> batch, const SceneDPOConfig& cfg,
                                    double step = 1e-5) {
  const auto analytic = grad(batch, cfg);
  const auto numeric = dpo_numerical_gradient(batch, cfg, step);
  double worst = 0.0;
  for (std::size_t n = 0; n < analytic.size(); ++n) {
    worst = std::max({worst, std::abs(analytic[n].d_pos - numeric[n].d_pos),
                      std::abs(analytic[n].d_negans - numeric[n].d_negans),
                      std::abs(analytic[n].d_negscene - numeric[n].d_negscene)});
  }
  return worst;
}

}  // namespace cfgtok
