#pragma once

// SceneDPO objective over precomputed sequence log-probabilities:
//   L = w_a * L_a + w_s * L_s + L_nll
// where L_a contrasts the positive answer with a negative answer on the
// positive scene, L_s contrasts the positive answer on the positive scene
// with the same answer on a negative scene, and L_nll is the negative
// log-likelihood of the positive answer. All terms are batch means.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfgtok/error.hpp"

namespace cfgtok {

struct SceneDPOConfig {
  double w_a = 0.5;
  double w_s = 0.5;
  double beta_a = 0.2;
  double beta_s = 0.03;
  bool reference_free = true;

  void validate() const {
    if (!(w_a >= 0.0) || !(w_s >= 0.0) || !std::isfinite(w_a) || !std::isfinite(w_s)) {
      throw Error(ErrorCode::invalid_argument, "loss weights must be finite and non-negative");
    }
    if (!(beta_a > 0.0) || !(beta_s > 0.0) || !std::isfinite(beta_a) || !std::isfinite(beta_s)) {
      throw Error(ErrorCode::invalid_argument, "beta_a and beta_s must be finite and positive");
    }
  }
};

struct ReferenceLogProbs {
  double pos = 0.0;
  double negans = 0.0;
  double negscene = 0.0;
};

/// log pi(a+ | s+, q), log pi(a- | s+, q), log pi(a+ | s-, q) for one tuple.
struct DpoSample {
  double lp_pos = 0.0;
  double lp_negans = 0.0;
  double lp_negscene = 0.0;
  std::optional<ReferenceLogProbs> ref;
};

using SceneDPOBatch = std::vector<DpoSample>;

struct SceneDPOLoss {
  double total = 0.0;
  double answer = 0.0;  // L_a
  double scene = 0.0;   // L_s
  double nll = 0.0;     // L_nll
};

struct SampleGradient {
  double d_pos = 0.0;
  double d_negans = 0.0;
  double d_negscene = 0.0;
};

struct DpoAccuracy {
  double answer = 0.0;
  double scene = 0.0;
};

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void validate_batch(std::span<const DpoSample> batch, const SceneDPOConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw Error(ErrorCode::invalid_argument, "batch is empty");
  auto check = [](double v, const char* field, std::size_t n) {
    if (!std::isfinite(v) || v > 0.0) {
      throw Error(ErrorCode::invalid_argument, std::string(field) + " of sample " + std::to_string(n) +
                                                   " must be a finite log-probability <= 0");
    }
  };
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& s = batch[n];
    check(s.lp_pos, "lp_pos", n);
    check(s.lp_negans, "lp_negans", n);
    check(s.lp_negscene, "lp_negscene", n);
    if (!cfg.reference_free) {
      if (!s.ref) throw Error(ErrorCode::missing_reference, "ref_pos of sample " + std::to_string(n) + " is missing");
      check(s.ref->pos, "ref_pos", n);
      check(s.ref->negans, "ref_negans", n);
      check(s.ref->negscene, "ref_negscene", n);
    }
  }
}

struct ContrastMargins {
  double answer = 0.0;  // z_a
  double scene = 0.0;   // z_s
};

/// z_a, z_s for one sample. Reference terms are zero in reference-free mode.
inline ContrastMargins contrast_margins(const DpoSample& s, const SceneDPOConfig& cfg) {
  const ReferenceLogProbs ref = (cfg.reference_free || !s.ref) ? ReferenceLogProbs{} : *s.ref;
  const double pos = s.lp_pos - ref.pos;
  return {cfg.beta_a * (pos - (s.lp_negans - ref.negans)), cfg.beta_s * (pos - (s.lp_negscene - ref.negscene))};
}

namespace detail {

// No input validation; finite-difference probes may step past lp = 0.
inline SceneDPOLoss evaluate_loss(std::span<const DpoSample> batch, const SceneDPOConfig& cfg) {
  SceneDPOLoss out;
  for (const auto& s : batch) {
    const auto z = contrast_margins(s, cfg);
    out.answer += softplus(-z.answer);
    out.scene += softplus(-z.scene);
    out.nll += -s.lp_pos;
  }
  const double n = static_cast<double>(batch.size());
  out.answer /= n;
  out.scene /= n;
  out.nll /= n;
  out.total = cfg.w_a * out.answer + cfg.w_s * out.scene + out.nll;
  return out;
}

}  // namespace detail

inline SceneDPOLoss loss(std::span<const DpoSample> batch, const SceneDPOConfig& cfg) {
  validate_batch(batch, cfg);
  return detail::evaluate_loss(batch, cfg);
}

/// d total / d lp_* per sample. References are constants, so the same
/// expressions hold in both modes.
inline std::vector<SampleGradient> grad(std::span<const DpoSample> batch, const SceneDPOConfig& cfg) {
  validate_batch(batch, cfg);
  const double n = static_cast<double>(batch.size());
  std::vector<SampleGradient> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    const auto z = contrast_margins(s, cfg);
    const double ga = cfg.w_a * cfg.beta_a * sigmoid(-z.answer);
    const double gs = cfg.w_s * cfg.beta_s * sigmoid(-z.scene);
    out.push_back({-(ga + gs + 1.0) / n, ga / n, gs / n});
  }
  return out;
}

/// Fraction of samples with lp_pos strictly above each negative.
inline DpoAccuracy accuracy_metrics(std::span<const DpoSample> batch) {
  if (batch.empty()) throw Error(ErrorCode::invalid_argument, "batch is empty");
  std::size_t answer_wins = 0, scene_wins = 0;
  for (const auto& s : batch) {
    answer_wins += s.lp_pos > s.lp_negans ? 1 : 0;
    scene_wins += s.lp_pos > s.lp_negscene ? 1 : 0;
  }
  const double n = static_cast<double>(batch.size());
  return {static_cast<double>(answer_wins) / n, static_cast<double>(scene_wins) / n};
}

}  // namespace cfgtok
