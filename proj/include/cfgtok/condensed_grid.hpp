#pragma once

// Height condensation of a voxel grid into one token per occupied (i, j)
// column, horizontal position embedding, token budget and statistics.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cfgtok/error.hpp"
#include "cfgtok/position_encoding.hpp"
#include "cfgtok/voxel_grid.hpp"

namespace cfgtok {

inline constexpr std::size_t kDefaultMaxTokens = 750;

struct ColumnIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;

  auto operator<=>(const ColumnIndex&) const = default;
};

struct CondensedToken {
  ColumnIndex column;
  double x = 0.0;  // world-space column center, meters
  double y = 0.0;
  std::vector<double> feature;
  std::size_t source_voxel_count = 0;
  bool anchored = false;
};

/// Tokens are kept in row-major (i, j) order.
struct CondensedFeatureGrid {
  std::size_t dim = 0;
  std::vector<CondensedToken> tokens;
  std::size_t voxel_total = 0;
  std::size_t retained_voxel_total = 0;

  double preservation_rate() const {
    return voxel_total == 0 ? 0.0 : static_cast<double>(retained_voxel_total) / static_cast<double>(voxel_total);
  }
};

struct CFGStats {
  double compression_rate = 0.0;
  double preservation_rate = 0.0;
  std::size_t token_count = 0;
  std::size_t voxel_count = 0;
};

/// Rotates each voxel feature by its absolute height index k, then averages
/// the rotated features of every column (accumulated in ascending k).
inline CondensedFeatureGrid condense(const VoxelGrid& grid, const RoPEConfig& rope) {
  if (!grid.empty() && rope.dim() != grid.dim()) {
    throw Error(ErrorCode::dim_mismatch, "RoPE dim " + std::to_string(rope.dim()) + " != grid dim " +
                                             std::to_string(grid.dim()));
  }
  CondensedFeatureGrid out;
  out.dim = grid.dim();
  out.voxel_total = grid.size();
  out.retained_voxel_total = grid.size();

  const double s = grid.voxel_size();
  CondensedToken* current = nullptr;
  auto finish = [](CondensedToken* token) {
    if (!token) return;
    const double n = static_cast<double>(token->source_voxel_count);
    for (double& v : token->feature) v /= n;
  };

  for (const auto& [idx, cell] : grid.cells()) {
    const ColumnIndex col{idx.i, idx.j};
    if (!current || current->column != col) {
      finish(current);
      CondensedToken token;
      token.column = col;
      token.x = grid.origin().x() + (static_cast<double>(idx.i) + 0.5) * s;
      token.y = grid.origin().y() + (static_cast<double>(idx.j) + 0.5) * s;
      token.feature.assign(grid.dim(), 0.0);
      out.tokens.push_back(std::move(token));
      current = &out.tokens.back();
    }
    const auto rotated = rope_rotate(std::span<const double>(cell.feature), static_cast<double>(idx.k), rope);
    for (std::size_t c = 0; c < rotated.size(); ++c) current->feature[c] += rotated[c];
    ++current->source_voxel_count;
    current->anchored = current->anchored || cell.anchored;
  }
  finish(current);
  return out;
}

/// Adds the Fourier embedding of each token's (x, y) center to its feature.
inline CondensedFeatureGrid apply_horizontal_pe(const CondensedFeatureGrid& cfg, const FourierConfig& fourier) {
  if (fourier.input_dim() != 2) {
    throw Error(ErrorCode::shape_mismatch, "horizontal embedding needs a 2-d Fourier input, got " +
                                               std::to_string(fourier.input_dim()));
  }
  if (!cfg.tokens.empty() && fourier.dim() != cfg.dim) {
    throw Error(ErrorCode::shape_mismatch, "Fourier dim " + std::to_string(fourier.dim()) + " != token dim " +
                                               std::to_string(cfg.dim));
  }
  CondensedFeatureGrid out = cfg;
  for (auto& token : out.tokens) {
    const double xy[2] = {token.x, token.y};
    token.feature = fourier_embed(token.feature, xy, fourier);
  }
  return out;
}

/// Keeps at most `max_tokens` tokens: highest source_voxel_count first, ties
/// by ascending (i, j). Survivors stay in row-major order.
inline CondensedFeatureGrid enforce_budget(const CondensedFeatureGrid& cfg, std::size_t max_tokens = kDefaultMaxTokens) {
  if (max_tokens == 0) throw Error(ErrorCode::invalid_argument, "max_tokens must be >= 1");
  if (cfg.tokens.size() <= max_tokens) return cfg;

  std::vector<std::size_t> order(cfg.tokens.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = cfg.tokens[a];
    const auto& tb = cfg.tokens[b];
    if (ta.source_voxel_count != tb.source_voxel_count) return ta.source_voxel_count > tb.source_voxel_count;
    return ta.column < tb.column;
  });
  order.resize(max_tokens);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cfg.tokens[a].column < cfg.tokens[b].column; });

  CondensedFeatureGrid out;
  out.dim = cfg.dim;
  out.voxel_total = cfg.voxel_total;
  out.tokens.reserve(max_tokens);
  for (std::size_t idx : order) {
    out.tokens.push_back(cfg.tokens[idx]);
    out.retained_voxel_total += cfg.tokens[idx].source_voxel_count;
  }
  return out;
}

/// Ratios from the totals recorded on the grid itself.
inline CFGStats stats_from_totals(const CondensedFeatureGrid& cfg) {
  if (cfg.voxel_total == 0) throw Error(ErrorCode::empty_scene, "scene has no occupied voxels");
  CFGStats stats;
  stats.token_count = cfg.tokens.size();
  stats.voxel_count = cfg.voxel_total;
  stats.compression_rate = static_cast<double>(stats.token_count) / static_cast<double>(stats.voxel_count);
  stats.preservation_rate = cfg.preservation_rate();
  return stats;
}

inline CFGStats compute_stats(const VoxelGrid& grid, const CondensedFeatureGrid& cfg) {
  if (grid.empty()) throw Error(ErrorCode::empty_scene, "scene has no occupied voxels");
  if (cfg.voxel_total != grid.size()) {
    throw Error(ErrorCode::invalid_argument, "condensed grid records " + std::to_string(cfg.voxel_total) +
                                                 " voxels but the voxel grid has " + std::to_string(grid.size()));
  }
  return stats_from_totals(cfg);
}

}  // namespace cfgtok
