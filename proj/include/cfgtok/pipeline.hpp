#pragma once

// End-to-end tokenization:
//   back-project frames -> merge -> voxelize -> anchor -> condense (RoPE on
//   height) -> Fourier embedding of (x, y) -> token budget -> token file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cfgtok/condensed_grid.hpp"
#include "cfgtok/fourier_weights.hpp"
#include "cfgtok/geometry.hpp"
#include "cfgtok/manifest.hpp"
#include "cfgtok/position_encoding.hpp"
#include "cfgtok/token_file.hpp"
#include "cfgtok/voxel_grid.hpp"

namespace cfgtok {

struct TokenizeOptions {
  double voxel_size = 0.2;
  std::size_t max_tokens = kDefaultMaxTokens;
  double rope_base = 10000.0;
  std::uint64_t fourier_seed = 0;
  // Takes precedence over the seed when set.
  std::optional<std::filesystem::path> fourier_weights;

  static TokenizeOptions from_settings(const SceneManifest& m) {
    TokenizeOptions o;
    o.voxel_size = m.settings.voxel_size;
    o.max_tokens = m.settings.max_tokens;
    o.rope_base = m.settings.rope_base;
    if (m.settings.fourier_seed) o.fourier_seed = *m.settings.fourier_seed;
    if (m.settings.fourier_weights) o.fourier_weights = m.resolve(*m.settings.fourier_weights);
    return o;
  }
};

struct TokenizeResult {
  VoxelGrid grid;
  std::size_t point_count = 0;
  std::size_t pre_budget_token_count = 0;
  CondensedFeatureGrid tokens;
  CFGStats stats;
  TokenFile file;
};

inline FourierConfig make_fourier_config(const TokenizeOptions& options, std::size_t dim) {
  if (options.fourier_weights) {
    FourierConfig cfg = load_fourier_weights(*options.fourier_weights);
    if (cfg.dim() != dim || cfg.input_dim() != 2) {
      throw Error(ErrorCode::shape_mismatch, options.fourier_weights->string() + ": weights are for dim " +
                                                 std::to_string(cfg.dim()) + " with " +
                                                 std::to_string(cfg.input_dim()) + "-d positions, scene needs dim " +
                                                 std::to_string(dim) + " with 2-d positions");
    }
    return cfg;
  }
  return FourierConfig::seeded(2, dim, options.fourier_seed);
}

/// Everything after the merged cloud.
inline TokenizeResult tokenize_cloud(const PointFeatureCloud& cloud, const std::optional<AnchorRegion>& anchor,
                                     const TokenizeOptions& options) {
  VoxelGridConfig grid_cfg;
  grid_cfg.voxel_size = options.voxel_size;
  VoxelGrid grid = voxelize(cloud, grid_cfg);
  if (grid.empty()) throw Error(ErrorCode::empty_scene, "no valid depth in any frame");
  if (anchor) grid = inject_anchor(grid, *anchor);

  const RoPEConfig rope(grid.dim(), options.rope_base);
  const FourierConfig fourier = make_fourier_config(options, grid.dim());

  CondensedFeatureGrid condensed = condense(grid, rope);
  const std::size_t pre_budget = condensed.tokens.size();
  CondensedFeatureGrid tokens = enforce_budget(apply_horizontal_pe(condensed, fourier), options.max_tokens);
  const CFGStats stats = compute_stats(grid, tokens);
  TokenFile file = make_token_file(tokens, grid);
  return TokenizeResult{std::move(grid), cloud.size(), pre_budget, std::move(tokens), stats, std::move(file)};
}

inline TokenizeResult tokenize_captures(std::span<const FramedCapture> captures,
                                        const std::optional<AnchorRegion>& anchor, const TokenizeOptions& options) {
  std::vector<PointFeatureCloud> clouds;
  clouds.reserve(captures.size());
  for (const auto& c : captures) clouds.push_back(back_project_frame(c));
  return tokenize_cloud(merge_clouds(clouds), anchor, options);
}

/// Frames are loaded and back-projected one at a time.
inline TokenizeResult tokenize_manifest(const SceneManifest& manifest, const TokenizeOptions& options) {
  if (manifest.frames.empty()) throw Error(ErrorCode::empty_scene, "manifest lists no frames");
  std::vector<PointFeatureCloud> clouds;
  clouds.reserve(manifest.frames.size());
  for (const auto& f : manifest.frames) clouds.push_back(back_project_frame(load_capture(manifest, f)));
  std::optional<AnchorRegion> anchor;
  if (manifest.anchor) anchor = load_anchor(manifest);
  return tokenize_cloud(merge_clouds(clouds), anchor, options);
}

}  // namespace cfgtok
