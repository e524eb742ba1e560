#pragma once

// Synthetic box-room scenes with exactly known voxel occupancy.
//
// The room is Lx x Ly columns with a floor slab at height index 0, walls on
// the perimeter, a few solid boxes and a table (top slab on four legs). Each
// frame is a top-down camera that observes one height layer. Intrinsics are
// chosen per frame so that every feature cell back-projects to the center of
// one voxel column, and pixels of an occupied cell carry the layer depth
// (with random dropouts), so the tokenized scene has exactly Lx * Ly columns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfgtok/error.hpp"
#include "cfgtok/manifest.hpp"
#include "cfgtok/random.hpp"
#include "cfgtok/tensor_io.hpp"
#include "cfgtok/voxel_grid.hpp"

namespace cfgtok {

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t frames = 50;
  std::size_t feature_size = 64;  // feature maps are feature_size x feature_size
  std::size_t pixel_scale = 2;    // depth pixels per feature cell along each axis
  std::size_t dim = 64;
  double voxel_size = 0.2;
  std::int64_t min_room = 16;
  std::int64_t max_room = 32;
  double dropout = 0.1;
  bool anchor = true;

  void validate() const {
    if (feature_size < 2 || feature_size % 2 != 0) {
      throw Error(ErrorCode::invalid_argument, "feature_size must be even and >= 2");
    }
    if (pixel_scale == 0) throw Error(ErrorCode::invalid_argument, "pixel_scale must be >= 1");
    if (dim == 0 || dim % 2 != 0) throw Error(ErrorCode::invalid_argument, "dim must be positive and even");
    if (frames == 0) throw Error(ErrorCode::invalid_argument, "frames must be >= 1");
    if (!(voxel_size > 0.0)) throw Error(ErrorCode::invalid_argument, "voxel_size must be positive");
    if (min_room < 3 || max_room < min_room || max_room > static_cast<std::int64_t>(feature_size)) {
      throw Error(ErrorCode::invalid_argument, "room size range must satisfy 3 <= min <= max <= feature_size");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::invalid_argument, "dropout must be in [0, 1)");
  }
};

struct SynthBox {
  std::int64_t i0, j0, i1, j1;  // inclusive column range
  std::int64_t k0, k1;          // inclusive height range
};

struct SynthScene {
  std::int64_t size_x = 0;
  std::int64_t size_y = 0;
  std::set<VoxelIndex> voxels;
  SynthBox table{};  // top slab footprint; legs are at its corners
};

struct SynthGroundTruth {
  std::int64_t size_x = 0;
  std::int64_t size_y = 0;
  std::size_t columns = 0;         // distinct observed (i, j)
  std::size_t voxels = 0;          // distinct observed (i, j, k)
  std::size_t layers = 0;
  std::size_t anchored_columns = 0;

  nlohmann::json to_json() const {
    return {{"size_x", size_x},   {"size_y", size_y}, {"columns", columns},
            {"voxels", voxels},   {"layers", layers}, {"anchored_columns", anchored_columns}};
  }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_seed(std::uint64_t seed, std::int64_t a, std::int64_t b = 0, std::int64_t c = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(a));
  h = mix64(h ^ static_cast<std::uint64_t>(b));
  return mix64(h ^ static_cast<std::uint64_t>(c));
}

inline void fill_box(std::set<VoxelIndex>& v, const SynthBox& b) {
  for (auto i = b.i0; i <= b.i1; ++i)
    for (auto j = b.j0; j <= b.j1; ++j)
      for (auto k = b.k0; k <= b.k1; ++k) v.insert({i, j, k});
}

}  // namespace detail

inline SynthScene make_synth_scene(const SynthOptions& opt) {
  opt.validate();
  GaussianSampler rng(detail::hash_seed(opt.seed, 1));
  SynthScene s;
  s.size_x = rng.uniform_int(opt.min_room, opt.max_room);
  s.size_y = rng.uniform_int(opt.min_room, opt.max_room);
  const auto lx = s.size_x, ly = s.size_y;

  detail::fill_box(s.voxels, {0, 0, lx - 1, ly - 1, 0, 0});
  const auto wall_h = rng.uniform_int(6, 12);
  detail::fill_box(s.voxels, {0, 0, lx - 1, 0, 0, wall_h - 1});
  detail::fill_box(s.voxels, {0, ly - 1, lx - 1, ly - 1, 0, wall_h - 1});
  detail::fill_box(s.voxels, {0, 0, 0, ly - 1, 0, wall_h - 1});
  detail::fill_box(s.voxels, {lx - 1, 0, lx - 1, ly - 1, 0, wall_h - 1});

  // Footprints stay inside the walls: interior columns are 1..L-2.
  auto footprint = [&](std::int64_t max_extent, std::int64_t room) {
    const auto extent = std::min(rng.uniform_int(2, max_extent), room - 2);
    const auto start = rng.uniform_int(1, room - 1 - extent);
    return std::pair{start, start + extent - 1};
  };
  const auto boxes = rng.uniform_int(2, 4);
  for (std::int64_t n = 0; n < boxes; ++n) {
    const auto [i0, i1] = footprint(5, lx);
    const auto [j0, j1] = footprint(5, ly);
    detail::fill_box(s.voxels, {i0, j0, i1, j1, 0, rng.uniform_int(1, 5) - 1});
  }
  const auto [ti0, ti1] = footprint(6, lx);
  const auto [tj0, tj1] = footprint(6, ly);
  const auto top = rng.uniform_int(3, 5);
  s.table = {ti0, tj0, ti1, tj1, top, top};
  detail::fill_box(s.voxels, s.table);
  for (auto i : {ti0, ti1})
    for (auto j : {tj0, tj1}) detail::fill_box(s.voxels, {i, j, i, j, 0, top - 1});
  return s;
}

/// Writes frames, the anchor vector, manifest.json and ground_truth.json
/// into `dir`. Output depends only on the options.
inline SynthGroundTruth write_synth_scene(const std::filesystem::path& dir, const SynthOptions& opt) {
  opt.validate();
  const SynthScene scene = make_synth_scene(opt);
  std::filesystem::create_directories(dir / "frames");

  std::vector<std::int64_t> layers;
  for (const auto& v : scene.voxels) layers.push_back(v.k);
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());

  const auto w = static_cast<std::int64_t>(opt.feature_size);
  const auto s = static_cast<std::int64_t>(opt.pixel_scale);
  const auto big = w * s;
  const double vs = opt.voxel_size;

  std::map<VoxelIndex, std::vector<float>> base_features;
  auto base_feature = [&](const VoxelIndex& v) -> const std::vector<float>& {
    auto [it, inserted] = base_features.try_emplace(v);
    if (inserted) {
      GaussianSampler g(detail::hash_seed(opt.seed, 7 + v.i, v.j, v.k));
      it->second.resize(opt.dim);
      for (auto& x : it->second) x = static_cast<float>(g());
    }
    return it->second;
  };

  SceneManifest manifest;
  manifest.base_dir = dir;
  manifest.settings.voxel_size = vs;
  manifest.settings.fourier_seed = opt.seed;

  std::set<VoxelIndex> observed;
  GaussianSampler rng(detail::hash_seed(opt.seed, 2));
  for (std::size_t f = 0; f < opt.frames; ++f) {
    const std::int64_t layer = layers[f % layers.size()];
    const std::int64_t yaw = rng.uniform_int(0, 3);
    const double depth = static_cast<double>(static_cast<float>(1.0 + 2.0 * rng.uniform()));
    // Camera column (a, b): the w x w window of columns around it covers the room.
    const auto a = rng.uniform_int(scene.size_x - w / 2, w / 2);
    const auto b = rng.uniform_int(scene.size_y - w / 2, w / 2);
    static constexpr int kCos[4] = {1, 0, -1, 0};
    static constexpr int kSin[4] = {0, 1, 0, -1};
    const int c = kCos[yaw], sn = kSin[yaw];

    FrameEntry e;
    char name[32];
    std::snprintf(name, sizeof(name), "f%03zu", f);
    e.frame_id = name;
    e.depth = std::filesystem::path("frames") / (e.frame_id + "_depth.cfgt");
    e.features = std::filesystem::path("frames") / (e.frame_id + "_feat.cfgt");
    e.fx = e.fy = static_cast<double>(s) * depth / vs;
    e.cx = e.cy = static_cast<double>(big - 1) / 2.0;
    // Camera looks down world -z; yaw rotates about world z.
    e.pose = {double(c), double(sn), 0.0, static_cast<double>(a) * vs,
              double(sn), double(-c), 0.0, static_cast<double>(b) * vs,
              0.0, 0.0, -1.0, (static_cast<double>(layer) + 0.5) * vs + depth,
              0.0, 0.0, 0.0, 1.0};

    Tensor depth_t{{static_cast<std::uint64_t>(big), static_cast<std::uint64_t>(big)},
                   std::vector<float>(static_cast<std::size_t>(big * big), 0.0f)};
    Tensor feat_t{{static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(w), opt.dim},
                  std::vector<float>(static_cast<std::size_t>(w * w) * opt.dim, 0.0f)};
    GaussianSampler noise(detail::hash_seed(opt.seed, 3, static_cast<std::int64_t>(f)));
    std::size_t dropped = 0;
    for (std::int64_t r = 0; r < w; ++r) {
      for (std::int64_t col = 0; col < w; ++col) {
        // Camera-plane offset of the cell center in half-voxel units (odd).
        const std::int64_t hx = 2 * col - (w - 1), hy = -(2 * r - (w - 1));
        const std::int64_t ex = c * hx - sn * hy, ey = sn * hx + c * hy;
        // Center (i + 0.5) * vs = a * vs + ex * vs / 2, and 2a + ex - 1 is even.
        const VoxelIndex vox{(2 * a + ex - 1) / 2, (2 * b + ey - 1) / 2, layer};
        if (!scene.voxels.contains(vox)) continue;
        observed.insert(vox);
        for (std::int64_t py = 0; py < s; ++py) {
          for (std::int64_t px = 0; px < s; ++px) {
            const bool keep = (px == 0 && py == 0) || noise.uniform() >= opt.dropout;
            float value = static_cast<float>(depth);
            if (!keep) value = (dropped++ % 2 == 0) ? 0.0f : std::numeric_limits<float>::quiet_NaN();
            depth_t.data[static_cast<std::size_t>((r * s + py) * big + col * s + px)] = value;
          }
        }
        const auto& bf = base_feature(vox);
        float* dst = &feat_t.data[static_cast<std::size_t>(r * w + col) * opt.dim];
        for (std::size_t d = 0; d < opt.dim; ++d) dst[d] = bf[d] + 0.1f * static_cast<float>(noise());
      }
    }
    save_tensor(dir / e.depth, depth_t);
    save_tensor(dir / e.features, feat_t);
    manifest.frames.push_back(std::move(e));
  }

  SynthGroundTruth truth;
  truth.size_x = scene.size_x;
  truth.size_y = scene.size_y;
  truth.voxels = observed.size();
  truth.layers = std::min(layers.size(), opt.frames);
  std::set<std::pair<std::int64_t, std::int64_t>> cols;
  for (const auto& v : observed) cols.insert({v.i, v.j});
  truth.columns = cols.size();

  if (opt.anchor) {
    const auto& t = scene.table;
    AnchorEntry anchor;
    anchor.box = AxisAlignedBox{Eigen::Vector3d(static_cast<double>(t.i0) * vs, static_cast<double>(t.j0) * vs, 0.0),
                                Eigen::Vector3d(static_cast<double>(t.i1 + 1) * vs,
                                                static_cast<double>(t.j1 + 1) * vs,
                                                static_cast<double>(t.k1 + 1) * vs)};
    anchor.vector = "anchor.cfgt";
    GaussianSampler g(detail::hash_seed(opt.seed, 4));
    Tensor vec{{opt.dim}, std::vector<float>(opt.dim)};
    for (auto& x : vec.data) x = static_cast<float>(g());
    save_tensor(dir / anchor.vector, vec);
    manifest.anchor = std::move(anchor);
    std::set<std::pair<std::int64_t, std::int64_t>> anchored;
    for (const auto& v : observed) {
      if (v.i >= t.i0 && v.i <= t.i1 && v.j >= t.j0 && v.j <= t.j1 && v.k <= t.k1) anchored.insert({v.i, v.j});
    }
    truth.anchored_columns = anchored.size();
  }

  save_manifest(dir / "manifest.json", manifest);
  std::ofstream gt(dir / "ground_truth.json");
  if (!gt) throw Error(ErrorCode::io_error, "cannot write " + (dir / "ground_truth.json").string());
  gt << truth.to_json().dump(2) << '\n';
  return truth;
}

}  // namespace cfgtok
