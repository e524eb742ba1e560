#pragma once

// Scene manifest: a JSON file listing posed frames (depth + feature tensors),
// an optional anchor region and tokenizer settings. Relative paths resolve
// against the manifest's directory.
//
// {
//   "version": 1,
//   "settings": {"voxel_size": 0.2, "max_tokens": 750, "rope_base": 10000,
//                "fourier_seed": 0  |  "fourier_weights": "weights.cfgb"},
//   "frames": [{"frame_id": "f000", "depth": "f000_depth.cfgt",
//               "features": "f000_feat.cfgt",
//               "intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0},
//               "pose": [16 numbers, row-major camera-to-world]}],
//   "anchor": {"box": {"min": [x, y, z], "max": [x, y, z]}  |  "voxels": [[i, j, k], ...],
//              "vector": "anchor.cfgt"}
// }

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfgtok/error.hpp"
#include "cfgtok/geometry.hpp"
#include "cfgtok/tensor_io.hpp"
#include "cfgtok/voxel_grid.hpp"

namespace cfgtok {

struct FrameEntry {
  std::string frame_id;
  std::filesystem::path depth;
  std::filesystem::path features;
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  std::array<double, 16> pose{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
};

struct AnchorEntry {
  std::optional<AxisAlignedBox> box;
  std::set<VoxelIndex> voxels;
  std::filesystem::path vector;
};

struct ManifestSettings {
  double voxel_size = 0.2;
  std::size_t max_tokens = 750;
  double rope_base = 10000.0;
  std::optional<std::uint64_t> fourier_seed;
  std::optional<std::filesystem::path> fourier_weights;
};

struct SceneManifest {
  std::filesystem::path base_dir;
  ManifestSettings settings;
  std::vector<FrameEntry> frames;
  std::optional<AnchorEntry> anchor;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return base_dir / p; }
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::parse_error, where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

template <typename T>
T get_as(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, where + ": " + e.what());
  }
}

inline Eigen::Vector3d get_vec3(const json& v, const std::string& where) {
  const auto a = get_as<std::vector<double>>(v, where);
  if (a.size() != 3) throw Error(ErrorCode::parse_error, where + ": expected 3 numbers");
  return {a[0], a[1], a[2]};
}

}  // namespace detail

inline SceneManifest parse_manifest(const nlohmann::json& root, const std::filesystem::path& base_dir,
                                    const std::string& source) {
  using detail::get_as;
  using detail::require;
  SceneManifest m;
  m.base_dir = base_dir;
  if (!root.is_object()) throw Error(ErrorCode::parse_error, source + ": manifest must be a JSON object");
  if (root.contains("version") && get_as<int>(root.at("version"), source + ": version") != 1) {
    throw Error(ErrorCode::parse_error, source + ": unsupported manifest version");
  }

  if (root.contains("settings")) {
    const auto& s = root.at("settings");
    const std::string where = source + ": settings";
    if (s.contains("voxel_size")) m.settings.voxel_size = get_as<double>(s.at("voxel_size"), where + ".voxel_size");
    if (s.contains("max_tokens")) m.settings.max_tokens = get_as<std::size_t>(s.at("max_tokens"), where + ".max_tokens");
    if (s.contains("rope_base")) m.settings.rope_base = get_as<double>(s.at("rope_base"), where + ".rope_base");
    if (s.contains("fourier_seed")) {
      m.settings.fourier_seed = get_as<std::uint64_t>(s.at("fourier_seed"), where + ".fourier_seed");
    }
    if (s.contains("fourier_weights")) {
      m.settings.fourier_weights = get_as<std::string>(s.at("fourier_weights"), where + ".fourier_weights");
    }
    if (m.settings.fourier_seed && m.settings.fourier_weights) {
      throw Error(ErrorCode::parse_error, where + ": give fourier_seed or fourier_weights, not both");
    }
  }

  const auto& frames = require(root, "frames", source);
  if (!frames.is_array()) throw Error(ErrorCode::parse_error, source + ": 'frames' must be an array");
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const auto& f = frames[n];
    const std::string where = source + ": frames[" + std::to_string(n) + "]";
    FrameEntry e;
    e.frame_id = f.contains("frame_id") ? get_as<std::string>(f.at("frame_id"), where + ".frame_id")
                                        : "frame" + std::to_string(n);
    e.depth = get_as<std::string>(require(f, "depth", where), where + ".depth");
    e.features = get_as<std::string>(require(f, "features", where), where + ".features");
    const auto& k = require(f, "intrinsics", where);
    e.fx = get_as<double>(require(k, "fx", where + ".intrinsics"), where + ".intrinsics.fx");
    e.fy = get_as<double>(require(k, "fy", where + ".intrinsics"), where + ".intrinsics.fy");
    e.cx = get_as<double>(require(k, "cx", where + ".intrinsics"), where + ".intrinsics.cx");
    e.cy = get_as<double>(require(k, "cy", where + ".intrinsics"), where + ".intrinsics.cy");
    const auto pose = get_as<std::vector<double>>(require(f, "pose", where), where + ".pose");
    if (pose.size() != 16) throw Error(ErrorCode::parse_error, where + ".pose: expected 16 numbers");
    std::copy(pose.begin(), pose.end(), e.pose.begin());
    try {
      (void)CameraIntrinsics(e.fx, e.fy, e.cx, e.cy);
      (void)CameraPose::from_row_major(e.pose);
    } catch (const Error& err) {
      throw Error(ErrorCode::parse_error, where + ": " + err.detail());
    }
    m.frames.push_back(std::move(e));
  }

  if (root.contains("anchor") && !root.at("anchor").is_null()) {
    const auto& a = root.at("anchor");
    const std::string where = source + ": anchor";
    AnchorEntry anchor;
    anchor.vector = get_as<std::string>(require(a, "vector", where), where + ".vector");
    if (a.contains("box")) {
      const auto& b = a.at("box");
      anchor.box = AxisAlignedBox{detail::get_vec3(require(b, "min", where + ".box"), where + ".box.min"),
                                  detail::get_vec3(require(b, "max", where + ".box"), where + ".box.max")};
      if ((anchor.box->min.array() > anchor.box->max.array()).any()) {
        throw Error(ErrorCode::parse_error, where + ".box: min must be <= max");
      }
    } else if (a.contains("voxels")) {
      for (const auto& v : get_as<std::vector<std::array<std::int64_t, 3>>>(a.at("voxels"), where + ".voxels")) {
        anchor.voxels.insert({v[0], v[1], v[2]});
      }
    } else {
      throw Error(ErrorCode::parse_error, where + ": needs 'box' or 'voxels'");
    }
    m.anchor = std::move(anchor);
  }
  return m;
}

/// Parses the manifest and checks that every referenced file exists.
inline SceneManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open manifest " + path.string());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
  SceneManifest m = parse_manifest(root, path.parent_path(), path.string());
  auto must_exist = [&](const std::filesystem::path& p) {
    const auto full = m.resolve(p);
    if (!std::filesystem::exists(full)) throw Error(ErrorCode::io_error, "missing file " + full.string());
  };
  for (const auto& f : m.frames) {
    must_exist(f.depth);
    must_exist(f.features);
  }
  if (m.anchor) must_exist(m.anchor->vector);
  if (m.settings.fourier_weights) must_exist(*m.settings.fourier_weights);
  return m;
}

inline nlohmann::json manifest_to_json(const SceneManifest& m) {
  nlohmann::json root;
  root["version"] = 1;
  auto& s = root["settings"];
  s["voxel_size"] = m.settings.voxel_size;
  s["max_tokens"] = m.settings.max_tokens;
  s["rope_base"] = m.settings.rope_base;
  if (m.settings.fourier_seed) s["fourier_seed"] = *m.settings.fourier_seed;
  if (m.settings.fourier_weights) s["fourier_weights"] = m.settings.fourier_weights->generic_string();
  root["frames"] = nlohmann::json::array();
  for (const auto& f : m.frames) {
    root["frames"].push_back({{"frame_id", f.frame_id},
                              {"depth", f.depth.generic_string()},
                              {"features", f.features.generic_string()},
                              {"intrinsics", {{"fx", f.fx}, {"fy", f.fy}, {"cx", f.cx}, {"cy", f.cy}}},
                              {"pose", f.pose}});
  }
  if (m.anchor) {
    nlohmann::json a;
    a["vector"] = m.anchor->vector.generic_string();
    if (m.anchor->box) {
      const auto& b = *m.anchor->box;
      a["box"] = {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
    } else {
      a["voxels"] = nlohmann::json::array();
      for (const auto& v : m.anchor->voxels) a["voxels"].push_back({v.i, v.j, v.k});
    }
    root["anchor"] = std::move(a);
  }
  return root;
}

inline void save_manifest(const std::filesystem::path& path, const SceneManifest& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

/// Reads one frame's tensors: depth (H x W) and features (h x w x d).
inline FramedCapture load_capture(const SceneManifest& m, const FrameEntry& f) {
  const Tensor depth = load_tensor(m.resolve(f.depth));
  const Tensor feats = load_tensor(m.resolve(f.features));
  const std::string where = "frame '" + f.frame_id + "'";
  if (depth.shape.size() != 2) {
    throw Error(ErrorCode::parse_error, where + ": depth tensor " + m.resolve(f.depth).string() + " must be rank 2");
  }
  if (feats.shape.size() != 3) {
    throw Error(ErrorCode::parse_error, where + ": feature tensor " + m.resolve(f.features).string() +
                                            " must be rank 3");
  }
  try {
    return FramedCapture(CameraIntrinsics(f.fx, f.fy, f.cx, f.cy), CameraPose::from_row_major(f.pose),
                         DepthMap(depth.shape[0], depth.shape[1], {depth.data.begin(), depth.data.end()}),
                         FeatureMap(feats.shape[0], feats.shape[1], feats.shape[2], {feats.data.begin(), feats.data.end()}),
                         f.frame_id);
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.detail());
  }
}

inline AnchorRegion load_anchor(const SceneManifest& m) {
  const AnchorEntry& a = *m.anchor;
  const Tensor v = load_tensor(m.resolve(a.vector));
  if (v.shape.size() != 1) {
    throw Error(ErrorCode::parse_error, "anchor vector " + m.resolve(a.vector).string() + " must be rank 1");
  }
  AnchorRegion region;
  if (a.box) {
    region.shape = *a.box;
  } else {
    region.shape = a.voxels;
  }
  region.anchor_vector.assign(v.data.begin(), v.data.end());
  return region;
}

}  // namespace cfgtok
