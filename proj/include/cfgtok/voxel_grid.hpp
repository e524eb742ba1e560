#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cfgtok/error.hpp"
#include "cfgtok/geometry.hpp"

namespace cfgtok {

struct VoxelIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  auto operator<=>(const VoxelIndex&) const = default;
};

struct VoxelGridConfig {
  double voxel_size = 0.2;
  // nullopt selects the automatic origin: floor(min / voxel_size) * voxel_size.
  std::optional<Eigen::Vector3d> origin;

  void validate() const {
    if (!(std::isfinite(voxel_size) && voxel_size > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "voxel_size must be positive, got " + std::to_string(voxel_size));
    }
    if (origin && !origin->allFinite()) throw Error(ErrorCode::invalid_argument, "explicit origin must be finite");
  }
};

struct VoxelCell {
  std::vector<double> feature;
  std::size_t count = 0;
  bool anchored = false;
};

/// Sparse voxel grid. Only occupied voxels are stored; iteration order is
/// lexicographic in (i, j, k), so each column's voxels are contiguous and
/// ordered by ascending height.
class VoxelGrid {
 public:
  using CellMap = std::map<VoxelIndex, VoxelCell>;

  VoxelGrid(VoxelGridConfig config, Eigen::Vector3d origin, std::size_t dim, CellMap cells = {})
      : config_(std::move(config)), origin_(origin), dim_(dim), cells_(std::move(cells)) {
    config_.validate();
    for (const auto& [idx, cell] : cells_) {
      if (cell.count == 0) throw Error(ErrorCode::invalid_argument, "voxel cells must have count >= 1");
      if (cell.feature.size() != dim_) {
        throw Error(ErrorCode::dim_mismatch, "voxel feature dim " + std::to_string(cell.feature.size()) +
                                                 " != grid dim " + std::to_string(dim_));
      }
      for (double v : cell.feature) {
        if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "voxel features must be finite");
      }
    }
  }

  const VoxelGridConfig& config() const noexcept { return config_; }
  double voxel_size() const noexcept { return config_.voxel_size; }
  const Eigen::Vector3d& origin() const noexcept { return origin_; }
  std::size_t dim() const noexcept { return dim_; }
  const CellMap& cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  Eigen::Vector3d voxel_center(const VoxelIndex& idx) const {
    const double s = config_.voxel_size;
    return origin_ + Eigen::Vector3d((static_cast<double>(idx.i) + 0.5) * s, (static_cast<double>(idx.j) + 0.5) * s,
                                     (static_cast<double>(idx.k) + 0.5) * s);
  }

  VoxelIndex index_of(const Eigen::Vector3d& point) const {
    const Eigen::Vector3d rel = (point - origin_) / config_.voxel_size;
    return {static_cast<std::int64_t>(std::floor(rel.x())), static_cast<std::int64_t>(std::floor(rel.y())),
            static_cast<std::int64_t>(std::floor(rel.z()))};
  }

 private:
  VoxelGridConfig config_;
  Eigen::Vector3d origin_;
  std::size_t dim_;
  CellMap cells_;
};

inline Eigen::Vector3d auto_origin(const PointFeatureCloud& cloud, double voxel_size) {
  if (cloud.empty()) return Eigen::Vector3d::Zero();
  Eigen::Vector3d lo = cloud.points.front();
  for (const auto& p : cloud.points) lo = lo.cwiseMin(p);
  return (lo / voxel_size).array().floor().matrix() * voxel_size;
}

/// Mean-pools point features into voxels. Sums accumulate in cloud order.
inline VoxelGrid voxelize(const PointFeatureCloud& cloud, const VoxelGridConfig& config) {
  config.validate();
  const Eigen::Vector3d origin = config.origin ? *config.origin : auto_origin(cloud, config.voxel_size);
  VoxelGrid shell(config, origin, cloud.dim);

  VoxelGrid::CellMap cells;
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    auto [it, inserted] = cells.try_emplace(shell.index_of(cloud.points[n]));
    VoxelCell& cell = it->second;
    if (inserted) cell.feature.assign(cloud.dim, 0.0);
    const auto f = cloud.feature(n);
    for (std::size_t c = 0; c < cloud.dim; ++c) cell.feature[c] += f[c];
    ++cell.count;
  }
  for (auto& [idx, cell] : cells) {
    const double n = static_cast<double>(cell.count);
    for (double& v : cell.feature) v /= n;
  }
  return VoxelGrid(config, origin, cloud.dim, std::move(cells));
}

struct AxisAlignedBox {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Region that receives the anchor embedding: either a world-space box
/// (tested against voxel centers) or an explicit voxel set.
struct AnchorRegion {
  std::variant<AxisAlignedBox, std::set<VoxelIndex>> shape;
  std::vector<double> anchor_vector;

  void validate() const {
    if (const auto* box = std::get_if<AxisAlignedBox>(&shape)) {
      if (!box->min.allFinite() || !box->max.allFinite() || (box->min.array() > box->max.array()).any()) {
        throw Error(ErrorCode::invalid_argument, "anchor box needs finite min <= max");
      }
    }
    for (double v : anchor_vector) {
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "anchor vector must be finite");
    }
  }

  bool contains(const VoxelGrid& grid, const VoxelIndex& idx) const {
    if (const auto* box = std::get_if<AxisAlignedBox>(&shape)) return box->contains(grid.voxel_center(idx));
    return std::get<std::set<VoxelIndex>>(shape).contains(idx);
  }
};

/// Adds the anchor vector to every stored voxel inside the region and marks
/// it anchored. Voxels are never created.
inline VoxelGrid inject_anchor(const VoxelGrid& grid, const AnchorRegion& region) {
  region.validate();
  if (region.anchor_vector.size() != grid.dim()) {
    throw Error(ErrorCode::dim_mismatch, "anchor vector dim " + std::to_string(region.anchor_vector.size()) +
                                             " != grid dim " + std::to_string(grid.dim()));
  }
  VoxelGrid::CellMap cells = grid.cells();
  for (auto& [idx, cell] : cells) {
    if (!region.contains(grid, idx)) continue;
    for (std::size_t c = 0; c < cell.feature.size(); ++c) cell.feature[c] += region.anchor_vector[c];
    cell.anchored = true;
  }
  return VoxelGrid(grid.config(), grid.origin(), grid.dim(), std::move(cells));
}

struct GridStats {
  std::size_t occupied_voxels = 0;
  std::size_t occupied_columns = 0;
};

inline GridStats grid_stats(const VoxelGrid& grid) {
  GridStats stats;
  stats.occupied_voxels = grid.size();
  const VoxelIndex* prev = nullptr;
  for (const auto& [idx, cell] : grid.cells()) {
    if (!prev || prev->i != idx.i || prev->j != idx.j) ++stats.occupied_columns;
    prev = &idx;
  }
  return stats;
}

}  // namespace cfgtok
