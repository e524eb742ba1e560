#pragma once

// Pinhole camera model, RGBD back-projection and per-frame point/feature
// clouds aligned to the feature-map resolution.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "cfgtok/error.hpp"

namespace cfgtok {

struct PixelCoord {
  double u = 0.0;  // column
  double v = 0.0;  // row
};

struct Projection {
  PixelCoord pixel;
  double depth = 0.0;
};

inline bool is_valid_depth(double depth) noexcept {
  return std::isfinite(depth) && depth > 0.0;
}

class CameraIntrinsics {
 public:
  CameraIntrinsics(double fx, double fy, double cx, double cy)
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
    if (!(std::isfinite(fx) && fx > 0.0) || !(std::isfinite(fy) && fy > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "focal lengths must be positive and finite");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy)) {
      throw Error(ErrorCode::invalid_argument, "principal point must be finite");
    }
  }

  static CameraIntrinsics identity() { return {1.0, 1.0, 0.0, 0.0}; }

  double fx() const noexcept { return fx_; }
  double fy() const noexcept { return fy_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx_, 0.0, cx_, 0.0, fy_, cy_, 0.0, 0.0, 1.0;
    return k;
  }

  // K^-1 [u, v, 1]^T
  Eigen::Vector3d unproject(PixelCoord q) const {
    return {(q.u - cx_) / fx_, (q.v - cy_) / fy_, 1.0};
  }

  PixelCoord project(const Eigen::Vector3d& camera_point) const {
    return {fx_ * camera_point.x() / camera_point.z() + cx_,
            fy_ * camera_point.y() / camera_point.z() + cy_};
  }

 private:
  double fx_, fy_, cx_, cy_;
};

/// Rigid camera-to-world transform. The rotation block must be orthonormal
/// and right-handed to within 1e-5.
class CameraPose {
 public:
  static constexpr double kRigidTolerance = 1e-5;

  CameraPose() : CameraPose(Eigen::Matrix4d::Identity()) {}

  explicit CameraPose(const Eigen::Matrix4d& camera_to_world) : transform_(camera_to_world) {
    if (!transform_.allFinite()) {
      throw Error(ErrorCode::invalid_argument, "pose contains non-finite values");
    }
    if (transform_(3, 0) != 0.0 || transform_(3, 1) != 0.0 || transform_(3, 2) != 0.0 ||
        transform_(3, 3) != 1.0) {
      throw Error(ErrorCode::invalid_argument, "pose bottom row must be [0, 0, 0, 1]");
    }
    const Eigen::Matrix3d r = rotation();
    const double ortho_err = (r.transpose() * r - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>();
    if (ortho_err > kRigidTolerance) {
      throw Error(ErrorCode::invalid_argument, "pose rotation is not orthonormal");
    }
    if (std::abs(r.determinant() - 1.0) > kRigidTolerance) {
      throw Error(ErrorCode::invalid_argument, "pose rotation determinant is not +1");
    }
    rotation_inverse_ = r.inverse();
  }

  /// Builds a pose from 16 numbers in row-major order.
  static CameraPose from_row_major(std::span<const double> values) {
    if (values.size() != 16) {
      throw Error(ErrorCode::shape_mismatch, "pose needs 16 values, got " + std::to_string(values.size()));
    }
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
    }
    return CameraPose(m);
  }

  const Eigen::Matrix4d& matrix() const noexcept { return transform_; }
  Eigen::Matrix3d rotation() const { return transform_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return transform_.topRightCorner<3, 1>(); }

  Eigen::Vector3d to_world(const Eigen::Vector3d& camera_point) const {
    return transform_.topLeftCorner<3, 3>() * camera_point + transform_.topRightCorner<3, 1>();
  }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world_point) const {
    return rotation_inverse_ * (world_point - transform_.topRightCorner<3, 1>());
  }

  /// Pose of this camera after the world frame is moved by `rigid` (S * T).
  CameraPose transformed_by(const CameraPose& rigid) const {
    return CameraPose(rigid.transform_ * transform_);
  }

 private:
  Eigen::Matrix4d transform_;
  Eigen::Matrix3d rotation_inverse_;
};

class DepthMap {
 public:
  DepthMap(std::size_t height, std::size_t width, std::vector<double> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (height_ == 0 || width_ == 0) {
      throw Error(ErrorCode::invalid_argument, "depth map must be non-empty");
    }
    if (values_.size() != height_ * width_) {
      throw Error(ErrorCode::shape_mismatch, "depth map has " + std::to_string(values_.size()) +
                                                 " values, expected " + std::to_string(height_ * width_));
    }
    for (double d : values_) {
      if (std::isfinite(d) && d < 0.0) {
        throw Error(ErrorCode::invalid_argument, "depth map contains a negative depth");
      }
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t height_, width_;
  std::vector<double> values_;
};

/// h x w x d activations, row-major with channels innermost.
class FeatureMap {
 public:
  FeatureMap(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> values)
      : height_(height), width_(width), dim_(dim), values_(std::move(values)) {
    if (height_ == 0 || width_ == 0) {
      throw Error(ErrorCode::invalid_argument, "feature map must be non-empty");
    }
    if (dim_ == 0 || dim_ % 2 != 0) {
      throw Error(ErrorCode::invalid_argument, "feature dim must be positive and even, got " + std::to_string(dim_));
    }
    if (values_.size() != height_ * width_ * dim_) {
      throw Error(ErrorCode::shape_mismatch, "feature map has " + std::to_string(values_.size()) +
                                                 " values, expected " + std::to_string(height_ * width_ * dim_));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "feature map contains non-finite values");
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> at(std::size_t row, std::size_t col) const {
    return std::span<const double>(values_).subspan((row * width_ + col) * dim_, dim_);
  }

 private:
  std::size_t height_, width_, dim_;
  std::vector<double> values_;
};

/// One posed RGBD view with its encoder feature map.
class FramedCapture {
 public:
  FramedCapture(CameraIntrinsics intrinsics, CameraPose pose, DepthMap depth, FeatureMap features,
                std::string frame_id)
      : intrinsics_(intrinsics),
        pose_(std::move(pose)),
        depth_(std::move(depth)),
        features_(std::move(features)),
        frame_id_(std::move(frame_id)) {
    if (depth_.height() < features_.height() || depth_.width() < features_.width()) {
      throw Error(ErrorCode::shape_mismatch, "frame '" + frame_id_ + "': depth map is smaller than the feature map");
    }
  }

  const CameraIntrinsics& intrinsics() const noexcept { return intrinsics_; }
  const CameraPose& pose() const noexcept { return pose_; }
  const DepthMap& depth() const noexcept { return depth_; }
  const FeatureMap& features() const noexcept { return features_; }
  const std::string& frame_id() const noexcept { return frame_id_; }

 private:
  CameraIntrinsics intrinsics_;
  CameraPose pose_;
  DepthMap depth_;
  FeatureMap features_;
  std::string frame_id_;
};

/// World-frame points with aligned d-dim features (flat, row per point) and
/// the id of the frame each point came from.
struct PointFeatureCloud {
  std::size_t dim = 0;
  std::vector<Eigen::Vector3d> points;
  std::vector<double> features;
  std::vector<std::string> frame_ids;

  PointFeatureCloud() = default;
  explicit PointFeatureCloud(std::size_t feature_dim) : dim(feature_dim) {}

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  std::span<const double> feature(std::size_t i) const {
    return std::span<const double>(features).subspan(i * dim, dim);
  }

  void push_back(const Eigen::Vector3d& point, std::span<const double> feature, std::string frame_id) {
    if (feature.size() != dim) {
      throw Error(ErrorCode::dim_mismatch, "point feature has dim " + std::to_string(feature.size()) +
                                               ", cloud has dim " + std::to_string(dim));
    }
    if (!point.allFinite()) throw Error(ErrorCode::invalid_argument, "point coordinates must be finite");
    points.push_back(point);
    features.insert(features.end(), feature.begin(), feature.end());
    frame_ids.push_back(std::move(frame_id));
  }
};

/// p = T [ (depth * K^-1 [u v 1]^T)^T | 1 ]^T
inline Eigen::Vector3d back_project_pixel(PixelCoord q, double depth, const CameraIntrinsics& k,
                                          const CameraPose& t) {
  if (!is_valid_depth(depth)) {
    throw Error(ErrorCode::invalid_depth, "depth " + std::to_string(depth) + " at pixel (" +
                                              std::to_string(q.u) + ", " + std::to_string(q.v) + ")");
  }
  return t.to_world(depth * k.unproject(q));
}

inline Projection project_point(const Eigen::Vector3d& world_point, const CameraIntrinsics& k,
                                const CameraPose& t) {
  const Eigen::Vector3d cam = t.to_camera(world_point);
  if (!(cam.z() > 0.0)) {
    throw Error(ErrorCode::behind_camera, "camera-frame depth " + std::to_string(cam.z()));
  }
  return {k.project(cam), cam.z()};
}

/// Back-projects every valid-depth pixel and averages the points falling in
/// each feature-map cell. Cell (r, c) covers pixel rows [r*H/h, (r+1)*H/h)
/// and columns [c*W/w, (c+1)*W/w); cells without a valid pixel are dropped.
/// Accumulation within a cell follows row-major pixel order.
inline PointFeatureCloud back_project_frame(const FramedCapture& capture) {
  const DepthMap& depth = capture.depth();
  const FeatureMap& fmap = capture.features();
  const std::size_t big_h = depth.height(), big_w = depth.width();
  const std::size_t h = fmap.height(), w = fmap.width();

  std::vector<Eigen::Vector3d> sums(h * w, Eigen::Vector3d::Zero());
  std::vector<std::size_t> counts(h * w, 0);

  for (std::size_t y = 0; y < big_h; ++y) {
    // floor(y * h / H) is the unique r with r*H/h <= y < (r+1)*H/h.
    const std::size_t r = y * h / big_h;
    for (std::size_t x = 0; x < big_w; ++x) {
      const double d = depth.at(y, x);
      if (!is_valid_depth(d)) continue;
      const std::size_t c = x * w / big_w;
      const PixelCoord q{static_cast<double>(x), static_cast<double>(y)};
      sums[r * w + c] += back_project_pixel(q, d, capture.intrinsics(), capture.pose());
      ++counts[r * w + c];
    }
  }

  PointFeatureCloud cloud(fmap.dim());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cell = r * w + c;
      if (counts[cell] == 0) continue;
      cloud.push_back(sums[cell] / static_cast<double>(counts[cell]), fmap.at(r, c), capture.frame_id());
    }
  }
  return cloud;
}

/// Concatenates clouds in input order.
inline PointFeatureCloud merge_clouds(std::span<const PointFeatureCloud> clouds) {
  if (clouds.empty()) return {};
  PointFeatureCloud merged(clouds.front().dim);
  std::size_t total = 0;
  for (const auto& c : clouds) {
    if (c.dim != merged.dim) {
      throw Error(ErrorCode::dim_mismatch, "cannot merge clouds of dim " + std::to_string(merged.dim) +
                                               " and " + std::to_string(c.dim));
    }
    total += c.size();
  }
  merged.points.reserve(total);
  merged.features.reserve(total * merged.dim);
  merged.frame_ids.reserve(total);
  for (const auto& c : clouds) {
    merged.points.insert(merged.points.end(), c.points.begin(), c.points.end());
    merged.features.insert(merged.features.end(), c.features.begin(), c.features.end());
    merged.frame_ids.insert(merged.frame_ids.end(), c.frame_ids.begin(), c.frame_ids.end());
  }
  return merged;
}

}  // namespace cfgtok
