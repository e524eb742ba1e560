// Builds two posed RGB-D-style frames in memory, tokenizes them into a
// condensed feature grid and prints one line per token.

#include <cmath>
#include <cstdio>
#include <vector>

#include "cfgtok/cfgtok.hpp"

using namespace cfgtok;

namespace {

// A flat floor 1.5 m below a camera looking straight down, shifted along x.
FramedCapture floor_frame(double x_offset, const char* id) {
  constexpr std::size_t H = 32, W = 32, h = 8, w = 8, d = 8;
  const CameraIntrinsics k(40.0, 40.0, (W - 1) / 2.0, (H - 1) / 2.0);
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t(1, 1) = -1.0;  // flip y and z so the camera faces -z
  t(2, 2) = -1.0;
  t(0, 3) = x_offset;
  t(2, 3) = 1.5;

  std::vector<double> depth(H * W, 1.5);
  depth[0] = 0.0;  // a missing pixel is simply skipped
  std::vector<double> feats(h * w * d);
  for (std::size_t n = 0; n < feats.size(); ++n) feats[n] = std::sin(0.37 * static_cast<double>(n));
  return FramedCapture(k, CameraPose(t), DepthMap(H, W, depth), FeatureMap(h, w, d, feats), id);
}

}  // namespace

int main() {
  const std::vector<FramedCapture> frames{floor_frame(0.0, "left"), floor_frame(0.6, "right")};

  TokenizeOptions options;
  options.voxel_size = 0.2;
  options.max_tokens = 24;
  const TokenizeResult result = tokenize_captures(frames, std::nullopt, options);

  std::printf("points %zu, voxels %zu, columns %zu, tokens %zu\n", result.point_count, result.stats.voxel_count,
              result.pre_budget_token_count, result.stats.token_count);
  std::printf("compression %.4f, preservation %.4f\n", result.stats.compression_rate,
              result.stats.preservation_rate);
  for (const auto& t : result.tokens.tokens) {
    std::printf("(%3lld,%3lld) xy=(%6.2f,%6.2f) voxels=%zu f0=%+.4f\n", static_cast<long long>(t.column.i),
                static_cast<long long>(t.column.j), t.x, t.y, t.source_voxel_count, t.feature[0]);
  }
  return 0;
}
