#pragma once

// Serialized condensed-feature-grid tokens.
//
// Layout (little-endian):
//   char[4] magic "CFGK", u32 version (1), u32 dim, u64 token_count,
//   u64 voxel_total, u64 retained_voxel_total, f64 voxel_size,
//   f64 origin[3], f64 compression_rate, f64 preservation_rate,
//   then token_count records of
//   i64 i, i64 j, f64 x, f64 y, u8 anchored, u64 source_voxel_count,
//   f32 feature[dim].

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cfgtok/condensed_grid.hpp"
#include "cfgtok/error.hpp"
#include "cfgtok/tensor_io.hpp"

namespace cfgtok {

inline constexpr std::array<char, 4> kTokenMagic = {'C', 'F', 'G', 'K'};
inline constexpr std::uint32_t kTokenFormatVersion = 1;

struct TokenRecord {
  ColumnIndex column;
  double x = 0.0;
  double y = 0.0;
  bool anchored = false;
  std::uint64_t source_voxel_count = 0;
  std::vector<float> feature;
};

struct TokenFile {
  std::uint32_t version = kTokenFormatVersion;
  std::uint32_t dim = 0;
  std::uint64_t voxel_total = 0;
  std::uint64_t retained_voxel_total = 0;
  double voxel_size = 0.0;
  std::array<double, 3> origin{};
  double compression_rate = 0.0;
  double preservation_rate = 0.0;
  std::vector<TokenRecord> tokens;

  /// Header/body consistency; throws parse_error for structural problems
  /// and numeric_validation when the stored ratios disagree with the body.
  void validate() const {
    if (version != kTokenFormatVersion) {
      throw Error(ErrorCode::parse_error, "unsupported token file version " + std::to_string(version));
    }
    std::uint64_t retained = 0;
    for (std::size_t n = 0; n < tokens.size(); ++n) {
      const auto& t = tokens[n];
      if (t.feature.size() != dim) {
        throw Error(ErrorCode::parse_error, "token " + std::to_string(n) + " has dim " +
                                                std::to_string(t.feature.size()) + ", header says " +
                                                std::to_string(dim));
      }
      if (t.source_voxel_count == 0) {
        throw Error(ErrorCode::parse_error, "token " + std::to_string(n) + " has zero source voxels");
      }
      if (n > 0 && !(tokens[n - 1].column < t.column)) {
        throw Error(ErrorCode::parse_error, "tokens are not in strictly row-major column order");
      }
      for (float v : t.feature) {
        if (!std::isfinite(v)) throw Error(ErrorCode::numeric_validation, "token " + std::to_string(n) + " has non-finite features");
      }
      retained += t.source_voxel_count;
    }
    if (retained != retained_voxel_total) {
      throw Error(ErrorCode::parse_error, "retained_voxel_total " + std::to_string(retained_voxel_total) +
                                              " != sum of token voxel counts " + std::to_string(retained));
    }
    if (retained_voxel_total > voxel_total || voxel_total == 0) {
      throw Error(ErrorCode::parse_error, "voxel totals are inconsistent");
    }
    const double compression = static_cast<double>(tokens.size()) / static_cast<double>(voxel_total);
    const double preservation = static_cast<double>(retained_voxel_total) / static_cast<double>(voxel_total);
    if (compression != compression_rate || preservation != preservation_rate) {
      throw Error(ErrorCode::numeric_validation, "stored compression/preservation rates do not match the body");
    }
  }
};

inline TokenFile make_token_file(const CondensedFeatureGrid& cfg, const VoxelGrid& grid) {
  const CFGStats stats = compute_stats(grid, cfg);
  TokenFile file;
  file.dim = static_cast<std::uint32_t>(cfg.dim);
  file.voxel_total = cfg.voxel_total;
  file.retained_voxel_total = cfg.retained_voxel_total;
  file.voxel_size = grid.voxel_size();
  file.origin = {grid.origin().x(), grid.origin().y(), grid.origin().z()};
  file.compression_rate = stats.compression_rate;
  file.preservation_rate = stats.preservation_rate;
  file.tokens.reserve(cfg.tokens.size());
  for (const auto& t : cfg.tokens) {
    TokenRecord r;
    r.column = t.column;
    r.x = t.x;
    r.y = t.y;
    r.anchored = t.anchored;
    r.source_voxel_count = t.source_voxel_count;
    r.feature.assign(t.feature.begin(), t.feature.end());
    file.tokens.push_back(std::move(r));
  }
  file.validate();
  return file;
}

inline void write_token_file(std::ostream& out, const TokenFile& file) {
  file.validate();
  out.write(kTokenMagic.data(), kTokenMagic.size());
  binio::write_le(out, file.version);
  binio::write_le(out, file.dim);
  binio::write_le(out, static_cast<std::uint64_t>(file.tokens.size()));
  binio::write_le(out, file.voxel_total);
  binio::write_le(out, file.retained_voxel_total);
  binio::write_f64(out, file.voxel_size);
  for (double o : file.origin) binio::write_f64(out, o);
  binio::write_f64(out, file.compression_rate);
  binio::write_f64(out, file.preservation_rate);
  for (const auto& t : file.tokens) {
    binio::write_i64(out, t.column.i);
    binio::write_i64(out, t.column.j);
    binio::write_f64(out, t.x);
    binio::write_f64(out, t.y);
    binio::write_u8(out, t.anchored ? 1 : 0);
    binio::write_le(out, t.source_voxel_count);
    for (float v : t.feature) binio::write_f32(out, v);
  }
}

inline TokenFile read_token_file(std::istream& in) {
  binio::expect_magic(in, kTokenMagic, "token file");
  TokenFile file;
  file.version = binio::read_le<std::uint32_t>(in, "version");
  if (file.version != kTokenFormatVersion) {
    throw Error(ErrorCode::parse_error, "unsupported token file version " + std::to_string(file.version));
  }
  file.dim = binio::read_le<std::uint32_t>(in, "dim");
  const auto count = binio::read_le<std::uint64_t>(in, "token count");
  file.voxel_total = binio::read_le<std::uint64_t>(in, "voxel_total");
  file.retained_voxel_total = binio::read_le<std::uint64_t>(in, "retained_voxel_total");
  file.voxel_size = binio::read_f64(in, "voxel_size");
  for (double& o : file.origin) o = binio::read_f64(in, "origin");
  file.compression_rate = binio::read_f64(in, "compression_rate");
  file.preservation_rate = binio::read_f64(in, "preservation_rate");
  if (count > file.voxel_total) throw Error(ErrorCode::parse_error, "token count exceeds voxel total");
  file.tokens.resize(count);
  for (auto& t : file.tokens) {
    t.column.i = binio::read_i64(in, "token column");
    t.column.j = binio::read_i64(in, "token column");
    t.x = binio::read_f64(in, "token x");
    t.y = binio::read_f64(in, "token y");
    const auto flag = binio::read_u8(in, "anchored flag");
    if (flag > 1) throw Error(ErrorCode::parse_error, "anchored flag must be 0 or 1");
    t.anchored = flag == 1;
    t.source_voxel_count = binio::read_le<std::uint64_t>(in, "source voxel count");
    t.feature.resize(file.dim);
    for (float& v : t.feature) v = binio::read_f32(in, "token feature");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::parse_error, "token count in header is smaller than the body");
  }
  file.validate();
  return file;
}

inline std::string serialize_token_file(const TokenFile& file) {
  std::ostringstream out(std::ios::binary);
  write_token_file(out, file);
  return std::move(out).str();
}

inline void save_token_file(const std::filesystem::path& path, const TokenFile& file) {
  const std::string bytes = serialize_token_file(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

inline TokenFile load_token_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  try {
    return read_token_file(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace cfgtok
