#pragma once

// Binary tensor files.
//
// Tensor record (all integers little-endian):
//   char[4]  magic "CFGT"
//   u32      format version (1)
//   u32      dtype code (0 = float32 little-endian)
//   u32      rank
//   u64      dims[rank]
//   f32      payload[prod(dims)], row-major
//
// Named bundle (used for Fourier/MLP weights):
//   char[4]  magic "CFGB"
//   u32      format version (1)
//   u32      entry count
//   per entry: u32 name length, name bytes, tensor record

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cfgtok/error.hpp"

namespace cfgtok {

inline constexpr std::array<char, 4> kTensorMagic = {'C', 'F', 'G', 'T'};
inline constexpr std::array<char, 4> kBundleMagic = {'C', 'F', 'G', 'B'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 0;

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

namespace binio {

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

template <typename U>
void write_le(std::ostream& out, U v) {
  static_assert(std::is_unsigned_v<U>);
  char buf[sizeof(U)];
  for (std::size_t n = 0; n < sizeof(U); ++n) buf[n] = static_cast<char>((v >> (8 * n)) & 0xFFu);
  out.write(buf, sizeof(U));
}

inline void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }
inline void write_i64(std::ostream& out, std::int64_t v) { write_le(out, static_cast<std::uint64_t>(v)); }

inline void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::parse_error, std::string("truncated input while reading ") + what);
  }
}

template <typename U>
U read_le(std::istream& in, const char* what) {
  unsigned char buf[sizeof(U)];
  read_exact(in, reinterpret_cast<char*>(buf), sizeof(U), what);
  U v = 0;
  for (std::size_t n = 0; n < sizeof(U); ++n) v |= static_cast<U>(buf[n]) << (8 * n);
  return v;
}

inline std::uint8_t read_u8(std::istream& in, const char* what) { return read_le<std::uint8_t>(in, what); }
inline float read_f32(std::istream& in, const char* what) { return std::bit_cast<float>(read_le<std::uint32_t>(in, what)); }
inline double read_f64(std::istream& in, const char* what) { return std::bit_cast<double>(read_le<std::uint64_t>(in, what)); }
inline std::int64_t read_i64(std::istream& in, const char* what) {
  return static_cast<std::int64_t>(read_le<std::uint64_t>(in, what));
}

inline void expect_magic(std::istream& in, const std::array<char, 4>& magic, const char* what) {
  std::array<char, 4> got{};
  read_exact(in, got.data(), got.size(), what);
  if (got != magic) {
    throw Error(ErrorCode::parse_error, std::string("bad magic for ") + what + ", expected '" +
                                            std::string(magic.begin(), magic.end()) + "'");
  }
}

}  // namespace binio

inline void write_tensor(std::ostream& out, const Tensor& t) {
  if (t.data.size() != t.element_count()) {
    throw Error(ErrorCode::shape_mismatch, "tensor payload does not match its shape");
  }
  out.write(kTensorMagic.data(), kTensorMagic.size());
  binio::write_le(out, kTensorFormatVersion);
  binio::write_le(out, kDtypeFloat32);
  binio::write_le(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) binio::write_le(out, d);
  for (float v : t.data) binio::write_f32(out, v);
}

inline Tensor read_tensor(std::istream& in) {
  binio::expect_magic(in, kTensorMagic, "tensor");
  const auto version = binio::read_le<std::uint32_t>(in, "tensor version");
  if (version != kTensorFormatVersion) {
    throw Error(ErrorCode::parse_error, "unsupported tensor format version " + std::to_string(version));
  }
  const auto dtype = binio::read_le<std::uint32_t>(in, "tensor dtype");
  if (dtype != kDtypeFloat32) throw Error(ErrorCode::parse_error, "unsupported dtype code " + std::to_string(dtype));
  const auto rank = binio::read_le<std::uint32_t>(in, "tensor rank");
  if (rank > 8) throw Error(ErrorCode::parse_error, "tensor rank " + std::to_string(rank) + " is too large");
  Tensor t;
  t.shape.resize(rank);
  std::uint64_t count = 1;
  for (auto& d : t.shape) {
    d = binio::read_le<std::uint64_t>(in, "tensor dims");
    if (d != 0 && count > std::numeric_limits<std::uint32_t>::max() / d) {
      throw Error(ErrorCode::parse_error, "tensor is too large");
    }
    count *= d;
  }
  t.data.resize(count);
  std::vector<unsigned char> raw(count * 4);
  binio::read_exact(in, reinterpret_cast<char*>(raw.data()), raw.size(), "tensor payload");
  for (std::uint64_t n = 0; n < count; ++n) {
    const unsigned char* p = &raw[n * 4];
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    t.data[n] = std::bit_cast<float>(bits);
  }
  return t;
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  write_tensor(out, t);
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  try {
    Tensor t = read_tensor(in);
    if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::parse_error, "trailing bytes after tensor");
    return t;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

inline void save_bundle(const std::filesystem::path& path, const std::vector<NamedTensor>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out.write(kBundleMagic.data(), kBundleMagic.size());
  binio::write_le(out, kTensorFormatVersion);
  binio::write_le(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    binio::write_le(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_tensor(out, e.tensor);
  }
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

inline std::vector<NamedTensor> load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  try {
    binio::expect_magic(in, kBundleMagic, "tensor bundle");
    const auto version = binio::read_le<std::uint32_t>(in, "bundle version");
    if (version != kTensorFormatVersion) {
      throw Error(ErrorCode::parse_error, "unsupported bundle version " + std::to_string(version));
    }
    const auto count = binio::read_le<std::uint32_t>(in, "bundle entry count");
    std::vector<NamedTensor> entries;
    for (std::uint32_t n = 0; n < count; ++n) {
      const auto len = binio::read_le<std::uint32_t>(in, "entry name length");
      if (len > 4096) throw Error(ErrorCode::parse_error, "entry name is too long");
      std::string name(len, '\0');
      binio::read_exact(in, name.data(), len, "entry name");
      entries.push_back({std::move(name), read_tensor(in)});
    }
    return entries;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

inline const Tensor& find_entry(const std::vector<NamedTensor>& entries, const std::string& name) {
  const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
  if (it == entries.end()) throw Error(ErrorCode::parse_error, "bundle has no entry '" + name + "'");
  return it->tensor;
}

}  // namespace cfgtok
