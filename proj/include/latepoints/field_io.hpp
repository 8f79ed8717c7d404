#pragma once

// Binary first-hit field files.
//
//   offset  size  field
//   0       4     magic "LPRW"
//   4       2     format version (LE), currently 1
//   6       4     n (LE)
//   10      8     seed (LE)
//   18      8     walk_length (LE)
//   26      1     covered flag (0/1)
//   27      8n^2  first-hit times, row-major, LE; UINT64_MAX = unvisited

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "latepoints/walk.hpp"

namespace latepoints::io {

inline constexpr std::array<char, 4> kFieldMagic{'L', 'P', 'R', 'W'};
inline constexpr std::uint16_t kFieldVersion = 1;
inline constexpr std::size_t kFieldHeaderSize = 27;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersion : public FormatError {
 public:
  explicit UnsupportedVersion(std::uint16_t v)
      : FormatError("unsupported field format version " + std::to_string(v)), version(v) {}
  std::uint16_t version;
};

namespace detail {
template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i)));
}
template <class T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return static_cast<T>(v);
}
}  // namespace detail

inline std::vector<unsigned char> encode_field(const FirstHitField& f) {
  std::vector<unsigned char> out;
  out.reserve(kFieldHeaderSize + 8 * f.hits.size());
  out.insert(out.end(), kFieldMagic.begin(), kFieldMagic.end());
  detail::put_le<std::uint16_t>(out, kFieldVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.n));
  detail::put_le<std::uint64_t>(out, f.seed);
  detail::put_le<std::uint64_t>(out, f.walk_length);
  out.push_back(f.covered ? 1 : 0);
  for (auto h : f.hits) detail::put_le<std::uint64_t>(out, h);
  return out;
}

inline FirstHitField decode_field(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 6) throw FormatError("truncated field file header");
  if (std::memcmp(bytes.data(), kFieldMagic.data(), kFieldMagic.size()) != 0)
    throw FormatError("bad magic: not a first-hit field file");
  const auto version = detail::get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kFieldVersion) throw UnsupportedVersion(version);
  if (bytes.size() < kFieldHeaderSize) throw FormatError("truncated field file header");

  FirstHitField f;
  const auto n = detail::get_le<std::uint32_t>(bytes.data() + 6);
  if (n == 0 || n > (1u << 16)) throw FormatError("implausible torus side " + std::to_string(n));
  f.n = static_cast<std::int32_t>(n);
  f.seed = detail::get_le<std::uint64_t>(bytes.data() + 10);
  f.walk_length = detail::get_le<std::uint64_t>(bytes.data() + 18);
  const unsigned char flag = bytes[26];
  if (flag > 1) throw FormatError("covered flag must be 0 or 1");
  f.covered = flag == 1;

  const std::size_t sites = std::size_t{n} * n;
  if (bytes.size() != kFieldHeaderSize + 8 * sites)
    throw FormatError("field payload has " + std::to_string(bytes.size() - kFieldHeaderSize) +
                      " bytes, expected " + std::to_string(8 * sites));
  f.hits.resize(sites);
  for (std::size_t i = 0; i < sites; ++i)
    f.hits[i] = detail::get_le<std::uint64_t>(bytes.data() + kFieldHeaderSize + 8 * i);
  return f;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& b) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void persist_field(const std::filesystem::path& path, const FirstHitField& f) {
  write_bytes(path, encode_field(f));
}

inline FirstHitField load_field(const std::filesystem::path& path) {
  return decode_field(read_bytes(path));
}

}  // namespace latepoints::io
