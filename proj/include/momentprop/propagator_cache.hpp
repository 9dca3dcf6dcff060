/**
 * @file propagator_cache.hpp
 * @brief Binary on-disk cache for assembled E(N,M) matrices.
 *
 * Layout (native little-endian):
 *   char[8]  magic "MPCACHE\0"
 *   u32      format version
 *   u64      model hash
 *   u64 x 4  n, d_S, N, M
 *   u64 x 2  rows, cols
 *   f64[]    rows*cols entries, row-major
 */
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "momentprop/errors.hpp"
#include "momentprop/kron.hpp"

namespace momentprop {

inline constexpr std::uint32_t kCacheFormatVersion = 1;
inline constexpr std::array<char, 8> kCacheMagic = {'M', 'P', 'C', 'A', 'C', 'H', 'E', '\0'};

struct CacheHeader {
  std::uint32_t version = kCacheFormatVersion;
  std::uint64_t model_hash = 0;
  std::uint64_t n = 0;
  std::uint64_t degree = 0;
  std::uint64_t N = 0;
  std::uint64_t M = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

namespace cache_detail {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace cache_detail

inline std::string cache_file_name(std::uint64_t model_hash, std::size_t N, std::size_t M) {
  std::ostringstream s;
  s << std::hex << model_hash << std::dec << "_N" << N << "_M" << M << ".bin";
  return s.str();
}

inline void write_propagator_cache(const std::filesystem::path& path, const CacheHeader& header, const Matrix& E) {
  if (header.rows != static_cast<std::uint64_t>(E.rows()) || header.cols != static_cast<std::uint64_t>(E.cols())) {
    throw PreconditionError("cache header shape does not match matrix");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache file '" + tmp + "'");
    out.write(kCacheMagic.data(), kCacheMagic.size());
    cache_detail::put(out, header.version);
    cache_detail::put(out, header.model_hash);
    cache_detail::put(out, header.n);
    cache_detail::put(out, header.degree);
    cache_detail::put(out, header.N);
    cache_detail::put(out, header.M);
    cache_detail::put(out, header.rows);
    cache_detail::put(out, header.cols);
    out.write(reinterpret_cast<const char*>(E.data()), static_cast<std::streamsize>(E.size() * sizeof(double)));
    if (!out) throw Error("failed writing cache file '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Returns the header and matrix, or nullopt when the file is missing or malformed.
inline std::optional<std::pair<CacheHeader, Matrix>> read_propagator_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCacheMagic) return std::nullopt;
  CacheHeader h;
  using cache_detail::get;
  if (!get(in, h.version) || h.version != kCacheFormatVersion) return std::nullopt;
  if (!get(in, h.model_hash) || !get(in, h.n) || !get(in, h.degree) || !get(in, h.N) || !get(in, h.M) ||
      !get(in, h.rows) || !get(in, h.cols)) {
    return std::nullopt;
  }
  if (h.rows == 0 || h.cols == 0 || saturating_mul(h.rows, h.cols) > element_limit()) return std::nullopt;
  Matrix E(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  if (!in.read(reinterpret_cast<char*>(E.data()), static_cast<std::streamsize>(E.size() * sizeof(double)))) {
    return std::nullopt;
  }
  if (in.peek() != std::char_traits<char>::eof()) return std::nullopt;
  return std::make_pair(h, std::move(E));
}

}  // namespace momentprop
