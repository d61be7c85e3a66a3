#pragma once

// Little-endian primitive IO shared by the dataset and checkpoint formats.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "fmvae/errors.hpp"

namespace fmvae::io {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void write(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void write_f64s(std::ostream& os, const std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (double d : v) write(os, d);
  }
}

inline void write_string(std::ostream& os, const std::string& s) {
  write<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T read(std::istream& is, const char* what) {
  T v{};
  const auto at = static_cast<long long>(is.tellg());
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError(std::string("truncated ") + what, at);
  return to_little(v);
}

inline std::vector<double> read_f64s(std::istream& is, std::size_t n, const char* what) {
  std::vector<double> v(n);
  const auto at = static_cast<long long>(is.tellg());
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw FormatError(std::string("truncated ") + what, at);
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (double& d : v) d = to_little(d);
  }
  return v;
}

inline std::string read_string(std::istream& is, const char* what, std::uint64_t max_len = 1ull << 30) {
  const auto at = static_cast<long long>(is.tellg());
  const auto n = read<std::uint64_t>(is, what);
  if (n > max_len) throw FormatError(std::string("implausible length for ") + what, at);
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError(std::string("truncated ") + what, at);
  return s;
}

}  // namespace fmvae::io
