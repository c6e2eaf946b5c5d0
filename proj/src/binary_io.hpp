#pragma once

// Little helpers for the versioned binary formats. Values are written in host
// byte order; the magic tag doubles as an endianness check.

#include "kgc/core.hpp"

#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace kgc::detail {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw DataError(std::string("truncated binary file while reading ") + what);
  return value;
}

template <typename T>
void write_array(std::ostream& out, const T* data, std::size_t count) {
  static_assert(std::is_trivially_copyable_v<T>);
  if (count) out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_array(std::istream& in, T* data, std::size_t count, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  if (count && !in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T))))
    throw DataError(std::string("truncated binary file while reading ") + what);
}

template <typename T>
void write_vector(std::ostream& out, const std::vector<T>& v) {
  write_pod<std::uint64_t>(out, v.size());
  write_array(out, v.data(), v.size());
}

template <typename T>
std::vector<T> read_vector(std::istream& in, const char* what, std::uint64_t limit = 1ULL << 40) {
  const auto n = read_pod<std::uint64_t>(in, what);
  if (n > limit) throw DataError(std::string("implausible length for ") + what);
  std::vector<T> v(n);
  read_array(in, v.data(), v.size(), what);
  return v;
}

inline void write_strings(std::ostream& out, const std::vector<std::string>& strings) {
  write_pod<std::uint64_t>(out, strings.size());
  for (const auto& s : strings) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
}

inline std::vector<std::string> read_strings(std::istream& in, const char* what) {
  const auto n = read_pod<std::uint64_t>(in, what);
  if (n > (1ULL << 34)) throw DataError(std::string("implausible string count for ") + what);
  std::vector<std::string> strings;
  strings.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = read_pod<std::uint32_t>(in, what);
    std::string s(len, '\0');
    if (len && !in.read(s.data(), len))
      throw DataError(std::string("truncated binary file while reading ") + what);
    strings.push_back(std::move(s));
  }
  return strings;
}

inline void write_header(std::ostream& out, const char (&magic)[5], std::uint32_t version) {
  out.write(magic, 4);
  write_pod(out, version);
}

inline void read_header(std::istream& in, const char (&magic)[5], std::uint32_t version,
                        const char* what) {
  char tag[4];
  if (!in.read(tag, 4) || std::string(tag, 4) != std::string(magic, 4))
    throw DataError(std::string("not a ") + what + " file (bad magic)");
  const auto found = read_pod<std::uint32_t>(in, "version");
  if (found != version)
    throw DataError(std::string(what) + " version mismatch: file has " + std::to_string(found) +
                    ", expected " + std::to_string(version));
}

}  // namespace kgc::detail
