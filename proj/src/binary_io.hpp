#pragma once

// Little-endian helpers shared by the binary artifact formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "clickcode/error.hpp"

namespace clickcode::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need byte swapping");

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64s(std::ostream& os, const double* p, std::size_t count) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void read_exact(std::istream& is, char* dst, std::size_t bytes, const std::string& what) {
  is.read(dst, static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(is.gcount()) != bytes)
    throw FormatError(what + ": truncated file");
}

inline void expect_magic(std::istream& is, std::string_view magic, const std::string& what) {
  std::array<char, 4> buf{};
  is.read(buf.data(), 4);
  if (is.gcount() != 4 || std::string_view(buf.data(), 4) != magic)
    throw FormatError(what + ": bad magic header, expected '" + std::string(magic) + "'");
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
  std::uint32_t v = 0;
  read_exact(is, reinterpret_cast<char*>(&v), sizeof v, what);
  return v;
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
  T v{};
  read_exact(is, reinterpret_cast<char*>(&v), sizeof v, what);
  return v;
}

inline double read_f64(std::istream& is, const std::string& what) {
  double v = 0;
  read_exact(is, reinterpret_cast<char*>(&v), sizeof v, what);
  return v;
}

inline void read_f64s(std::istream& is, double* dst, std::size_t count, const std::string& what) {
  read_exact(is, reinterpret_cast<char*>(dst), count * sizeof(double), what);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return is;
}

inline void finish_write(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

}  // namespace clickcode::detail
