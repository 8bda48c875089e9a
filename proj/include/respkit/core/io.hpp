#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit {

// Little-endian binary primitives. Bytes are composed explicitly so file
// formats are host-independent.

inline void write_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u16le(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void write_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64le(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f32le(std::ostream& os, float v) {
  write_u32le(os, std::bit_cast<uint32_t>(v));
}

inline uint8_t read_u8(std::istream& is, errc on_eof = errc::corrupt_file) {
  int c = is.get();
  require(c != std::char_traits<char>::eof(), on_eof, "unexpected end of file");
  return static_cast<uint8_t>(c);
}

inline uint16_t read_u16le(std::istream& is, errc on_eof = errc::corrupt_file) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  require(is.gcount() == 2, on_eof, "unexpected end of file");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline uint32_t read_u32le(std::istream& is, errc on_eof = errc::corrupt_file) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require(is.gcount() == 4, on_eof, "unexpected end of file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

inline uint64_t read_u64le(std::istream& is, errc on_eof = errc::corrupt_file) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  require(is.gcount() == 8, on_eof, "unexpected end of file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float read_f32le(std::istream& is, errc on_eof = errc::corrupt_file) {
  return std::bit_cast<float>(read_u32le(is, on_eof));
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), errc::io_error, "cannot open " + path.string());
  f.seekg(0, std::ios::end);
  std::streamoff n = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<size_t>(n));
  if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), n);
  require(f.good(), errc::io_error, "cannot read " + path.string());
  return bytes;
}

inline std::string read_file_text(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<unsigned char>& bytes) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), errc::io_error, "cannot open " + path.string() + " for writing");
  if (!bytes.empty())
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(f.good(), errc::io_error, "cannot write " + path.string());
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), errc::io_error, "cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(f.good(), errc::io_error, "cannot write " + path.string());
}

/// Fixed-precision float formatting for data artifacts (6 decimal places).
inline std::string format_f6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace respkit
