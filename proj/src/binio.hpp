#pragma once

// Little-endian binary readers/writers shared by the model and analyzer
// checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "rldialog/errors.hpp"

namespace rldialog::binio {

inline void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_i32(std::ostream& out, int32_t v) { write_u32(out, static_cast<uint32_t>(v)); }

inline void write_u8(std::ostream& out, uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), 1);
}

inline void write_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_bytes(std::istream& in, void* dst, size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw IoError(std::string("truncated checkpoint while reading ") + what);
}

inline uint64_t read_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  read_bytes(in, b, 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_bytes(in, b, 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

inline int32_t read_i32(std::istream& in, const char* what) {
  return static_cast<int32_t>(read_u32(in, what));
}

inline uint8_t read_u8(std::istream& in, const char* what) {
  uint8_t v = 0;
  read_bytes(in, &v, 1, what);
  return v;
}

inline double read_f64(std::istream& in, const char* what) {
  const uint64_t bits = read_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string read_string(std::istream& in, const char* what) {
  const uint32_t n = read_u32(in, what);
  std::string s(n, '\0');
  if (n > 0) read_bytes(in, s.data(), n, what);
  return s;
}

}  // namespace rldialog::binio
