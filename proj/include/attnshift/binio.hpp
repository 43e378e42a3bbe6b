#pragma once

// Little-endian binary encoding helpers shared by the trial, band-power and
// feature-matrix file formats.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "attnshift/common.hpp"

namespace attnshift::binio {

class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }

  const std::vector<char>& data() const { return buf_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::vector<char> buf_;
};

inline std::vector<char> load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Reader {
 public:
  explicit Reader(std::vector<char> data) : buf_(std::move(data)) {}

  void magic(std::string_view expected) {
    if (remaining() < expected.size() || std::memcmp(buf_.data() + pos_, expected.data(), expected.size()) != 0)
      throw FormatError("bad magic");
    pos_ += expected.size();
  }
  std::uint8_t u8(const char* field) { return static_cast<std::uint8_t>(get(1, field)); }
  std::uint16_t u16(const char* field) { return static_cast<std::uint16_t>(get(2, field)); }
  std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(get(4, field)); }
  float f32(const char* field) { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4, field))); }
  std::string str(std::size_t n, const char* field) {
    need(n, field);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }

  void expect_remaining(std::size_t expected) const {
    if (remaining() != expected)
      throw FormatError(std::string(remaining() < expected ? "truncated payload" : "trailing bytes after payload") +
                        ": expected " + std::to_string(expected) + " bytes, got " + std::to_string(remaining()));
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (remaining() < n) throw FormatError(std::string("truncated header at field '") + field + "'");
  }
  std::uint64_t get(int n, const char* field) {
    need(static_cast<std::size_t>(n), field);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace attnshift::binio
