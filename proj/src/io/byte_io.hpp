#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "poksvd/errors.hpp"

namespace poksvd::io::detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(bits & 0xFFu));
    bits = static_cast<U>(bits >> 8);
  }
}

inline void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }
inline void put_f32(std::string& out, float value) { put_le(out, std::bit_cast<std::uint32_t>(value)); }

/// Bounds-checked little-endian reader over a byte string.
class Reader {
 public:
  Reader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void seek(std::size_t pos) { pos_ = pos; }

  template <typename T>
  T get(const char* field) {
    require(sizeof(T), field);
    using U = std::make_unsigned_t<T>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits = static_cast<U>(bits | (static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i)));
    pos_ += sizeof(T);
    return static_cast<T>(bits);
  }

  double get_f64(const char* field) { return std::bit_cast<double>(get<std::uint64_t>(field)); }
  float get_f32(const char* field) { return std::bit_cast<float>(get<std::uint32_t>(field)); }

  std::string get_bytes(std::size_t n, const char* field) {
    require(n, field);
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void require(std::size_t n, const char* field) const {
    if (remaining() < n)
      throw IoError(what_ + ": truncated at byte offset " + std::to_string(pos_) + " reading " + field);
  }

 private:
  const std::string& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace poksvd::io::detail
