#pragma once

// Little-endian encoding helpers shared by the PSD1 and TNSR formats.

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psd/error.hpp"

namespace psd::detail {

class ByteWriter {
 public:
  void magic(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

  void f64s(std::span<const double> values) {
    bytes_.reserve(bytes_.size() + 8 * values.size());
    for (double v : values) f64(v);
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string format)
      : bytes_(bytes), format_(std::move(format)) {}

  void expect_magic(const char (&tag)[5]) {
    need(4, "magic");
    for (int i = 0; i < 4; ++i) {
      if (bytes_[pos_ + i] != static_cast<std::uint8_t>(tag[i])) {
        throw ParseError(pos_, format_ + ": bad magic, expected '" + std::string(tag, 4) + "'");
      }
    }
    pos_ += 4;
  }

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  void f64s(std::span<double> out, const char* field) {
    need(8 * out.size(), field);
    for (double& v : out) v = f64();
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw ParseError(pos_, format_ + ": " + std::to_string(bytes_.size() - pos_) +
                                 " trailing bytes after payload");
    }
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t count, const char* field) const {
    if (bytes_.size() - pos_ < count) {
      throw ParseError(pos_, format_ + ": truncated " + field + ", expected " +
                                 std::to_string(count) + " bytes, found " +
                                 std::to_string(bytes_.size() - pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::string format_;
  std::size_t pos_ = 0;
};

}  // namespace psd::detail
