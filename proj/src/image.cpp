#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "psd/data.hpp"
#include "psd/error.hpp"
#include "psd/file_io.hpp"

namespace psd {
namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (std::size_t{1} << 31)) throw ParseError(start, std::string("PGM: ") + field + " too large");
      ++pos_;
    }
    if (pos_ == start) throw ParseError(start, std::string("PGM: expected ") + field);
    return value;
  }

  std::size_t pos_ = 0;
  std::span<const std::uint8_t> bytes_;
};

}  // namespace

GrayImage::GrayImage(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), pixels_(height * width, fill) {}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height_ == 0 || width_ == 0) throw ShapeError("image sides must be positive");
  if (pixels_.size() != height_ * width_) {
    throw ShapeError("image buffer has " + std::to_string(pixels_.size()) + " pixels, expected " +
                     std::to_string(height_ * width_));
  }
}

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError(0, "PGM: bad magic, expected 'P5'");
  }
  PgmHeaderReader in(bytes);
  in.pos_ = 2;
  if (in.pos_ < bytes.size() && !std::isspace(bytes[in.pos_]) && bytes[in.pos_] != '#') {
    throw ParseError(in.pos_, "PGM: bad magic, expected 'P5'");
  }
  const std::size_t width = in.number("width");
  const std::size_t height = in.number("height");
  const std::size_t maxval_at = in.pos_;
  const std::size_t maxval = in.number("maxval");
  if (width == 0 || height == 0) throw ParseError(maxval_at, "PGM: zero image dimension");
  if (maxval == 0 || maxval > 255) {
    throw ParseError(maxval_at, "PGM: maxval " + std::to_string(maxval) + " not in [1, 255]");
  }
  if (in.pos_ >= bytes.size() || !std::isspace(bytes[in.pos_])) {
    throw ParseError(in.pos_, "PGM: expected a single whitespace byte after maxval");
  }
  ++in.pos_;

  const std::size_t expected = width * height;
  const std::size_t available = bytes.size() - in.pos_;
  if (available < expected) {
    throw ParseError(in.pos_, "PGM: truncated pixel data, expected " + std::to_string(expected) +
                                  " bytes, found " + std::to_string(available));
  }
  std::vector<double> pixels(expected);
  const auto top = static_cast<double>(maxval);
  for (std::size_t i = 0; i < expected; ++i) {
    const auto v = bytes[in.pos_ + i];
    if (v > maxval) {
      throw ParseError(in.pos_ + i, "PGM: pixel value " + std::to_string(v) + " exceeds maxval");
    }
    pixels[i] = static_cast<double>(v) / top;
  }
  return GrayImage(height, width, std::move(pixels));
}

GrayImage load_pgm_file(const std::filesystem::path& path) { return load_pgm(read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.pixels().size());
  for (double p : img.pixels()) {
    const double v = std::clamp(std::isfinite(p) ? p : 0.0, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

}  // namespace psd
