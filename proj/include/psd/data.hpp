#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "psd/matrix.hpp"

namespace psd {

/// Row-major grayscale image.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t height, std::size_t width, double fill = 0.0);
  /// Throws ShapeError if `pixels` is not height*width long or a side is 0.
  GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  double operator()(std::size_t r, std::size_t c) const { return pixels_[r * width_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return pixels_[r * width_ + c]; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

/// Binary PGM (P5, maxval <= 255). Pixels map to value / maxval.
/// Throws ParseError with the failing byte offset.
GrayImage load_pgm(std::span<const std::uint8_t> bytes);
GrayImage load_pgm_file(const std::filesystem::path& path);
/// Encodes with maxval 255, clamping to [0, 1] and rounding.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

struct PatchOrigin {
  std::size_t image = 0;
  std::size_t row = 0;
  std::size_t col = 0;
};

struct PatchSet {
  std::vector<Vector> patches;  // each side*side, row-major
  std::size_t side = 0;
  std::vector<PatchOrigin> origins;
};

/// `count` k x k patches at seeded uniform top-left positions (with
/// replacement). Throws SizeError when k exceeds either image side.
PatchSet extract_patches(const GrayImage& img, std::size_t k, std::size_t count,
                         std::uint64_t seed, std::size_t image_id = 0);

/// per_side x per_side patches on an evenly spaced grid, the same positions
/// for every image of a given size.
PatchSet extract_grid_patches(const GrayImage& img, std::size_t k, std::size_t per_side,
                              std::size_t image_id = 0);

/// Zero mean, unit population standard deviation. Near-constant input
/// (std < 1e-8) maps to the zero vector. Requires length >= 2.
Vector normalize_patch(std::span<const double> patch);

// Recognition preprocessing.

inline constexpr double kDefaultGaussianSigma = 1.591;

/// side x side samples of exp(-(x^2 + y^2) / (2 sigma^2)) centered at 0,
/// normalized to sum 1. Throws PreconditionError for even side.
Matrix gaussian_window(std::size_t side = 9, double sigma = kDefaultGaussianSigma);

/// v = p - (w * p);  out = v / max(1, sqrt(w * v^2)), where * is a centered
/// weighted average with weights renormalized over the in-bounds taps.
GrayImage local_normalize(const GrayImage& img, const Matrix& window);

/// Bilinear resampling with pixel-center alignment.
GrayImage resize_bilinear(const GrayImage& img, std::size_t height, std::size_t width);

/// Scales so the longer side equals `long_side` (bilinear, aspect preserved).
GrayImage resize_long_side(const GrayImage& img, std::size_t long_side);

struct RecognitionPreprocessing {
  std::size_t long_side = 151;
  std::size_t pad_to = 143;
  std::size_t window_side = 9;
  double sigma = kDefaultGaussianSigma;
};

/// Resize, global standardization, local normalization, then a centered
/// pad_to x pad_to canvas (zero padding, or a centered crop of any side that
/// is longer than pad_to).
GrayImage preprocess_recognition(const GrayImage& img, const RecognitionPreprocessing& opts = {});

}  // namespace psd
