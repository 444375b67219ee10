#include <cmath>
#include <random>
#include <string>

#include "psd/data.hpp"
#include "psd/error.hpp"

namespace psd {
namespace {

void check_window(const GrayImage& img, std::size_t k) {
  if (k == 0 || k > img.height() || k > img.width()) {
    throw SizeError("patch side " + std::to_string(k) + " does not fit a " +
                    std::to_string(img.height()) + "x" + std::to_string(img.width()) + " image");
  }
}

Vector copy_window(const GrayImage& img, std::size_t row, std::size_t col, std::size_t k) {
  Vector out(k * k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) out[r * k + c] = img(row + r, col + c);
  return out;
}

}  // namespace

PatchSet extract_patches(const GrayImage& img, std::size_t k, std::size_t count,
                         std::uint64_t seed, std::size_t image_id) {
  check_window(img, k);
  if (count == 0) throw InputError("patch count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> rows(0, img.height() - k);
  std::uniform_int_distribution<std::size_t> cols(0, img.width() - k);

  PatchSet set;
  set.side = k;
  set.patches.reserve(count);
  set.origins.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = rows(rng);
    const std::size_t c = cols(rng);
    set.patches.push_back(copy_window(img, r, c, k));
    set.origins.push_back({image_id, r, c});
  }
  return set;
}

PatchSet extract_grid_patches(const GrayImage& img, std::size_t k, std::size_t per_side,
                              std::size_t image_id) {
  check_window(img, k);
  if (per_side == 0) throw InputError("grid must have at least one patch per side");
  auto positions = [&](std::size_t extent) {
    std::vector<std::size_t> pos(per_side);
    const std::size_t span = extent - k;
    for (std::size_t i = 0; i < per_side; ++i) {
      pos[i] = per_side == 1 ? span / 2 : (i * span) / (per_side - 1);
    }
    return pos;
  };
  PatchSet set;
  set.side = k;
  for (std::size_t r : positions(img.height())) {
    for (std::size_t c : positions(img.width())) {
      set.patches.push_back(copy_window(img, r, c, k));
      set.origins.push_back({image_id, r, c});
    }
  }
  return set;
}

Vector normalize_patch(std::span<const double> patch) {
  if (patch.size() < 2) throw PreconditionError("normalize_patch needs at least 2 values");
  const double count = static_cast<double>(patch.size());
  double mean = 0.0;
  for (double v : patch) mean += v;
  mean /= count;
  double var = 0.0;
  for (double v : patch) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / count);
  Vector out(patch.size(), 0.0);
  if (sd < 1e-8) return out;
  for (std::size_t i = 0; i < patch.size(); ++i) out[i] = (patch[i] - mean) / sd;
  return out;
}

}  // namespace psd
