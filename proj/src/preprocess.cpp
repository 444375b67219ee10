#include <array>
#include <algorithm>
#include <cmath>
#include <string>

#include "psd/data.hpp"
#include "psd/error.hpp"

namespace psd {
namespace {

// Weighted average of `img` around every pixel, with the window weights
// renormalized over the taps that fall inside the image.
GrayImage weighted_average(const GrayImage& img, const Matrix& window) {
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto half = static_cast<std::ptrdiff_t>(window.rows() / 2);
  GrayImage out(img.height(), img.width());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double acc = 0.0, mass = 0.0;
      for (std::ptrdiff_t dr = -half; dr <= half; ++dr) {
        const std::ptrdiff_t rr = r + dr;
        if (rr < 0 || rr >= h) continue;
        for (std::ptrdiff_t dc = -half; dc <= half; ++dc) {
          const std::ptrdiff_t cc = c + dc;
          if (cc < 0 || cc >= w) continue;
          const double wt = window(static_cast<std::size_t>(dr + half),
                                   static_cast<std::size_t>(dc + half));
          acc += wt * img(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          mass += wt;
        }
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc / mass;
    }
  }
  return out;
}

void standardize(GrayImage& img) {
  const auto px = img.pixels();
  const double count = static_cast<double>(px.size());
  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= count;
  double var = 0.0;
  for (double v : px) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / count);
  // Same degenerate rule as normalize_patch: a flat image carries no signal.
  if (sd < 1e-8) {
    std::fill(img.pixels().begin(), img.pixels().end(), 0.0);
    return;
  }
  for (double& v : img.pixels()) v = (v - mean) / sd;
}

}  // namespace

Matrix gaussian_window(std::size_t side, double sigma) {
  if (side % 2 == 0) throw PreconditionError("gaussian window side must be odd");
  if (!(sigma > 0.0)) throw PreconditionError("gaussian sigma must be > 0");
  Matrix w(side, side);
  const auto half = static_cast<double>(side / 2);
  double total = 0.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double y = static_cast<double>(r) - half;
      const double x = static_cast<double>(c) - half;
      w(r, c) = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      total += w(r, c);
    }
  }
  for (double& v : w.data()) v /= total;
  return w;
}

GrayImage local_normalize(const GrayImage& img, const Matrix& window) {
  if (window.rows() != window.cols() || window.rows() % 2 == 0) {
    throw PreconditionError("local normalization window must be square with odd side");
  }
  const GrayImage mean = weighted_average(img, window);
  GrayImage centered = img;
  auto cp = centered.pixels();
  const auto mp = mean.pixels();
  for (std::size_t i = 0; i < cp.size(); ++i) cp[i] -= mp[i];

  GrayImage energy = centered;
  for (double& v : energy.pixels()) v *= v;
  const GrayImage local_var = weighted_average(energy, window);

  const auto lv = local_var.pixels();
  for (std::size_t i = 0; i < cp.size(); ++i) cp[i] /= std::max(1.0, std::sqrt(lv[i]));
  return centered;
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw PreconditionError("resize target must be non-empty");
  if (img.height() == 0 || img.width() == 0) throw InputError("cannot resize an empty image");
  GrayImage out(height, width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const double max_y = static_cast<double>(img.height() - 1);
  const double max_x = static_cast<double>(img.width() - 1);
  for (std::size_t r = 0; r < height; ++r) {
    const double fy = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < width; ++c) {
      const double fx = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = img(y0, x0) * (1.0 - tx) + img(y0, x1) * tx;
      const double bottom = img(y1, x0) * (1.0 - tx) + img(y1, x1) * tx;
      out(r, c) = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

GrayImage resize_long_side(const GrayImage& img, std::size_t long_side) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const double scale = static_cast<double>(long_side) / static_cast<double>(std::max(h, w));
  const auto scaled = [&](std::size_t v) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(v) * scale)));
  };
  return h >= w ? resize_bilinear(img, long_side, scaled(w))
                : resize_bilinear(img, scaled(h), long_side);
}

GrayImage preprocess_recognition(const GrayImage& img, const RecognitionPreprocessing& opts) {
  if (img.height() == 0 || img.width() == 0) throw InputError("cannot preprocess an empty image");
  if (opts.long_side == 0 || opts.pad_to == 0) {
    throw PreconditionError("long_side and pad_to must be positive");
  }
  GrayImage work = resize_long_side(img, opts.long_side);
  standardize(work);
  work = local_normalize(work, gaussian_window(opts.window_side, opts.sigma));

  GrayImage canvas(opts.pad_to, opts.pad_to, 0.0);
  auto place = [&](std::size_t src, std::size_t dst) {
    // {source start, destination start, extent}
    if (src <= dst) return std::array<std::size_t, 3>{0, (dst - src) / 2, src};
    return std::array<std::size_t, 3>{(src - dst) / 2, 0, dst};
  };
  const auto [sr, dr, nr] = place(work.height(), opts.pad_to);
  const auto [sc, dc, nc] = place(work.width(), opts.pad_to);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t c = 0; c < nc; ++c) canvas(dr + r, dc + c) = work(sr + r, sc + c);
  return canvas;
}

}  // namespace psd
