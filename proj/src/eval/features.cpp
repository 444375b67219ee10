#include <cmath>
#include <string>

#include "psd/error.hpp"
#include "psd/eval.hpp"

namespace psd {
namespace {

std::size_t encoder_input_size(const Encoder& e) {
  return std::visit(
      [](const auto& enc) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(enc)>, ApproxEncoder>) {
          return enc.predictor.signal_size();
        } else {
          return enc.dictionary.signal_size();
        }
      },
      e);
}

std::size_t encoder_code_size(const Encoder& e) {
  return std::visit(
      [](const auto& enc) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(enc)>, ApproxEncoder>) {
          return enc.predictor.code_size();
        } else {
          return enc.dictionary.code_size();
        }
      },
      e);
}

std::size_t cell_edge(std::size_t i, std::size_t in, std::size_t out) {
  return static_cast<std::size_t>(
      std::lround(static_cast<double>(i) * static_cast<double>(in) / static_cast<double>(out)));
}

}  // namespace

FeatureTensor encode_convolutional(const GrayImage& img, const Encoder& encoder, std::size_t k) {
  if (k == 0 || k > img.height() || k > img.width()) {
    throw SizeError("window side " + std::to_string(k) + " does not fit a " +
                    std::to_string(img.height()) + "x" + std::to_string(img.width()) + " image");
  }
  if (encoder_input_size(encoder) != k * k) {
    throw ShapeError("encoder expects inputs of length " +
                     std::to_string(encoder_input_size(encoder)) + " but windows have " +
                     std::to_string(k * k));
  }
  const std::size_t out_h = img.height() - k + 1;
  const std::size_t out_w = img.width() - k + 1;
  const std::size_t m = encoder_code_size(encoder);
  FeatureTensor maps(m, out_h, out_w);

  Vector window(k * k);
  for (std::size_t r = 0; r < out_h; ++r) {
    for (std::size_t c = 0; c < out_w; ++c) {
      for (std::size_t dr = 0; dr < k; ++dr)
        for (std::size_t dc = 0; dc < k; ++dc) window[dr * k + dc] = img(r + dr, c + dc);
      const Vector code = std::visit(
          [&](const auto& enc) -> Vector {
            if constexpr (std::is_same_v<std::decay_t<decltype(enc)>, ApproxEncoder>) {
              return infer_approx(window, enc.predictor);
            } else {
              return solve_bpdn_cd(window, enc.dictionary, enc.lambda, enc.opts).code;
            }
          },
          encoder);
      for (std::size_t j = 0; j < m; ++j) maps.at(j, r, c) = code[j];
    }
  }
  return maps;
}

FeatureTensor abs_rectify(FeatureTensor t) {
  for (double& v : t.values) v = std::abs(v);
  return t;
}

FeatureTensor avg_downsample(const FeatureTensor& t, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0 || out_h > t.height || out_w > t.width) {
    throw PreconditionError("downsample target " + std::to_string(out_h) + "x" +
                            std::to_string(out_w) + " must be non-empty and no larger than " +
                            std::to_string(t.height) + "x" + std::to_string(t.width));
  }
  FeatureTensor out(t.maps, out_h, out_w);
  for (std::size_t k = 0; k < t.maps; ++k) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const std::size_t r0 = cell_edge(i, t.height, out_h);
      const std::size_t r1 = cell_edge(i + 1, t.height, out_h);
      for (std::size_t j = 0; j < out_w; ++j) {
        const std::size_t c0 = cell_edge(j, t.width, out_w);
        const std::size_t c1 = cell_edge(j + 1, t.width, out_w);
        double sum = 0.0;
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t c = c0; c < c1; ++c) sum += t.at(k, r, c);
        out.at(k, i, j) = sum / static_cast<double>((r1 - r0) * (c1 - c0));
      }
    }
  }
  return out;
}

}  // namespace psd
