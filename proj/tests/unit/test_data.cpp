#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "psd/data.hpp"
#include "psd/error.hpp"
#include "psd/tensor.hpp"
#include "support/oracles.hpp"

using namespace psd;
using namespace psd::testing;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

GrayImage random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(h, w);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

// 1-D pass with weights renormalized over in-bounds taps; the 2-D Gaussian is
// the outer product of this kernel with itself.
GrayImage blur_pass(const GrayImage& in, const std::vector<double>& g, bool along_rows) {
  const long half = static_cast<long>(g.size() / 2);
  const long h = static_cast<long>(in.height()), w = static_cast<long>(in.width());
  GrayImage out(in.height(), in.width());
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (long t = -half; t <= half; ++t) {
        const long rr = along_rows ? r : r + t;
        const long cc = along_rows ? c + t : c;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        acc += g[static_cast<std::size_t>(t + half)] * in(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
        wsum += g[static_cast<std::size_t>(t + half)];
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc / wsum;
    }
  }
  return out;
}

GrayImage separable_local_normalize(const GrayImage& img, std::size_t side, double sigma) {
  std::vector<double> g(side);
  const double mid = static_cast<double>(side / 2);
  for (std::size_t i = 0; i < side; ++i) {
    const double x = static_cast<double>(i) - mid;
    g[i] = std::exp(-x * x / (2.0 * sigma * sigma));
  }
  auto blur = [&](const GrayImage& in) { return blur_pass(blur_pass(in, g, true), g, false); };
  const GrayImage mean = blur(img);
  GrayImage v(img.height(), img.width()), v2(img.height(), img.width());
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    v.pixels()[i] = img.pixels()[i] - mean.pixels()[i];
    v2.pixels()[i] = v.pixels()[i] * v.pixels()[i];
  }
  const GrayImage energy = blur(v2);
  for (std::size_t i = 0; i < v.pixels().size(); ++i) {
    v.pixels()[i] /= std::max(1.0, std::sqrt(energy.pixels()[i]));
  }
  return v;
}

}  // namespace

TEST_CASE("load_pgm") {
  SUBCASE("two pixels") {
    auto bytes = bytes_of("P5\n2 1\n255\n");
    bytes.push_back(0);
    bytes.push_back(255);
    const GrayImage img = load_pgm(bytes);
    CHECK(img.height() == 1);
    CHECK(img.width() == 2);
    CHECK(img(0, 0) == 0.0);
    CHECK(img(0, 1) == 1.0);
  }
  SUBCASE("comments between fields") {
    auto plain = bytes_of("P5\n3 2\n100\n");
    auto commented = bytes_of("P5\n# made by hand\n3 # width\n2\n#max\n100\n");
    for (std::uint8_t v : {0, 10, 20, 50, 90, 100}) {
      plain.push_back(v);
      commented.push_back(v);
    }
    CHECK(load_pgm(plain) == load_pgm(commented));
    CHECK(load_pgm(plain)(1, 0) == doctest::Approx(0.5));
  }
  SUBCASE("truncated payload names both counts") {
    auto bytes = bytes_of("P5\n4 4\n255\n");
    bytes.resize(bytes.size() + 10, 7);
    try {
      load_pgm(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("16") != std::string::npos);
      CHECK(msg.find("10") != std::string::npos);
    }
  }
  SUBCASE("malformed headers") {
    CHECK_THROWS_AS(load_pgm(bytes_of("P2\n1 1\n255\n0")), ParseError);
    CHECK_THROWS_AS(load_pgm(bytes_of("P5\n1 1\n65535\n00")), ParseError);
    CHECK_THROWS_AS(load_pgm(bytes_of("P5\n0 1\n255\n")), ParseError);
    CHECK_THROWS_AS(load_pgm(bytes_of("P5\nx 1\n255\n0")), ParseError);
    CHECK_THROWS_AS(load_pgm(bytes_of("")), ParseError);
  }
  SUBCASE("encode round trip") {
    std::mt19937_64 rng(1);
    GrayImage img(5, 7);
    std::uniform_int_distribution<int> level(0, 255);
    for (double& v : img.pixels()) v = level(rng) / 255.0;
    CHECK(load_pgm(encode_pgm(img)) == img);
  }
}

TEST_CASE("extract_patches") {
  std::mt19937_64 rng(2);
  SUBCASE("k equal to the image gives the full image") {
    const GrayImage img = random_image(9, 9, rng);
    const PatchSet ps = extract_patches(img, 9, 5, 3);
    REQUIRE(ps.patches.size() == 5);
    for (const auto& p : ps.patches) CHECK(std::equal(p.begin(), p.end(), img.pixels().begin()));
  }
  SUBCASE("patch contents follow the origins") {
    const GrayImage img = random_image(20, 15, rng);
    const PatchSet ps = extract_patches(img, 4, 50, 4, 7);
    CHECK(ps.side == 4);
    for (std::size_t s = 0; s < 50; ++s) {
      const PatchOrigin o = ps.origins[s];
      CHECK(o.image == 7);
      REQUIRE(o.row + 4 <= 20);
      REQUIRE(o.col + 4 <= 15);
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) CHECK(ps.patches[s][r * 4 + c] == img(o.row + r, o.col + c));
    }
  }
  SUBCASE("deterministic per seed") {
    const GrayImage img = random_image(30, 30, rng);
    CHECK(extract_patches(img, 5, 40, 9).patches == extract_patches(img, 5, 40, 9).patches);
    CHECK_FALSE(extract_patches(img, 5, 40, 9).patches == extract_patches(img, 5, 40, 10).patches);
  }
  SUBCASE("top-left rows are uniform") {
    const GrayImage img(100, 100, 0.5);
    const PatchSet ps = extract_patches(img, 9, 10000, 11);
    std::vector<double> counts(92, 0.0);
    for (const auto& o : ps.origins) counts[o.row] += 1.0;
    const double p = 1.0 / 92.0;
    const double expected = 10000.0 * p;
    const double sd = std::sqrt(10000.0 * p * (1.0 - p));
    for (double c : counts) CHECK(std::abs(c - expected) <= 5.0 * sd);
  }
  SUBCASE("oversized patch") {
    CHECK_THROWS_AS(extract_patches(GrayImage(8, 20), 9, 1, 0), SizeError);
  }
  SUBCASE("grid positions") {
    const GrayImage img = random_image(12, 12, rng);
    const PatchSet ps = extract_grid_patches(img, 4, 3);
    REQUIRE(ps.patches.size() == 9);
    CHECK(ps.origins.front().row == 0);
    CHECK(ps.origins.back().row == 8);
    CHECK(ps.origins.back().col == 8);
  }
}

TEST_CASE("normalize_patch") {
  const Vector out = normalize_patch(Vector{1.0, 2.0, 3.0});
  CHECK(out[0] == doctest::Approx(-1.2247).epsilon(1e-3));
  CHECK(out[1] == doctest::Approx(0.0));
  CHECK(out[2] == doctest::Approx(1.2247).epsilon(1e-3));
  for (double v : normalize_patch(Vector(9, 4.2))) CHECK(v == 0.0);
  CHECK_THROWS_AS(normalize_patch(Vector{1.0}), PreconditionError);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector p = gaussian_vector(81, rng, 5.0);
    const Vector q = normalize_patch(p);
    double mean = 0.0, var = 0.0;
    for (double v : q) mean += v;
    mean /= 81.0;
    for (double v : q) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) <= 1e-12);
    CHECK(std::abs(std::sqrt(var / 81.0) - 1.0) <= 1e-12);
    CHECK(max_abs_diff(normalize_patch(q), q) <= 1e-10);
  }
}

TEST_CASE("gaussian_window") {
  const Matrix one = gaussian_window(1, 2.0);
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == 1.0);
  const Matrix w = gaussian_window();
  REQUIRE(w.rows() == 9);
  REQUIRE(w.cols() == 9);
  double sum = 0.0;
  for (std::size_t r = 0; r < 9; ++r) {
    for (std::size_t c = 0; c < 9; ++c) {
      sum += w(r, c);
      CHECK(w(r, c) >= 0.0);
      CHECK(std::abs(w(r, c) - w(c, 8 - r)) <= 1e-15);
      CHECK(std::abs(w(r, c) - w(r, 8 - c)) <= 1e-15);
      CHECK(std::abs(w(r, c) - w(c, r)) <= 1e-15);
    }
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(w(4, 4) > w(4, 5));
  CHECK_THROWS_AS(gaussian_window(4, 1.0), PreconditionError);
}

TEST_CASE("local_normalize matches a separable two-pass oracle") {
  SUBCASE("impulse") {
    GrayImage img(21, 17);
    img(10, 8) = 5.0;
    img(0, 0) = -2.0;
    const GrayImage got = local_normalize(img, gaussian_window());
    const GrayImage ref = separable_local_normalize(img, 9, kDefaultGaussianSigma);
    CHECK(max_abs_diff(got.pixels(), ref.pixels()) <= 1e-10);
  }
  SUBCASE("random texture") {
    std::mt19937_64 rng(4);
    GrayImage img = random_image(13, 25, rng);
    for (double& v : img.pixels()) v *= 8.0;
    const GrayImage got = local_normalize(img, gaussian_window(5, 1.0));
    const GrayImage ref = separable_local_normalize(img, 5, 1.0);
    CHECK(max_abs_diff(got.pixels(), ref.pixels()) <= 1e-10);
  }
  SUBCASE("constant image becomes zero") {
    const GrayImage out = local_normalize(GrayImage(10, 10, 3.0), gaussian_window());
    for (double v : out.pixels()) {
      CHECK(std::abs(v) <= 1e-12);
    }
  }
}

TEST_CASE("resize_bilinear") {
  std::mt19937_64 rng(5);
  const GrayImage img = random_image(6, 9, rng);
  CHECK(resize_bilinear(img, 6, 9) == img);
  const GrayImage flat = resize_bilinear(GrayImage(7, 3, 0.25), 20, 11);
  for (double v : flat.pixels()) CHECK(v == doctest::Approx(0.25));
  // Halving with pixel-center alignment averages 2x2 blocks.
  GrayImage ramp(4, 4);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) ramp(r, c) = static_cast<double>(r * 4 + c);
  const GrayImage half = resize_bilinear(ramp, 2, 2);
  CHECK(half(0, 0) == doctest::Approx(2.5));
  CHECK(half(1, 1) == doctest::Approx(12.5));
  const GrayImage longer = resize_long_side(GrayImage(50, 100), 151);
  CHECK(longer.width() == 151);
  CHECK(longer.height() == 76);
}

TEST_CASE("preprocess_recognition") {
  std::mt19937_64 rng(6);
  SUBCASE("constant image stays zero") {
    const GrayImage out = preprocess_recognition(GrayImage(40, 60, 0.7));
    CHECK(out.height() == 143);
    CHECK(out.width() == 143);
    for (double v : out.pixels()) CHECK(v == 0.0);
  }
  SUBCASE("always pad_to square, padding exactly zero") {
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{30, 90}, {90, 30}, {64, 64}, {200, 120}}) {
      const GrayImage out = preprocess_recognition(random_image(h, w, rng));
      REQUIRE(out.height() == 143);
      REQUIRE(out.width() == 143);
      // Landscape input: short side is resized below 143 and padded top and bottom.
      if (w > h) {
        const std::size_t rows = static_cast<std::size_t>(std::lround(151.0 * h / w));
        const std::size_t top = (143 - rows) / 2;
        for (std::size_t c = 0; c < 143; ++c) {
          for (std::size_t r = 0; r < top; ++r) CHECK(out(r, c) == 0.0);
          for (std::size_t r = top + rows; r < 143; ++r) CHECK(out(r, c) == 0.0);
        }
        double interior = 0.0;
        for (std::size_t c = 0; c < 143; ++c) interior += std::abs(out(top + rows / 2, c));
        CHECK(interior > 0.0);
      }
    }
  }
}

TEST_CASE("TNSR format") {
  std::mt19937_64 rng(7);
  Tensor t{{2, 3, 4}, gaussian_vector(24, rng)};
  const auto bytes = encode_tensor(t);
  REQUIRE(bytes.size() == 4 + 4 + 3 * 4 + 24 * 8);
  CHECK(std::memcmp(bytes.data(), "TNSR", 4) == 0);
  CHECK(bytes[4] == 3);
  CHECK(bytes[8] == 2);
  CHECK(decode_tensor(bytes) == t);

  double first = 0.0;
  std::memcpy(&first, bytes.data() + 20, 8);
  CHECK(first == t.values[0]);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_tensor(truncated), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_tensor(trailing), ParseError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_tensor(magic), ParseError);

  const auto path = std::filesystem::temp_directory_path() / "psd_test_tensor.tnsr";
  save_tensor(path, t);
  CHECK(load_tensor(path) == t);
  std::filesystem::remove(path);

  const std::vector<Vector> rows{{1, 2}, {3, 4}, {5, 6}};
  const Tensor stacked = stack_rows(rows);
  CHECK(stacked.dims == std::vector<std::size_t>{3, 2});
  CHECK(unstack_rows(stacked) == rows);
  CHECK_THROWS_AS(stack_rows(std::vector<Vector>{{1, 2}, {3}}), InputError);
}
