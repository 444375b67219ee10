#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "psd/kernels.hpp"
#include "support/oracles.hpp"

using namespace psd;
using psd::kernels::Isa;

namespace {

struct Pair {
  const kernels::KernelTable& ref;
  const kernels::KernelTable* simd;
};

Pair tables() { return {kernels::scalar_table(), kernels::table_for(Isa::Avx2)}; }

// Tolerance for reductions that sum in a different order.
double tol_for(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return 1e-13 * (1.0 + s);
}

}  // namespace

TEST_CASE("scalar table is always available and reports its isa") {
  CHECK(kernels::available(Isa::Scalar));
  CHECK(kernels::scalar_table().isa == Isa::Scalar);
  CHECK(kernels::isa_name(Isa::Avx2) == "avx2");
}

TEST_CASE("simd variants agree with the scalar reference") {
  auto [ref, simd] = tables();
  if (simd == nullptr) {
    MESSAGE("AVX2 variant unavailable on this machine; equivalence not exercised");
    return;
  }
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n <= 70; ++n) {
    const Vector a = testing::gaussian_vector(n, rng);
    const Vector b = testing::gaussian_vector(n, rng);
    CAPTURE(n);

    CHECK(std::abs(ref.dot(a.data(), b.data(), n) - simd->dot(a.data(), b.data(), n)) <=
          tol_for(a, b));
    CHECK(std::abs(ref.sum_squares(a.data(), n) - simd->sum_squares(a.data(), n)) <=
          tol_for(a, a));
    CHECK(std::abs(ref.abs_sum(a.data(), n) - simd->abs_sum(a.data(), n)) <=
          1e-13 * (1.0 + ref.abs_sum(a.data(), n)));

    Vector y1 = b, y2 = b;
    ref.axpy(0.37, a.data(), y1.data(), n);
    simd->axpy(0.37, a.data(), y2.data(), n);
    CHECK(testing::max_abs_diff(y1, y2) <= 1e-14 * 4.0);

    // Elementwise without reduction: identical bits.
    Vector s1(n), s2(n);
    ref.soft_threshold(a.data(), 0.4, s1.data(), n);
    simd->soft_threshold(a.data(), 0.4, s2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s1[i] == s2[i]);
      CHECK(std::signbit(s1[i]) == std::signbit(s2[i]));
    }
  }
}

TEST_CASE("simd matrix kernels agree with the scalar reference") {
  auto [ref, simd] = tables();
  if (simd == nullptr) return;
  std::mt19937_64 rng(11);
  for (std::size_t rows : {1, 3, 4, 7, 8, 64}) {
    for (std::size_t cols : {1, 5, 8, 9, 81}) {
      CAPTURE(rows);
      CAPTURE(cols);
      const Vector a = testing::gaussian_vector(rows * cols, rng);
      const Vector x = testing::gaussian_vector(cols, rng);
      const Vector xt = testing::gaussian_vector(rows, rng);

      Vector y1(rows), y2(rows);
      ref.gemv(a.data(), rows, cols, x.data(), y1.data());
      simd->gemv(a.data(), rows, cols, x.data(), y2.data());
      CHECK(testing::max_abs_diff(y1, y2) <= 1e-12);

      Vector t1(cols), t2(cols);
      ref.gemv_t(a.data(), rows, cols, xt.data(), t1.data());
      simd->gemv_t(a.data(), rows, cols, xt.data(), t2.data());
      CHECK(testing::max_abs_diff(t1, t2) <= 1e-12);

      Vector m1 = a, m2 = a;
      ref.rank1_update(-0.3, xt.data(), x.data(), m1.data(), rows, cols);
      simd->rank1_update(-0.3, xt.data(), x.data(), m2.data(), rows, cols);
      CHECK(testing::max_abs_diff(m1, m2) <= 1e-13);
    }
  }
}

TEST_CASE("scalar gemv matches a textbook triple loop") {
  std::mt19937_64 rng(3);
  const std::size_t rows = 6, cols = 5;
  const Vector a = testing::gaussian_vector(rows * cols, rng);
  const Vector x = testing::gaussian_vector(cols, rng);
  Vector y(rows);
  kernels::scalar_table().gemv(a.data(), rows, cols, x.data(), y.data());
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += a[r * cols + c] * x[c];
    CHECK(y[r] == doctest::Approx(s).epsilon(1e-15));
  }
}

TEST_CASE("active isa can be switched and restored") {
  const Isa original = kernels::active_isa();
  kernels::set_active_isa(Isa::Scalar);
  CHECK(kernels::active_isa() == Isa::Scalar);
  if (kernels::available(Isa::Avx2)) {
    kernels::set_active_isa(Isa::Avx2);
    CHECK(kernels::active_isa() == Isa::Avx2);
  } else {
    CHECK_THROWS(kernels::set_active_isa(Isa::Avx2));
  }
  kernels::set_active_isa(original);
}

TEST_CASE("vector tanh stays within a few ulp of std::tanh") {
  auto [ref, simd] = tables();
  if (simd == nullptr) {
    MESSAGE("AVX2 variant unavailable on this machine; equivalence not exercised");
    return;
  }
  Vector x;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> wide(-25.0, 25.0), narrow(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(-320.0, 2.0);
  for (int i = 0; i < 20000; ++i) {
    x.push_back(wide(rng));
    x.push_back(narrow(rng));
    x.push_back((i % 2 == 0 ? 1.0 : -1.0) * std::pow(10.0, expo(rng)));
  }
  // Branch points of the range reduction and the clamp.
  for (double v : {0.0, -0.0, 0.17328679513998632, 0.3465735902799726, 0.6931471805599453, 19.999,
                   20.0, 20.001, 1e-320, 4.9e-324, 710.0, 1e308}) {
    x.push_back(v);
    x.push_back(-v);
  }
  const Vector gain(x.size(), 1.0);
  Vector a(x.size()), b(x.size());
  ref.scaled_tanh(x.data(), gain.data(), a.data(), x.size());
  simd->scaled_tanh(x.data(), gain.data(), b.data(), x.size());
  double worst_ulps = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::signbit(a[i]) == std::signbit(b[i]));
    const double ulp = std::max(std::abs(std::nextafter(a[i], 2.0) - a[i]),
                                std::numeric_limits<double>::denorm_min());
    worst_ulps = std::max(worst_ulps, std::abs(a[i] - b[i]) / ulp);
  }
  MESSAGE("worst vector tanh error: " << worst_ulps << " ulp");
  CHECK(worst_ulps <= 4.0);

  const double inf = std::numeric_limits<double>::infinity();
  const Vector special{inf, -inf, std::nan(""), 0.5};
  const Vector g2{2.0, 3.0, 1.0, -1.0};
  Vector s(4);
  simd->scaled_tanh(special.data(), g2.data(), s.data(), 4);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == -3.0);
  CHECK(std::isnan(s[2]));
  CHECK(s[3] == doctest::Approx(-std::tanh(0.5)).epsilon(1e-15));
}
