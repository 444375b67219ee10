// Compiled with -mavx2 -mfma. Only reached after the dispatcher has checked
// the CPU flags.
#include <immintrin.h>

#include <cmath>

#include "variants.hpp"

namespace psd::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

double abs_sum(const double* a, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(a + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t r = 0;
  // Four rows at a time so each load of x is reused.
  for (; r + 4 <= rows; r += 4) {
    const double* a0 = a + r * cols;
    const double* a1 = a0 + cols;
    const double* a2 = a1 + cols;
    const double* a3 = a2 + cols;
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + c), xv, s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + c), xv, s1);
      s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + c), xv, s2);
      s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a3 + c), xv, s3);
    }
    double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
    for (; c < cols; ++c) {
      t0 += a0[c] * x[c];
      t1 += a1[c] * x[c];
      t2 += a2[c] * x[c];
      t3 += a3[c] * x[c];
    }
    y[r] = t0;
    y[r + 1] = t1;
    y[r + 2] = t2;
    y[r + 3] = t3;
  }
  for (; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) axpy(x[r], a + r * cols, y, cols);
  }
}

void rank1_update(double alpha, const double* u, const double* v, double* a, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(alpha * u[r], v, a + r * cols, cols);
}

void soft_threshold(const double* x, double t, double* out, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d sign = _mm256_and_pd(sign_mask, v);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(_mm256_andnot_pd(sign_mask, v), vt), zero);
    // max() yields +0 for the dead zone; or-ing the sign back would give -0
    // for negative inputs, so the sign is masked off where mag == 0.
    const __m256d live = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_or_pd(mag, _mm256_and_pd(sign, live)));
  }
  for (; i < n; ++i) {
    const double mag = std::abs(x[i]) - t;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

// tanh(x) = e / (e + 2) with e = expm1(2|x|), sign restored at the end. The
// expm1 form has no cancellation near zero. expm1(a) = 2^k (1 + p) - 1 with
// a = k ln2 + r, |r| <= ln2 / 2, and p = expm1(r) from its Taylor series
// through r^13 (truncation below 2^-56 relative).
__m256d tanh_pd(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d ax = _mm256_andnot_pd(sign_mask, x);
  // tanh(20) rounds to 1; clamping keeps 2^k in range.
  const __m256d a = _mm256_mul_pd(_mm256_min_pd(ax, _mm256_set1_pd(20.0)), _mm256_set1_pd(2.0));
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(a, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93147180369123816490e-01), a);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kInvFactorial[] = {
      1.0 / 2,          1.0 / 6,           1.0 / 24,           1.0 / 120,
      1.0 / 720,        1.0 / 5040,        1.0 / 40320,        1.0 / 362880,
      1.0 / 3628800,    1.0 / 39916800,    1.0 / 479001600,    1.0 / 6227020800};
  __m256d q = _mm256_set1_pd(kInvFactorial[11]);
  for (int j = 10; j >= 0; --j) q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(kInvFactorial[j]));
  const __m256d p = _mm256_fmadd_pd(_mm256_mul_pd(r, r), q, r);

  const __m128i k32 = _mm256_cvtpd_epi32(k);
  const __m256i bits = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_cvtepi32_epi64(k32), _mm256_set1_epi64x(1023)), 52);
  const __m256d scale = _mm256_castsi256_pd(bits);
  const __m256d e = _mm256_fmadd_pd(scale, p, _mm256_sub_pd(scale, _mm256_set1_pd(1.0)));
  const __m256d t = _mm256_div_pd(e, _mm256_add_pd(e, _mm256_set1_pd(2.0)));

  const __m256d signed_t = _mm256_or_pd(t, _mm256_and_pd(sign_mask, x));
  return _mm256_blendv_pd(signed_t, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
}

void scaled_tanh(const double* x, const double* gain, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = tanh_pd(_mm256_loadu_pd(x + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(gain + i), v));
  }
  for (; i < n; ++i) out[i] = gain[i] * std::tanh(x[i]);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::Avx2, dot,    sum_squares,  abs_sum,
                                 axpy,      gemv,   gemv_t,       rank1_update,
                                 soft_threshold, scaled_tanh};
  return table;
}

}  // namespace psd::kernels::detail
