#include <cmath>

#include "variants.hpp"

namespace psd::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

double abs_sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
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
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::abs(x[i]) - t;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

void scaled_tanh(const double* x, const double* gain, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = gain[i] * std::tanh(x[i]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar, dot,    sum_squares,  abs_sum,
                                 axpy,        gemv,   gemv_t,       rank1_update,
                                 soft_threshold, scaled_tanh};
  return table;
}

}  // namespace psd::kernels::detail
