#pragma once

// Dense double-precision kernels used by every inner loop in the library.
//
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is chosen once at first use from the CPU
// feature flags; setting PSD_KERNELS=scalar in the environment forces the
// reference path. Variants agree to rounding (they sum in a different order,
// and the vector tanh is a few ulp off std::tanh), never bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace psd::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  double (*abs_sum)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y = A^T x, A row-major rows x cols, x has `rows` entries, y has `cols`
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += alpha * u v^T, A row-major rows x cols
  void (*rank1_update)(double alpha, const double* u, const double* v, double* a, std::size_t rows,
                       std::size_t cols);
  // out_i = sign(x_i) * max(|x_i| - t, 0)
  void (*soft_threshold)(const double* x, double t, double* out, std::size_t n);
  // out_i = gain_i * tanh(x_i); out may alias x
  void (*scaled_tanh)(const double* x, const double* gain, double* out, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks the features.
const KernelTable* table_for(Isa isa);
bool available(Isa isa);

/// Table used by the library. Thread-safe.
const KernelTable& active();
Isa active_isa();
/// Overrides the runtime choice. Throws PreconditionError when unavailable.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

// Span conveniences over the active table. Sizes are the caller's contract;
// debug builds assert them.
double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);
double abs_sum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void soft_threshold(std::span<const double> x, double t, std::span<double> out);

}  // namespace psd::kernels
