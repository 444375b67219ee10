#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

#include "psd/error.hpp"
#include "variants.hpp"

namespace psd::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(PSD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* choose_default() {
  if (const char* env = std::getenv("PSD_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return &detail::scalar_kernels();
  }
  if (const KernelTable* t = table_for(Isa::Avx2)) return t;
  return &detail::scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{choose_default()};
  return current;
}

}  // namespace

const KernelTable& scalar_table() { return detail::scalar_kernels(); }

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &detail::scalar_kernels();
    case Isa::Avx2:
#if defined(PSD_HAVE_AVX2)
      if (cpu_has_avx2()) return &detail::avx2_kernels();
#endif
      return nullptr;
  }
  return nullptr;
}

bool available(Isa isa) { return table_for(isa) != nullptr; }

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) {
    throw PreconditionError("kernel variant '" + std::string(isa_name(isa)) +
                            "' is not available on this machine");
  }
  slot().store(t, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) { return active().sum_squares(a.data(), a.size()); }

double abs_sum(std::span<const double> a) { return active().abs_sum(a.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void soft_threshold(std::span<const double> x, double t, std::span<double> out) {
  assert(x.size() == out.size());
  active().soft_threshold(x.data(), t, out.data(), x.size());
}

}  // namespace psd::kernels
