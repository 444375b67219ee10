#pragma once

// Test-only reference code. Everything here is written with plain loops and
// does not call back into the library's kernels, so it can serve as an
// independent check on them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "psd/model.hpp"

namespace psd::testing {

inline Vector gaussian_vector(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

/// Gaussian columns rescaled to unit norm with a plain loop.
inline Dictionary random_dictionary(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  Dictionary b(n, m);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      b(i, j) = g(rng);
      norm += b(i, j) * b(i, j);
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) b(i, j) /= norm;
  }
  return b;
}

inline Predictor random_predictor(std::size_t n, std::size_t m, std::mt19937_64& rng,
                                  double filter_scale = 0.5) {
  Predictor p(n, m);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : p.gain) v = 0.5 + std::abs(g(rng));
  for (double& v : p.filters.data()) v = filter_scale * g(rng);
  for (double& v : p.bias) v = 0.2 * g(rng);
  return p;
}

inline Vector scalar_forward(const Vector& y, const Predictor& p) {
  Vector out(p.code_size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double a = p.bias[k];
    for (std::size_t i = 0; i < y.size(); ++i) a += p.filters(k, i) * y[i];
    out[k] = p.gain[k] * std::tanh(a);
  }
  return out;
}

inline double scalar_residual_sq(const Vector& y, const Vector& z, const Dictionary& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double recon = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) recon += b(i, j) * z[j];
    total += (y[i] - recon) * (y[i] - recon);
  }
  return total;
}

inline double scalar_l1(const Vector& z) {
  double s = 0.0;
  for (double v : z) s += std::abs(v);
  return s;
}

inline double scalar_bpdn(const Vector& y, const Vector& z, const Dictionary& b, double lambda) {
  return 0.5 * scalar_residual_sq(y, z, b) + lambda * scalar_l1(z);
}

inline double scalar_compound(const Vector& y, const Vector& z, const Dictionary& b,
                              const Predictor& p, double lambda, double alpha) {
  const Vector f = scalar_forward(y, p);
  double pred = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) pred += (z[k] - f[k]) * (z[k] - f[k]);
  return scalar_residual_sq(y, z, b) + lambda * scalar_l1(z) + alpha * pred;
}

/// Central difference of f at every coordinate of `x`, restoring x afterwards.
inline Vector central_difference(const std::function<double()>& f, std::span<double> x,
                                 double h = 1e-5) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

/// |a - b| / max(|a|, |b|, floor): relative error with a floor for entries
/// whose true value is (near) zero.
inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i], floor));
  return worst;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace psd::testing
