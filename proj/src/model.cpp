#include "psd/model.hpp"

#include <cmath>
#include <string>

#include "psd/error.hpp"
#include "psd/kernels.hpp"

namespace psd {
namespace {

std::string dims(std::size_t a, std::size_t b) {
  return std::to_string(a) + "x" + std::to_string(b);
}

void check_signal(std::span<const double> y, std::size_t n, const char* what) {
  if (y.size() != n) {
    throw ShapeError(std::string(what) + ": signal has length " + std::to_string(y.size()) +
                     ", model expects " + std::to_string(n));
  }
}

void check_code(std::span<const double> z, std::size_t m, const char* what) {
  if (z.size() != m) {
    throw ShapeError(std::string(what) + ": code has length " + std::to_string(z.size()) +
                     ", model expects " + std::to_string(m));
  }
}

// r = y - B z
Vector residual(std::span<const double> y, std::span<const double> z, const Dictionary& b) {
  Vector r(b.signal_size());
  b.reconstruct(z, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
  return r;
}

// Pre-activation W y + D.
Vector preactivation(std::span<const double> y, const Predictor& p) {
  Vector a(p.code_size());
  p.filters.multiply(y, a);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += p.bias[k];
  return a;
}

// Back-propagates dL/dF through F = G tanh(W y + D).
void backprop_predictor(std::span<const double> y, const Predictor& p, std::span<const double> act,
                        std::span<const double> d_output, ModelGradients& g) {
  const std::size_t m = p.code_size();
  Vector d_pre(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = std::tanh(act[k]);
    g.d_gain[k] = d_output[k] * t;
    d_pre[k] = d_output[k] * p.gain[k] * (1.0 - t * t);
  }
  g.d_bias = d_pre;
  kernels::active().rank1_update(1.0, d_pre.data(), y.data(), g.d_filters.data().data(), m,
                                 p.signal_size());
}

}  // namespace

double Dictionary::max_column_norm_error() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < code_size(); ++j) {
    worst = std::max(worst, std::abs(std::sqrt(kernels::sum_squares(column(j))) - 1.0));
  }
  return worst;
}

void Hyperparams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw PreconditionError("lambda must be a finite value >= 0");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw PreconditionError("alpha must be a finite value >= 0");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw PreconditionError("eta must be > 0");
}

double inference_alpha(const Hyperparams& h) noexcept {
  return h.mode == TrainingMode::Separate ? 0.0 : h.alpha;
}

void check_model_shapes(const Dictionary& b, const Predictor& p) {
  if (b.signal_size() != p.signal_size() || b.code_size() != p.code_size() ||
      p.gain.size() != p.code_size() || p.bias.size() != p.code_size()) {
    throw ShapeError("dictionary is " + dims(b.signal_size(), b.code_size()) +
                     " but predictor filters are " + dims(p.code_size(), p.signal_size()) +
                     " with gain/bias of length " + std::to_string(p.gain.size()) + "/" +
                     std::to_string(p.bias.size()));
  }
}

Vector predictor_forward(std::span<const double> y, const Predictor& p) {
  if (p.gain.size() != p.code_size() || p.bias.size() != p.code_size()) {
    throw ShapeError("predictor gain/bias length does not match filter rows");
  }
  check_signal(y, p.signal_size(), "predictor_forward");
  Vector out = preactivation(y, p);
  kernels::active().scaled_tanh(out.data(), p.gain.data(), out.data(), out.size());
  return out;
}

double bpdn_loss(std::span<const double> y, std::span<const double> z, const Dictionary& b,
                 double lambda) {
  check_signal(y, b.signal_size(), "bpdn_loss");
  check_code(z, b.code_size(), "bpdn_loss");
  const Vector r = residual(y, z, b);
  return 0.5 * kernels::sum_squares(r) + lambda * kernels::abs_sum(z);
}

double compound_loss_with_prediction(std::span<const double> y, std::span<const double> z,
                                     const Dictionary& b, std::span<const double> prediction,
                                     double lambda, double alpha) {
  check_signal(y, b.signal_size(), "compound_loss");
  check_code(z, b.code_size(), "compound_loss");
  check_code(prediction, b.code_size(), "compound_loss");
  const Vector r = residual(y, z, b);
  double pred_err = 0.0;
  if (alpha != 0.0) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double e = z[k] - prediction[k];
      pred_err += e * e;
    }
  }
  return kernels::sum_squares(r) + lambda * kernels::abs_sum(z) + alpha * pred_err;
}

double compound_loss(std::span<const double> y, std::span<const double> z, const Dictionary& b,
                     const Predictor& p, const Hyperparams& h) {
  check_model_shapes(b, p);
  const Vector f = predictor_forward(y, p);
  return compound_loss_with_prediction(y, z, b, f, h.lambda, h.alpha);
}

Vector grad_z_smooth(std::span<const double> y, std::span<const double> z, const Dictionary& b,
                     const Predictor& p, const Hyperparams& h) {
  check_model_shapes(b, p);
  check_signal(y, b.signal_size(), "grad_z_smooth");
  check_code(z, b.code_size(), "grad_z_smooth");
  Vector r = residual(y, z, b);
  Vector g(b.code_size());
  b.correlate(r, g);  // B^T (y - Bz)
  const Vector f = predictor_forward(y, p);
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k] = -2.0 * g[k] + 2.0 * h.alpha * (z[k] - f[k]);
  }
  return g;
}

ModelGradients grad_params(std::span<const double> y, std::span<const double> z,
                           const Dictionary& b, const Predictor& p, const Hyperparams& h) {
  check_model_shapes(b, p);
  check_signal(y, b.signal_size(), "grad_params");
  check_code(z, b.code_size(), "grad_params");
  const std::size_t n = b.signal_size();
  const std::size_t m = b.code_size();

  ModelGradients g{Matrix(m, n), Vector(m, 0.0), Matrix(m, n), Vector(m, 0.0)};
  const Vector act = preactivation(y, p);
  Vector f(m);
  for (std::size_t k = 0; k < m; ++k) f[k] = p.gain[k] * std::tanh(act[k]);

  const bool autoencoder = h.mode == TrainingMode::Autoencoder;
  const std::span<const double> code = autoencoder ? std::span<const double>(f) : z;

  // d/dB |y - Bz|^2 = -2 (y - Bz) z^T; row j of the atom layout is -2 z_j r.
  const Vector r = residual(y, code, b);
  kernels::active().rank1_update(-2.0, code.data(), r.data(), g.d_basis.data().data(), m, n);

  Vector d_output(m, 0.0);
  if (autoencoder) {
    b.correlate(r, d_output);
    for (std::size_t k = 0; k < m; ++k) {
      const double sign = f[k] > 0.0 ? 1.0 : (f[k] < 0.0 ? -1.0 : 0.0);
      d_output[k] = -2.0 * d_output[k] + h.lambda * sign;
    }
  } else {
    if (h.alpha == 0.0) return g;
    for (std::size_t k = 0; k < m; ++k) d_output[k] = -2.0 * h.alpha * (z[k] - f[k]);
  }
  backprop_predictor(y, p, act, d_output, g);
  return g;
}

Dictionary normalize_columns(Dictionary b) {
  for (std::size_t j = 0; j < b.code_size(); ++j) {
    auto col = b.column(j);
    const double norm = std::sqrt(kernels::sum_squares(col));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DegenerateColumnError(j, "dictionary column " + std::to_string(j) +
                                         " has zero or non-finite norm");
    }
    for (double& v : col) v /= norm;
  }
  return b;
}

void reinitialize_column(Dictionary& b, std::size_t j, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto col = b.column(j);
  double norm = 0.0;
  while (!(norm > 0.0)) {
    for (double& v : col) v = unit(rng);
    norm = std::sqrt(kernels::sum_squares(col));
  }
  for (double& v : col) v /= norm;
}

Model init_model(std::size_t signal_size, std::size_t code_size, std::uint64_t seed) {
  if (signal_size == 0 || code_size == 0) {
    throw PreconditionError("init_model needs n >= 1 and m >= 1");
  }
  std::mt19937_64 rng(seed);
  Model model{Dictionary(signal_size, code_size), Predictor(signal_size, code_size)};
  for (std::size_t j = 0; j < code_size; ++j) reinitialize_column(model.dictionary, j, rng);

  const double scale = 1.0 / std::sqrt(static_cast<double>(signal_size));
  std::uniform_real_distribution<double> filter(-scale, scale);
  for (double& w : model.predictor.filters.data()) w = filter(rng);
  return model;
}

}  // namespace psd
