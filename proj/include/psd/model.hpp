#pragma once

// Model parameters and the PSD objective.
//
// Two objectives live here and they are deliberately not the same scale:
//
//   bpdn_loss      = 1/2 |y - Bz|^2 + lambda |z|_1
//   compound_loss  =     |y - Bz|^2 + lambda |z|_1 + alpha |z - F(y)|^2
//
// with F(y) = G tanh(W y + D) and G diagonal. Minimizing compound_loss at
// alpha = 0 is the same problem as bpdn_loss with lambda/2. Callers comparing
// the two must say which one they use.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

#include "psd/matrix.hpp"

namespace psd {

/// Basis matrix B (n x m). Stored column-major: column j is contiguous and is
/// row j of `atoms()`.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::size_t signal_size, std::size_t code_size)
      : atoms_(code_size, signal_size) {}
  /// `atoms` is m x n; row j becomes column j of B.
  explicit Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {}

  std::size_t signal_size() const noexcept { return atoms_.cols(); }
  std::size_t code_size() const noexcept { return atoms_.rows(); }

  std::span<const double> column(std::size_t j) const { return atoms_.row(j); }
  std::span<double> column(std::size_t j) { return atoms_.row(j); }

  /// B(i, j)
  double operator()(std::size_t i, std::size_t j) const { return atoms_(j, i); }
  double& operator()(std::size_t i, std::size_t j) { return atoms_(j, i); }

  const Matrix& atoms() const noexcept { return atoms_; }
  Matrix& atoms() noexcept { return atoms_; }

  /// out = B z
  void reconstruct(std::span<const double> z, std::span<double> out) const {
    atoms_.multiply_transposed(z, out);
  }
  /// out = B^T r
  void correlate(std::span<const double> r, std::span<double> out) const {
    atoms_.multiply(r, out);
  }

  /// Largest | |b_j| - 1 | over the columns.
  double max_column_norm_error() const;
  bool has_unit_columns(double tol = 1e-10) const { return max_column_norm_error() <= tol; }

  bool operator==(const Dictionary&) const = default;

 private:
  Matrix atoms_;
};

/// Feed-forward regressor F(y) = diag(gain) tanh(filters * y + bias).
struct Predictor {
  Vector gain;     // m
  Matrix filters;  // m x n
  Vector bias;     // m

  Predictor() = default;
  Predictor(std::size_t signal_size, std::size_t code_size)
      : gain(code_size, 1.0), filters(code_size, signal_size), bias(code_size, 0.0) {}

  std::size_t signal_size() const noexcept { return filters.cols(); }
  std::size_t code_size() const noexcept { return filters.rows(); }

  bool operator==(const Predictor&) const = default;
};

enum class TrainingMode {
  Joint,        // alpha in (0, inf): codes pulled toward the prediction
  Separate,     // codes inferred with alpha = 0, regressor fitted to them
  Autoencoder,  // codes are the prediction, no code optimization
};

struct Hyperparams {
  double lambda = 0.5;
  double alpha = 1.0;
  double eta = 0.02;
  TrainingMode mode = TrainingMode::Joint;

  /// Throws PreconditionError unless lambda >= 0, alpha >= 0, eta > 0.
  void validate() const;
};

/// The alpha used when optimizing codes: zero in Separate mode.
double inference_alpha(const Hyperparams& h) noexcept;

/// Gradient of compound_loss with respect to every learned parameter.
/// `d_basis` uses the same m x n atom layout as Dictionary::atoms().
struct ModelGradients {
  Matrix d_basis;
  Vector d_gain;
  Matrix d_filters;
  Vector d_bias;
};

struct Model {
  Dictionary dictionary;
  Predictor predictor;

  bool operator==(const Model&) const = default;
};

Vector predictor_forward(std::span<const double> y, const Predictor& p);

double bpdn_loss(std::span<const double> y, std::span<const double> z, const Dictionary& b,
                 double lambda);

double compound_loss(std::span<const double> y, std::span<const double> z, const Dictionary& b,
                     const Predictor& p, const Hyperparams& h);

/// Same value as compound_loss for a prediction already computed by the caller.
double compound_loss_with_prediction(std::span<const double> y, std::span<const double> z,
                                     const Dictionary& b, std::span<const double> prediction,
                                     double lambda, double alpha);

/// Gradient of the smooth part |y - Bz|^2 + alpha |z - F(y)|^2 with respect
/// to z. The l1 term is left to the proximal step of the solver.
Vector grad_z_smooth(std::span<const double> y, std::span<const double> z, const Dictionary& b,
                     const Predictor& p, const Hyperparams& h);

/// Parameter gradient of compound_loss with z held fixed. In Autoencoder mode
/// z is replaced by F(y) and the gradient flows through that substitution
/// (the lambda term included, using sign(F(y))).
ModelGradients grad_params(std::span<const double> y, std::span<const double> z,
                           const Dictionary& b, const Predictor& p, const Hyperparams& h);

/// Divides every column by its Euclidean norm. Throws DegenerateColumnError on
/// a zero column.
Dictionary normalize_columns(Dictionary b);

/// Draws column `j` uniformly on [-1, 1] and rescales it to unit norm.
void reinitialize_column(Dictionary& b, std::size_t j, std::mt19937_64& rng);

/// Seeded initialization: uniform [-1, 1] unit-normalized columns, filters
/// uniform on [-1/sqrt(n), 1/sqrt(n)], zero bias, unit gain.
Model init_model(std::size_t signal_size, std::size_t code_size, std::uint64_t seed);

/// Throws ShapeError unless the dictionary and predictor agree on n and m.
void check_model_shapes(const Dictionary& b, const Predictor& p);

}  // namespace psd
