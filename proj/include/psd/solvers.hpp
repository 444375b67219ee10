#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "psd/model.hpp"

namespace psd {

enum class StepRule { FixedLipschitz, Backtracking };

struct SolveOptions {
  /// Relative loss decrease below which an iterate counts as stationary.
  /// The largest coordinate move must also fall below tol * max(1, |z|_inf).
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  StepRule step_rule = StepRule::FixedLipschitz;

  void validate() const;
};

struct SolveResult {
  Vector code;
  double final_loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// sign(x) * max(|x| - t, 0)
double soft_threshold(double x, double t);

/// Largest eigenvalue of B^T B (squared spectral norm), by power iteration
/// (at most 50 iterations, relative tolerance 1e-10).
double squared_spectral_norm(const Dictionary& b);

/// Exact minimizer of 1/2 |y - Bz|^2 + lambda |z|_1 by cyclic coordinate
/// descent from z = 0. Requires unit-norm columns (PreconditionError
/// otherwise). On max_iter exhaustion returns the last (lowest-loss) iterate
/// with converged = false.
SolveResult solve_bpdn_cd(std::span<const double> y, const Dictionary& b, double lambda,
                          const SolveOptions& opts = {});

/// Minimizes |y - Bz|^2 + lambda |z|_1 + alpha |z - F(y)|^2 by proximal
/// gradient descent started at F(y). Separate mode uses alpha = 0;
/// Autoencoder mode returns F(y) without iterating. `loss_trace`, when given,
/// receives the objective at the start point and after every iteration.
SolveResult infer_optimal(std::span<const double> y, const Dictionary& b, const Predictor& p,
                          const Hyperparams& h, const SolveOptions& opts = {},
                          std::vector<double>* loss_trace = nullptr);

/// As above with B^T B's largest eigenvalue supplied by the caller, so a
/// batch sharing one dictionary computes it once.
SolveResult infer_optimal(std::span<const double> y, const Dictionary& b, const Predictor& p,
                          const Hyperparams& h, const SolveOptions& opts,
                          double basis_norm_sq, std::vector<double>* loss_trace = nullptr);

/// Single forward pass of the regressor.
Vector infer_approx(std::span<const double> y, const Predictor& p);

// Brute-force reference solver.

struct BpdnObjective {
  double lambda = 0.0;
};

struct CompoundObjective {
  Predictor predictor;
  Hyperparams hyper;
};

using OracleObjective = std::variant<BpdnObjective, CompoundObjective>;

inline constexpr std::size_t kOracleMaxCodeSize = 12;

/// Enumerates every support and sign pattern, solves the stationarity system
/// on the support, keeps sign-consistent candidates that satisfy the
/// off-support optimality condition, and returns the one with the smallest
/// objective. Ties within 1e-12 go to the smaller support, then to the
/// lexicographically smallest sign pattern (- < 0 < +). The compound objective
/// honours Separate mode (alpha = 0). Throws SizeError when m > 12.
Vector solve_oracle(std::span<const double> y, const Dictionary& b,
                    const OracleObjective& objective);

}  // namespace psd
