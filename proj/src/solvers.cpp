#include "psd/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "psd/error.hpp"
#include "psd/kernels.hpp"

namespace psd {
namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Both iterations converge linearly near the solution, so the remaining
// distance is about move * q / (1 - q) for contraction ratio q. A small move
// alone says little when q is close to 1.
class StoppingRule {
 public:
  explicit StoppingRule(double tol) : tol_(tol) {}

  bool done(double prev_loss, double loss, double max_move, std::span<const double> z) {
    const double rel = (prev_loss - loss) / std::max(std::abs(prev_loss), 1e-300);
    double remaining = max_move;
    if (prev_move_ > 0.0 && max_move > 0.0) {
      const double q = max_move / prev_move_;
      remaining = q < 1.0 ? std::max(max_move, max_move * q / (1.0 - q))
                          : std::numeric_limits<double>::infinity();
    }
    prev_move_ = max_move;
    return rel <= tol_ && remaining <= tol_ * std::max(1.0, max_abs(z));
  }

 private:
  double tol_;
  double prev_move_ = 0.0;
};

// Smooth part of the compound objective and its gradient for a fixed
// prediction.
class SmoothCompound {
 public:
  SmoothCompound(std::span<const double> y, const Dictionary& b, std::span<const double> target,
                 double alpha)
      : y_(y), b_(b), target_(target), alpha_(alpha), recon_(y.size()), corr_(b.code_size()) {}

  double value(std::span<const double> z) {
    b_.reconstruct(z, recon_);
    double rec = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double d = y_[i] - recon_[i];
      rec += d * d;
    }
    double pred = 0.0;
    if (alpha_ != 0.0) {
      for (std::size_t k = 0; k < z.size(); ++k) {
        const double e = z[k] - target_[k];
        pred += e * e;
      }
    }
    return rec + alpha_ * pred;
  }

  // 2 B^T (Bz - y) + 2 alpha (z - target)
  void gradient(std::span<const double> z, std::span<double> out) {
    b_.reconstruct(z, recon_);
    for (std::size_t i = 0; i < y_.size(); ++i) recon_[i] -= y_[i];
    b_.correlate(recon_, corr_);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = 2.0 * corr_[k] + 2.0 * alpha_ * (z[k] - target_[k]);
    }
  }

 private:
  std::span<const double> y_;
  const Dictionary& b_;
  std::span<const double> target_;
  double alpha_;
  Vector recon_;
  Vector corr_;
};

// Both objectives share one stationarity structure once divided through:
//   (B^T B + a I) z = B^T y + a f - mu s   on the support,
//   |b_j^T (y - Bz) + a f_j| <= mu          off it,
// with (a, mu) = (0, lambda) for bpdn and (alpha, lambda / 2) for the
// compound loss. Solving the support system directly finishes off iterations
// that crawl when the active columns are nearly dependent.
class SupportPolish {
 public:
  SupportPolish(std::span<const double> y, const Dictionary& b, std::span<const double> f,
                double a, double mu)
      : y_(y), b_(b), f_(f), a_(a), mu_(mu) {}

  enum class Outcome { None, Optimal, Reduced };

  // Optimal: z now holds the certified minimizer. Reduced: z moved along a
  // null direction of the active columns, one atom dropped, loss not
  // increased. Attempts wait until the sign pattern has held for a few calls.
  Outcome attempt(Vector& z) {
    std::vector<signed char> pattern(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) pattern[k] = z[k] > 0.0 ? 1 : (z[k] < 0.0 ? -1 : 0);
    if (pattern != pattern_) {
      pattern_ = std::move(pattern);
      stable_ = 0;
      return Outcome::None;
    }
    if (++stable_ != kWarmup) return Outcome::None;

    std::vector<std::size_t> support;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (pattern_[k] != 0) support.push_back(k);
    }
    const auto s = static_cast<Eigen::Index>(support.size());
    if (a_ == 0.0 && support.size() > b_.signal_size()) {
      reduce(z, support);
      return Outcome::Reduced;
    }

    const std::size_t n = b_.signal_size();
    Eigen::MatrixXd gram(s, s);
    Eigen::VectorXd rhs(s);
    for (Eigen::Index p = 0; p < s; ++p) {
      const auto cp = b_.column(support[static_cast<std::size_t>(p)]);
      for (Eigen::Index q = 0; q <= p; ++q) {
        const auto cq = b_.column(support[static_cast<std::size_t>(q)]);
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) g += cp[i] * cq[i];
        gram(p, q) = gram(q, p) = g;
      }
      gram(p, p) += a_;
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += cp[i] * y_[i];
      const std::size_t k = support[static_cast<std::size_t>(p)];
      rhs(p) = c + (a_ != 0.0 ? a_ * f_[k] : 0.0) - mu_ * pattern_[k];
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return Outcome::None;
    const Eigen::VectorXd sol = ldlt.solve(rhs);

    Vector candidate(z.size(), 0.0);
    for (Eigen::Index p = 0; p < s; ++p) {
      const std::size_t k = support[static_cast<std::size_t>(p)];
      if (!std::isfinite(sol(p)) || sol(p) * pattern_[k] <= 0.0) return Outcome::None;
      candidate[k] = sol(p);
    }
    Vector resid(n), corr(z.size());
    b_.reconstruct(candidate, resid);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y_[i] - resid[i];
    b_.correlate(resid, corr);
    const double slack = mu_ * 1e-9 + 1e-12;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (pattern_[k] != 0) continue;
      const double g = corr[k] + (a_ != 0.0 ? a_ * f_[k] : 0.0);
      if (std::abs(g) > mu_ + slack) return Outcome::None;
    }
    z.swap(candidate);
    return Outcome::Optimal;
  }

 private:
  // More active atoms than signal dimensions: Bz is unchanged along a null
  // vector d of B_S while the penalty changes by mu * t * s^T d, so stepping
  // with s^T d <= 0 until a coordinate reaches zero never hurts.
  void reduce(Vector& z, const std::vector<std::size_t>& support) const {
    const std::size_t n = b_.signal_size();
    Eigen::MatrixXd bs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(support.size()));
    for (std::size_t p = 0; p < support.size(); ++p) {
      const auto c = b_.column(support[p]);
      for (std::size_t i = 0; i < n; ++i) {
        bs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = c[i];
      }
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(bs, Eigen::ComputeFullV);
    Eigen::VectorXd d = svd.matrixV().col(bs.cols() - 1);
    double slope = 0.0;
    for (std::size_t p = 0; p < support.size(); ++p) {
      slope += pattern_[support[p]] * d(static_cast<Eigen::Index>(p));
    }
    if (slope > 0.0) d = -d;

    double t = std::numeric_limits<double>::infinity();
    std::size_t hit = support.size();
    for (std::size_t p = 0; p < support.size(); ++p) {
      const double dp = d(static_cast<Eigen::Index>(p));
      const double zk = z[support[p]];
      if (zk * dp < 0.0 && -zk / dp < t) {
        t = -zk / dp;
        hit = p;
      }
    }
    if (hit == support.size()) return;
    for (std::size_t p = 0; p < support.size(); ++p) {
      z[support[p]] += t * d(static_cast<Eigen::Index>(p));
    }
    z[support[hit]] = 0.0;
  }

  static constexpr int kWarmup = 3;
  std::span<const double> y_;
  const Dictionary& b_;
  std::span<const double> f_;
  double a_;
  double mu_;
  std::vector<signed char> pattern_;
  int stable_ = 0;
};

}  // namespace

void SolveOptions::validate() const {
  if (!(tol > 0.0)) throw PreconditionError("solver tol must be > 0");
  if (max_iter < 1) throw PreconditionError("solver max_iter must be >= 1");
}

double soft_threshold(double x, double t) {
  const double mag = std::abs(x) - t;
  return mag > 0.0 ? std::copysign(mag, x) : 0.0;
}

double squared_spectral_norm(const Dictionary& b) {
  const std::size_t m = b.code_size();
  if (m == 0) return 0.0;
  // Fixed pseudo-random start: a constant vector can be orthogonal to the top
  // eigenvector of structured dictionaries.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  Vector v(m), u(b.signal_size()), w(m);
  for (double& x : v) x = unit(rng);
  double norm = std::sqrt(kernels::sum_squares(v));
  for (double& x : v) x /= norm;

  double estimate = 0.0;
  for (int it = 0; it < 50; ++it) {
    b.reconstruct(v, u);
    const double rayleigh = kernels::sum_squares(u);  // v^T B^T B v, |v| = 1
    b.correlate(u, w);
    norm = std::sqrt(kernels::sum_squares(w));
    if (norm == 0.0) return rayleigh;
    for (std::size_t k = 0; k < m; ++k) v[k] = w[k] / norm;
    const bool done = std::abs(rayleigh - estimate) <= 1e-10 * std::max(rayleigh, 1e-300);
    estimate = rayleigh;
    if (done) break;
  }
  return estimate;
}

SolveResult solve_bpdn_cd(std::span<const double> y, const Dictionary& b, double lambda,
                          const SolveOptions& opts) {
  opts.validate();
  if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
  if (y.size() != b.signal_size()) {
    throw ShapeError("solve_bpdn_cd: signal has length " + std::to_string(y.size()) +
                     ", dictionary expects " + std::to_string(b.signal_size()));
  }
  if (!b.has_unit_columns(1e-10)) {
    throw PreconditionError("solve_bpdn_cd: dictionary columns must have unit norm (max error " +
                            std::to_string(b.max_column_norm_error()) + ")");
  }

  const auto& k = kernels::active();
  const std::size_t n = b.signal_size();
  const std::size_t m = b.code_size();
  SolveResult result{Vector(m, 0.0), 0.0, 0, false};
  Vector& z = result.code;
  Vector r(y.begin(), y.end());

  double loss = 0.5 * k.sum_squares(r.data(), n);
  StoppingRule stop(opts.tol);
  SupportPolish polish(y, b, {}, 0.0, lambda);
  for (std::size_t sweep = 1; sweep <= opts.max_iter; ++sweep) {
    double max_move = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.column(j).data();
      const double rho = k.dot(bj, r.data(), n) + z[j];
      const double updated = soft_threshold(rho, lambda);
      const double delta = updated - z[j];
      if (delta != 0.0) {
        k.axpy(-delta, bj, r.data(), n);
        z[j] = updated;
        max_move = std::max(max_move, std::abs(delta));
      }
    }
    const double next = 0.5 * k.sum_squares(r.data(), n) + lambda * k.abs_sum(z.data(), m);
    result.iterations = sweep;
    Vector candidate = z;
    const auto outcome = polish.attempt(candidate);
    if (outcome != SupportPolish::Outcome::None &&
        bpdn_loss(y, candidate, b, lambda) <= next) {
      z.swap(candidate);
      if (outcome == SupportPolish::Outcome::Optimal) {
        result.converged = true;
        break;
      }
      b.reconstruct(z, r);
      for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - r[i];
      loss = bpdn_loss(y, z, b, lambda);
      continue;
    }
    const bool done = stop.done(loss, next, max_move, z);
    loss = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.final_loss = bpdn_loss(y, z, b, lambda);
  return result;
}

SolveResult infer_optimal(std::span<const double> y, const Dictionary& b, const Predictor& p,
                          const Hyperparams& h, const SolveOptions& opts,
                          std::vector<double>* loss_trace) {
  return infer_optimal(y, b, p, h, opts, squared_spectral_norm(b), loss_trace);
}

SolveResult infer_optimal(std::span<const double> y, const Dictionary& b, const Predictor& p,
                          const Hyperparams& h, const SolveOptions& opts, double basis_norm_sq,
                          std::vector<double>* loss_trace) {
  opts.validate();
  check_model_shapes(b, p);
  if (!(h.lambda >= 0.0) || !(h.alpha >= 0.0)) {
    throw PreconditionError("infer_optimal: lambda and alpha must be >= 0");
  }

  const std::size_t m = b.code_size();
  const Vector prediction = predictor_forward(y, p);
  const double alpha = inference_alpha(h);
  SolveResult result{prediction, 0.0, 0, false};
  Vector& z = result.code;

  if (loss_trace != nullptr) loss_trace->clear();
  double loss = compound_loss_with_prediction(y, z, b, prediction, h.lambda, alpha);
  if (loss_trace != nullptr) loss_trace->push_back(loss);
  if (h.mode == TrainingMode::Autoencoder) {
    result.final_loss = loss;
    result.converged = true;
    return result;
  }

  const double lipschitz = std::max(2.0 * (basis_norm_sq + alpha), 1e-12);
  double step = 1.0 / lipschitz;
  SmoothCompound smooth(y, b, prediction, alpha);
  Vector grad(m), trial(m), shifted(m);

  double smooth_value = smooth.value(z);
  StoppingRule stop(opts.tol);
  SupportPolish polish(y, b, prediction, alpha, 0.5 * h.lambda);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    smooth.gradient(z, grad);
    double trial_smooth = 0.0;
    for (;;) {
      for (std::size_t k = 0; k < m; ++k) shifted[k] = z[k] - step * grad[k];
      kernels::soft_threshold(shifted, step * h.lambda, trial);
      trial_smooth = smooth.value(trial);
      if (opts.step_rule == StepRule::FixedLipschitz) break;
      // Sufficient decrease for the quadratic model with curvature 1/step.
      double lin = 0.0, sq = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = trial[k] - z[k];
        lin += grad[k] * d;
        sq += d * d;
      }
      if (trial_smooth <= smooth_value + lin + sq / (2.0 * step) + 1e-15 * std::abs(smooth_value) ||
          step < 1e-300) {
        break;
      }
      step *= 0.5;
    }

    double max_move = 0.0;
    for (std::size_t k = 0; k < m; ++k) max_move = std::max(max_move, std::abs(trial[k] - z[k]));
    z.swap(trial);
    smooth_value = trial_smooth;
    double next = smooth_value + h.lambda * kernels::abs_sum(z);
    result.iterations = it;
    Vector candidate = z;
    const auto outcome = polish.attempt(candidate);
    if (outcome != SupportPolish::Outcome::None) {
      const double polished_smooth = smooth.value(candidate);
      const double polished = polished_smooth + h.lambda * kernels::abs_sum(candidate);
      if (polished <= next) {
        z.swap(candidate);
        smooth_value = polished_smooth;
        next = polished;
        if (outcome == SupportPolish::Outcome::Optimal) {
          if (loss_trace != nullptr) loss_trace->push_back(next);
          result.final_loss = next;
          result.converged = true;
          return result;
        }
      }
    }
    if (loss_trace != nullptr) loss_trace->push_back(next);
    const bool done = stop.done(loss, next, max_move, z);
    loss = next;
    if (done) {
      result.converged = true;
      break;
    }
    if (opts.step_rule == StepRule::Backtracking) step *= 2.0;
  }
  result.final_loss = loss;
  return result;
}

Vector infer_approx(std::span<const double> y, const Predictor& p) {
  return predictor_forward(y, p);
}

}  // namespace psd
