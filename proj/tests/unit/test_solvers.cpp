#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "psd/error.hpp"
#include "psd/solvers.hpp"
#include "support/oracles.hpp"

using namespace psd;
using namespace psd::testing;

namespace {

Dictionary orthonormal(std::size_t n, std::mt19937_64& rng) {
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gaussian_vector(1, rng)[0];
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Dictionary b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = q(i, j);
  return b;
}

Hyperparams hyper(double lambda, double alpha, TrainingMode mode = TrainingMode::Joint) {
  Hyperparams h;
  h.lambda = lambda;
  h.alpha = alpha;
  h.mode = mode;
  return h;
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(0.3, 0.5) == 0.0);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
  std::mt19937_64 rng(1);
  for (double x : gaussian_vector(200, rng, 3.0)) {
    CHECK(soft_threshold(x, 0.0) == x);
    for (double t : {0.1, 1.0, 2.5}) {
      const double r = soft_threshold(x, t);
      CHECK(std::abs(r) <= std::abs(x));
      CHECK(r * x >= 0.0);
    }
  }
}

TEST_CASE("squared_spectral_norm matches the dense eigenvalue") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Dictionary b = random_dictionary(9, 16, rng);
    Eigen::MatrixXd bm(9, 16);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 16; ++j) bm(i, j) = b(i, j);
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(bm * bm.transpose())
                           .eigenvalues()
                           .maxCoeff();
    const double est = squared_spectral_norm(b);
    CHECK(est <= top * (1.0 + 1e-12));
    CHECK(est >= top * 0.99);
  }
}

TEST_CASE("solve_bpdn_cd closed forms") {
  std::mt19937_64 rng(3);
  SUBCASE("scalar lasso") {
    Dictionary b(1, 1);
    b(0, 0) = 1.0;
    for (double y0 : {-3.0, -0.2, 0.0, 0.4, 2.5}) {
      for (double lambda : {0.0, 0.3, 1.0}) {
        const SolveResult r = solve_bpdn_cd(Vector{y0}, b, lambda);
        CHECK(r.converged);
        CHECK(r.code[0] == doctest::Approx(soft_threshold(y0, lambda)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("orthonormal dictionary") {
    for (int trial = 0; trial < 10; ++trial) {
      const Dictionary b = orthonormal(6, rng);
      const Vector y = gaussian_vector(6, rng);
      Vector corr(6);
      b.correlate(y, corr);
      const SolveResult r = solve_bpdn_cd(y, b, 0.4);
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(std::abs(r.code[j] - soft_threshold(corr[j], 0.4)) <= 1e-10);
      }
    }
  }
  SUBCASE("lambda = 0 recovers least squares for full column rank") {
    for (int trial = 0; trial < 10; ++trial) {
      const Dictionary b = random_dictionary(10, 4, rng);
      const Vector y = gaussian_vector(10, rng);
      Eigen::MatrixXd bm(10, 4);
      for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 4; ++j) bm(i, j) = b(i, j);
      const Eigen::VectorXd ls = (bm.transpose() * bm)
                                     .ldlt()
                                     .solve(bm.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), 10));
      SolveOptions opts;
      opts.max_iter = 20000;
      const SolveResult r = solve_bpdn_cd(y, b, 0.0, opts);
      for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(r.code[j] - ls(static_cast<Eigen::Index>(j))) <= 1e-8);
    }
  }
}

TEST_CASE("solve_bpdn_cd errors and determinism") {
  std::mt19937_64 rng(4);
  Dictionary b = random_dictionary(4, 6, rng);
  const Vector y = gaussian_vector(4, rng);
  CHECK(solve_bpdn_cd(y, b, 0.2).code == solve_bpdn_cd(y, b, 0.2).code);
  CHECK_THROWS_AS(solve_bpdn_cd(Vector{1.0}, b, 0.2), ShapeError);
  SolveOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(solve_bpdn_cd(y, b, 0.2, bad), PreconditionError);
  b(0, 0) *= 1.1;
  CHECK_THROWS_AS(solve_bpdn_cd(y, b, 0.2), PreconditionError);
}

TEST_CASE("solve_bpdn_cd satisfies KKT and stops on max_iter with the best iterate") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Dictionary b = random_dictionary(8, 16, rng);
    const Vector y = gaussian_vector(8, rng);
    const double lambda = 0.05 + 0.02 * trial;
    const SolveResult r = solve_bpdn_cd(y, b, lambda);
    CHECK(r.converged);
    Vector resid(8), corr(16);
    b.reconstruct(r.code, resid);
    for (std::size_t i = 0; i < 8; ++i) resid[i] = y[i] - resid[i];
    b.correlate(resid, corr);
    for (std::size_t j = 0; j < 16; ++j) {
      if (r.code[j] == 0.0) {
        CHECK(std::abs(corr[j]) <= lambda + 1e-6);
      } else {
        CHECK(std::abs(corr[j] - lambda * (r.code[j] > 0 ? 1.0 : -1.0)) <= 1e-6);
      }
    }
  }
  const Dictionary b = random_dictionary(8, 16, rng);
  const Vector y = gaussian_vector(8, rng);
  SolveOptions one;
  one.max_iter = 1;
  const SolveResult r = solve_bpdn_cd(y, b, 0.01, one);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.final_loss <= bpdn_loss(y, Vector(16, 0.0), b, 0.01));
}

TEST_CASE("solve_oracle") {
  std::mt19937_64 rng(6);
  SUBCASE("scalar closed form") {
    Dictionary b(1, 1);
    b(0, 0) = 1.0;
    for (double y0 : {-2.0, -0.1, 0.7, 3.0}) {
      const Vector z = solve_oracle(Vector{y0}, b, BpdnObjective{0.5});
      CHECK(std::abs(z[0] - soft_threshold(y0, 0.5)) <= 1e-10);
    }
  }
  SUBCASE("lambda above the KKT threshold yields the zero code") {
    for (int trial = 0; trial < 10; ++trial) {
      const Dictionary b = random_dictionary(5, 7, rng);
      const Vector y = gaussian_vector(5, rng);
      Vector corr(7);
      b.correlate(y, corr);
      double top = 0.0;
      for (double c : corr) top = std::max(top, std::abs(c));
      for (double v : solve_oracle(y, b, BpdnObjective{top * 1.001})) CHECK(v == 0.0);
      bool any = false;
      for (double v : solve_oracle(y, b, BpdnObjective{top * 0.9})) any = any || v != 0.0;
      CHECK(any);
    }
  }
  SUBCASE("size bound") {
    const Dictionary b = random_dictionary(4, 13, rng);
    CHECK_THROWS_AS(solve_oracle(gaussian_vector(4, rng), b, BpdnObjective{0.1}), SizeError);
  }
  SUBCASE("agrees with coordinate descent on 200 random instances") {
    for (int trial = 0; trial < 200; ++trial) {
      const Dictionary b = random_dictionary(6, 8, rng);
      const Vector y = gaussian_vector(6, rng);
      const double lambda = trial % 2 == 0 ? 0.1 : 0.5;
      const Vector oracle = solve_oracle(y, b, BpdnObjective{lambda});
      const SolveResult cd = solve_bpdn_cd(y, b, lambda);
      CAPTURE(trial);
      CHECK(max_abs_diff(oracle, cd.code) <= 1e-6);
    }
  }
}

TEST_CASE("infer_optimal") {
  std::mt19937_64 rng(7);
  SUBCASE("starts at the prediction and matches the compound oracle") {
    for (int trial = 0; trial < 100; ++trial) {
      const Dictionary b = random_dictionary(6, 8, rng);
      const Predictor p = random_predictor(6, 8, rng);
      const Vector y = gaussian_vector(6, rng);
      const Hyperparams h = hyper(trial % 2 == 0 ? 0.1 : 0.5, 1.0);
      std::vector<double> trace;
      const SolveResult r = infer_optimal(y, b, p, h, {}, &trace);
      CHECK(r.converged);
      CHECK(trace.front() == compound_loss(y, infer_approx(y, p), b, p, h));
      const Vector oracle = solve_oracle(y, b, CompoundObjective{p, h});
      CAPTURE(trial);
      CHECK(max_abs_diff(oracle, r.code) <= 1e-6);
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
  }
  SUBCASE("alpha = 0 solves bpdn with half the penalty") {
    for (int trial = 0; trial < 20; ++trial) {
      const Dictionary b = random_dictionary(8, 5, rng);
      const Predictor p = random_predictor(8, 5, rng);
      const Vector y = gaussian_vector(8, rng);
      const Hyperparams h = hyper(0.6, 0.0);
      SolveOptions opts;
      opts.max_iter = 50000;
      const SolveResult r = infer_optimal(y, b, p, h, opts);
      CHECK(max_abs_diff(r.code, solve_oracle(y, b, CompoundObjective{p, h})) <= 1e-6);
      CHECK(max_abs_diff(r.code, solve_oracle(y, b, BpdnObjective{0.3})) <= 1e-6);
    }
  }
  SUBCASE("separate mode ignores alpha and the predictor's pull") {
    const Dictionary b = random_dictionary(8, 5, rng);
    const Vector y = gaussian_vector(8, rng);
    SolveOptions opts;
    opts.max_iter = 50000;
    const SolveResult a = infer_optimal(y, b, random_predictor(8, 5, rng), hyper(0.6, 1.0, TrainingMode::Separate), opts);
    const SolveResult c = infer_optimal(y, b, random_predictor(8, 5, rng), hyper(0.6, 1.0, TrainingMode::Separate), opts);
    CHECK(max_abs_diff(a.code, c.code) <= 1e-6);
  }
  SUBCASE("a predictor that is already optimal converges immediately") {
    const Dictionary b = random_dictionary(5, 8, rng);
    Predictor p(5, 8);
    Vector z(8);
    for (std::size_t k = 0; k < 8; ++k) {
      p.bias[k] = 0.2 * static_cast<double>(k) - 0.7;
      z[k] = std::tanh(p.bias[k]);
    }
    Vector y(5);
    b.reconstruct(z, y);
    const SolveResult r = infer_optimal(y, b, p, hyper(0.0, 1.0));
    CHECK(r.iterations <= 1);
    CHECK(r.final_loss <= 1e-20);
  }
  SUBCASE("autoencoder mode returns the prediction") {
    const Dictionary b = random_dictionary(5, 8, rng);
    const Predictor p = random_predictor(5, 8, rng);
    const Vector y = gaussian_vector(5, rng);
    const SolveResult r = infer_optimal(y, b, p, hyper(0.3, 1.0, TrainingMode::Autoencoder));
    CHECK(r.iterations == 0);
    CHECK(r.code == infer_approx(y, p));
  }
  SUBCASE("backtracking reaches the same minimizer monotonically") {
    for (int trial = 0; trial < 20; ++trial) {
      const Dictionary b = random_dictionary(6, 8, rng);
      const Predictor p = random_predictor(6, 8, rng);
      const Vector y = gaussian_vector(6, rng);
      const Hyperparams h = hyper(0.3, 1.0);
      SolveOptions opts;
      opts.step_rule = StepRule::Backtracking;
      std::vector<double> trace;
      const SolveResult r = infer_optimal(y, b, p, h, opts, &trace);
      CHECK(max_abs_diff(r.code, solve_oracle(y, b, CompoundObjective{p, h})) <= 1e-6);
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("infer_approx") {
  std::mt19937_64 rng(8);
  const Predictor p = random_predictor(9, 12, rng);
  const Vector y = gaussian_vector(9, rng);
  CHECK(infer_approx(y, p) == predictor_forward(y, p));
  for (double v : infer_approx(y, Predictor(9, 12))) CHECK(v == 0.0);
}
