#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "psd/error.hpp"
#include "psd/solvers.hpp"

namespace psd {
namespace {

// Stationarity of  c |y - Bz|^2 + alpha |z - t|^2 + lambda |z|_1  on a fixed
// support S with signs s:
//   H_SS z_S = q_S - lambda s,   H = 2c B^T B + 2 alpha I,   q = 2c B^T y + 2 alpha t
struct Quadratic {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double lambda = 0.0;
};

struct Candidate {
  double objective = std::numeric_limits<double>::infinity();
  int support = 0;
  std::vector<int> signs;  // -1, 0, +1 per coordinate
  Vector code;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.objective < b.objective - 1e-12) return true;
  if (a.objective > b.objective + 1e-12) return false;
  if (a.support != b.support) return a.support < b.support;
  return std::lexicographical_compare(a.signs.begin(), a.signs.end(), b.signs.begin(),
                                      b.signs.end());
}

}  // namespace

Vector solve_oracle(std::span<const double> y, const Dictionary& b,
                    const OracleObjective& objective) {
  const std::size_t n = b.signal_size();
  const std::size_t m = b.code_size();
  if (m > kOracleMaxCodeSize) {
    throw SizeError("solve_oracle enumerates 3^m patterns; m = " + std::to_string(m) +
                    " exceeds the bound of " + std::to_string(kOracleMaxCodeSize));
  }
  if (y.size() != n) throw ShapeError("solve_oracle: signal length does not match dictionary");

  double scale = 0.5;  // 1/2 on the reconstruction term for BPDN
  double alpha = 0.0;
  double lambda = 0.0;
  Vector target(m, 0.0);
  if (const auto* bp = std::get_if<BpdnObjective>(&objective)) {
    lambda = bp->lambda;
  } else {
    const auto& cp = std::get<CompoundObjective>(objective);
    check_model_shapes(b, cp.predictor);
    scale = 1.0;
    alpha = inference_alpha(cp.hyper);
    lambda = cp.hyper.lambda;
    target = predictor_forward(y, cp.predictor);
  }
  if (!(lambda >= 0.0)) throw PreconditionError("solve_oracle: lambda must be >= 0");

  Eigen::MatrixXd basis(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) basis(i, j) = b(i, j);
  const Eigen::Map<const Eigen::VectorXd> signal(y.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> pred(target.data(), static_cast<Eigen::Index>(m));

  Quadratic q;
  q.hessian = 2.0 * scale * basis.transpose() * basis +
              2.0 * alpha * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                                      static_cast<Eigen::Index>(m));
  q.linear = 2.0 * scale * basis.transpose() * signal + 2.0 * alpha * pred;
  q.lambda = lambda;

  auto evaluate = [&](const Vector& z) {
    if (std::holds_alternative<BpdnObjective>(objective)) return bpdn_loss(y, z, b, lambda);
    return compound_loss_with_prediction(y, z, b, target, lambda, alpha);
  };
  const double kkt_slack = 1e-9 * (1.0 + lambda);

  Candidate best;
  const std::size_t patterns = std::size_t{1} << m;
  std::vector<Eigen::Index> idx;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    idx.clear();
    for (std::size_t j = 0; j < m; ++j)
      if (mask & (std::size_t{1} << j)) idx.push_back(static_cast<Eigen::Index>(j));
    const auto s = static_cast<Eigen::Index>(idx.size());

    Eigen::MatrixXd h_ss(s, s);
    Eigen::VectorXd q_s(s);
    for (Eigen::Index a = 0; a < s; ++a) {
      q_s(a) = q.linear(idx[a]);
      for (Eigen::Index c = 0; c < s; ++c) h_ss(a, c) = q.hessian(idx[a], idx[c]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu;
    if (s > 0) {
      lu.compute(h_ss);
      if (!lu.isInvertible()) continue;
    }

    const std::size_t sign_patterns = std::size_t{1} << idx.size();
    for (std::size_t sp = 0; sp < sign_patterns; ++sp) {
      Eigen::VectorXd sgn(s);
      for (Eigen::Index a = 0; a < s; ++a) sgn(a) = (sp >> a) & 1U ? 1.0 : -1.0;
      Eigen::VectorXd z_s = s > 0 ? Eigen::VectorXd(lu.solve(q_s - q.lambda * sgn))
                                  : Eigen::VectorXd(0);

      bool consistent = true;
      for (Eigen::Index a = 0; a < s && consistent; ++a) consistent = z_s(a) * sgn(a) > 0.0;
      if (!consistent) continue;

      Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
      for (Eigen::Index a = 0; a < s; ++a) z(idx[a]) = z_s(a);
      const Eigen::VectorXd grad = q.hessian * z - q.linear;
      bool optimal = true;
      for (std::size_t j = 0; j < m && optimal; ++j) {
        if (z(static_cast<Eigen::Index>(j)) == 0.0) {
          optimal = std::abs(grad(static_cast<Eigen::Index>(j))) <= q.lambda + kkt_slack;
        }
      }
      if (!optimal) continue;

      Candidate cand;
      cand.code.assign(z.data(), z.data() + m);
      cand.objective = evaluate(cand.code);
      cand.support = static_cast<int>(s);
      cand.signs.assign(m, 0);
      for (Eigen::Index a = 0; a < s; ++a) cand.signs[idx[a]] = sgn(a) > 0 ? 1 : -1;
      if (better(cand, best)) best = std::move(cand);
    }
  }
  if (best.code.empty()) {
    // Only reachable when every pattern was singular; the zero code is the
    // fallback so callers always get a vector of the right length.
    best.code.assign(m, 0.0);
  }
  return best.code;
}

}  // namespace psd
