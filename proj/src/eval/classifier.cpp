#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "psd/error.hpp"
#include "psd/eval.hpp"
#include "psd/kernels.hpp"

namespace psd {

Vector LinearClassifier::scores(std::span<const double> x) const {
  Vector s(classes());
  weights_.multiply(x, s);
  for (std::size_t c = 0; c < s.size(); ++c) s[c] += bias_[c];
  return s;
}

std::size_t LinearClassifier::predict(std::span<const double> x) const {
  const Vector s = scores(x);
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

LinearClassifier train_linear_classifier(std::span<const Vector> features,
                                         std::span<const std::size_t> labels, double l2_weight,
                                         std::size_t epochs, std::uint64_t seed) {
  if (features.size() != labels.size()) {
    throw InputError("classifier got " + std::to_string(features.size()) + " feature vectors and " +
                     std::to_string(labels.size()) + " labels");
  }
  if (features.empty()) throw InputError("classifier training set is empty");
  if (!(l2_weight >= 0.0)) throw PreconditionError("l2_weight must be >= 0");
  if (epochs < 1) throw PreconditionError("classifier epochs must be >= 1");
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw InputError("feature vectors have unequal lengths");
  }
  std::vector<std::size_t> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw InputError("classifier needs at least two classes");
  const std::size_t classes = distinct.back() + 1;

  Matrix weights(classes, dim);
  Vector bias(classes, 0.0);

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  const double base_rate = 0.5;
  Vector scores(classes), prob(classes);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double rate_epoch = base_rate / (1.0 + static_cast<double>(epoch));
    for (std::size_t idx : order) {
      const auto& x = features[idx];
      // Step normalized by |x|^2 keeps large-magnitude features stable.
      const double rate = rate_epoch / std::max(1.0, kernels::sum_squares(x));
      weights.multiply(x, scores);
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) {
        scores[c] += bias[c];
        top = std::max(top, scores[c]);
      }
      double z = 0.0;
      for (std::size_t c = 0; c < classes; ++c) z += prob[c] = std::exp(scores[c] - top);
      // Gradient step on cross-entropy, then the L2 term as an exact
      // proximal shrink so large penalties cannot overshoot.
      const double shrink = 1.0 / (1.0 + rate * l2_weight);
      for (std::size_t c = 0; c < classes; ++c) {
        const double err = prob[c] / z - (c == labels[idx] ? 1.0 : 0.0);
        auto row = weights.row(c);
        kernels::axpy(-rate * err, x, row);
        for (double& w : row) w *= shrink;
        bias[c] -= rate * err;
      }
    }
  }
  return LinearClassifier(std::move(weights), std::move(bias), l2_weight);
}

double accuracy(const LinearClassifier& clf, std::span<const Vector> features,
                std::span<const std::size_t> labels) {
  if (features.size() != labels.size() || features.empty()) {
    throw InputError("accuracy needs equal, non-empty feature and label sets");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) hits += clf.predict(features[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

}  // namespace psd
