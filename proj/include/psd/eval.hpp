#pragma once

// Measurements on learned representations: code-to-code SNR, measured
// sparsity, sign-transition stability, inference timing, and the
// convolutional feature pipeline with a linear classifier.

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "psd/data.hpp"
#include "psd/model.hpp"
#include "psd/solvers.hpp"

namespace psd {

/// Codes of equal length. `ids`, when non-empty in both operands of a
/// comparison, must match element for element.
struct CodeSet {
  std::vector<Vector> codes;
  std::vector<std::uint64_t> ids;
};

// ---- SNR ------------------------------------------------------------------

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

struct SnrReport {
  double mean_db = kInfiniteSnr;    // mean of per-pair SNR over the pairs used
  double pooled_db = kInfiniteSnr;  // 10 log10(sum var(signal) / sum var(noise)), all pairs
  std::size_t pairs_used = 0;
  std::size_t zero_noise_pairs = 0;   // excluded: approximation == reference
  std::size_t zero_signal_pairs = 0;  // excluded: constant reference, nonzero noise
};

/// Per pair: 10 log10(var(ref) / var(ref - approx)) with population variance
/// over the code units. Throws InputError on misaligned sets.
SnrReport snr_report(const CodeSet& reference, const CodeSet& approximation);
/// snr_report(...).mean_db; kInfiniteSnr when every pair was excluded.
double snr(const CodeSet& reference, const CodeSet& approximation);

// ---- sparsity -------------------------------------------------------------

/// Mean l1 norm of the codes.
double avg_l1(const CodeSet& codes);

/// Fraction of all code entries with |z| <= threshold.
double zero_fraction(const CodeSet& codes, double threshold);

/// Threshold theta whose zero fraction (|z| <= theta) is closest to `target`;
/// ties go to the smaller theta. Candidates are 0 and every pooled |z|.
double calibrate_threshold(const CodeSet& codes, double target_zero_fraction);

/// Exact-solver codes are counted as zero below this magnitude.
inline constexpr double kExactZeroThreshold = 1e-12;

// ---- stability ------------------------------------------------------------

/// States are ordered (-, 0, +); counts[prev][next].
struct TransitionStats {
  std::array<std::array<std::uint64_t, 3>, 3> counts{};
  std::array<std::array<double, 3>, 3> probs{};

  std::uint64_t total() const;
  /// Share of transitions whose state differs.
  double change_probability() const;
  /// Distribution of the next state pooled over all transitions.
  std::array<double, 3> next_state_marginal() const;
  /// Largest total-variation distance between a populated row and the marginal.
  double max_row_distance_from_marginal() const;
};

/// 0 if |z| <= threshold, otherwise sign(z), as an index into (-, 0, +).
int sign_state(double z, double threshold);

/// Pools (unit, patch, consecutive-frame) transitions over all frames.
/// Throws InputError for fewer than two frames or misaligned frames.
TransitionStats sign_transition_matrix(std::span<const CodeSet> frames, double threshold);

/// "-,0,+" labelled 3x3 table, rows = previous state.
std::string transition_table(const TransitionStats& stats);

// ---- timing ---------------------------------------------------------------

struct TimingStats {
  std::string name;
  std::vector<double> seconds;  // one entry per repetition
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Runs `pass` once untimed, then `repetitions` timed times.
TimingStats measure(std::string name, const std::function<void()>& pass, std::size_t repetitions);

/// median(slow) / median(fast)
double speedup(const TimingStats& slow, const TimingStats& fast);

struct BenchReport {
  std::vector<TimingStats> algorithms;  // approx, exact_cd[, optimal]
  std::size_t batch_size = 0;
  std::size_t code_size = 0;
  std::size_t signal_size = 0;
  double speedup = 0.0;  // exact_cd over approx
  double optimal_speedup = 0.0;  // optimal over approx, 0 when not timed
  bool outputs_finite = true;

  const TimingStats& find(std::string_view name) const;
};

/// Times infer_approx and solve_bpdn_cd (lambda = h.lambda), plus
/// infer_optimal when requested, over the whole batch on the calling thread.
/// Throws PreconditionError for fewer than 3 repetitions.
BenchReport bench_inference(std::span<const Vector> patches, const Model& model,
                            const Hyperparams& h, const SolveOptions& opts,
                            std::size_t repetitions, bool include_optimal = false);

/// One header row, then one row per algorithm:
/// algorithm,batch,n,m,median_s,mean_s,std_s,speedup_vs_approx,rep_0,...
std::string bench_csv(const BenchReport& report);

// ---- convolutional features -----------------------------------------------

/// maps x height x width, row-major per map.
struct FeatureTensor {
  std::size_t maps = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  FeatureTensor() = default;
  FeatureTensor(std::size_t m, std::size_t h, std::size_t w)
      : maps(m), height(h), width(w), values(m * h * w, 0.0) {}

  double& at(std::size_t k, std::size_t r, std::size_t c) {
    return values[(k * height + r) * width + c];
  }
  double at(std::size_t k, std::size_t r, std::size_t c) const {
    return values[(k * height + r) * width + c];
  }
  bool operator==(const FeatureTensor&) const = default;
};

struct ApproxEncoder {
  Predictor predictor;
};

struct ExactEncoder {
  Dictionary dictionary;
  double lambda = 0.0;
  SolveOptions opts;
};

using Encoder = std::variant<ApproxEncoder, ExactEncoder>;

/// Encodes every stride-1 k x k window (row-major, not renormalized) and
/// writes unit j of the code into map j. Throws SizeError when the window
/// does not fit and ShapeError when k*k differs from the encoder input size.
FeatureTensor encode_convolutional(const GrayImage& img, const Encoder& encoder, std::size_t k);

FeatureTensor abs_rectify(FeatureTensor t);

/// Mean over an out_h x out_w grid of cells with boundaries at
/// round(i * H / out_h) (and likewise for columns).
FeatureTensor avg_downsample(const FeatureTensor& t, std::size_t out_h, std::size_t out_w);

// ---- linear classifier ----------------------------------------------------

class LinearClassifier {
 public:
  LinearClassifier() = default;
  LinearClassifier(Matrix weights, Vector bias, double l2_weight)
      : weights_(std::move(weights)), bias_(std::move(bias)), l2_weight_(l2_weight) {}

  std::size_t classes() const noexcept { return weights_.rows(); }
  std::size_t features() const noexcept { return weights_.cols(); }
  const Matrix& weights() const noexcept { return weights_; }
  const Vector& bias() const noexcept { return bias_; }
  double l2_weight() const noexcept { return l2_weight_; }

  Vector scores(std::span<const double> x) const;
  /// argmax of the affine scores (lowest index on ties).
  std::size_t predict(std::span<const double> x) const;

 private:
  Matrix weights_;
  Vector bias_;
  double l2_weight_ = 0.0;
};

/// Multinomial logistic regression with an L2 penalty on the weights,
/// trained by seeded SGD. Classes are 0..max(label). Throws InputError when
/// fewer than two classes are present or dimensions disagree.
LinearClassifier train_linear_classifier(std::span<const Vector> features,
                                         std::span<const std::size_t> labels, double l2_weight,
                                         std::size_t epochs, std::uint64_t seed);

double accuracy(const LinearClassifier& clf, std::span<const Vector> features,
                std::span<const std::size_t> labels);

}  // namespace psd
