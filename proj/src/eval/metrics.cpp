#include <algorithm>
#include <cmath>
#include <string>

#include "psd/error.hpp"
#include "psd/eval.hpp"
#include "psd/kernels.hpp"

namespace psd {
namespace {

double population_variance(std::span<const double> v) {
  const double count = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= count;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return var / count;
}

void check_aligned(const CodeSet& a, const CodeSet& b) {
  if (a.codes.size() != b.codes.size()) {
    throw InputError("code sets have " + std::to_string(a.codes.size()) + " and " +
                     std::to_string(b.codes.size()) + " entries");
  }
  if (!a.ids.empty() && !b.ids.empty() && a.ids != b.ids) {
    throw InputError("code sets are keyed by different patch ids");
  }
  for (std::size_t i = 0; i < a.codes.size(); ++i) {
    if (a.codes[i].size() != b.codes[i].size() || a.codes[i].empty()) {
      throw InputError("code " + std::to_string(i) + " has mismatched or empty length");
    }
  }
}

}  // namespace

SnrReport snr_report(const CodeSet& reference, const CodeSet& approximation) {
  check_aligned(reference, approximation);
  SnrReport report;
  double sum_db = 0.0, signal_total = 0.0, noise_total = 0.0;
  Vector noise;
  for (std::size_t i = 0; i < reference.codes.size(); ++i) {
    const Vector& ref = reference.codes[i];
    const Vector& approx = approximation.codes[i];
    noise.resize(ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) noise[k] = ref[k] - approx[k];
    const double var_signal = population_variance(ref);
    const double var_noise = population_variance(noise);
    signal_total += var_signal;
    noise_total += var_noise;
    if (var_noise == 0.0) {
      ++report.zero_noise_pairs;
      continue;
    }
    if (var_signal == 0.0) {
      ++report.zero_signal_pairs;
      continue;
    }
    sum_db += 10.0 * std::log10(var_signal / var_noise);
    ++report.pairs_used;
  }
  if (report.pairs_used > 0) report.mean_db = sum_db / static_cast<double>(report.pairs_used);
  if (noise_total > 0.0) {
    report.pooled_db = signal_total > 0.0 ? 10.0 * std::log10(signal_total / noise_total)
                                          : -kInfiniteSnr;
  }
  return report;
}

double snr(const CodeSet& reference, const CodeSet& approximation) {
  return snr_report(reference, approximation).mean_db;
}

double avg_l1(const CodeSet& codes) {
  if (codes.codes.empty()) throw InputError("avg_l1 of an empty code set");
  double total = 0.0;
  for (const auto& z : codes.codes) total += kernels::abs_sum(z);
  return total / static_cast<double>(codes.codes.size());
}

double zero_fraction(const CodeSet& codes, double threshold) {
  std::size_t zeros = 0, total = 0;
  for (const auto& z : codes.codes) {
    for (double v : z) zeros += std::abs(v) <= threshold ? 1 : 0;
    total += z.size();
  }
  if (total == 0) throw InputError("zero_fraction of an empty code set");
  return static_cast<double>(zeros) / static_cast<double>(total);
}

double calibrate_threshold(const CodeSet& codes, double target) {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw PreconditionError("target zero fraction must lie in [0, 1]");
  }
  std::vector<double> mags;
  for (const auto& z : codes.codes)
    for (double v : z) mags.push_back(std::abs(v));
  if (mags.empty()) throw InputError("calibrate_threshold needs at least one code entry");
  std::sort(mags.begin(), mags.end());
  const auto total = static_cast<double>(mags.size());

  // theta = 0 zeroes only exact zeros.
  auto first_positive = std::upper_bound(mags.begin(), mags.end(), 0.0);
  double best_theta = 0.0;
  double best_gap = std::abs(static_cast<double>(first_positive - mags.begin()) / total - target);
  for (auto it = first_positive; it != mags.end();) {
    auto last = std::upper_bound(it, mags.end(), *it);
    const double fraction = static_cast<double>(last - mags.begin()) / total;
    const double gap = std::abs(fraction - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_theta = *it;
    }
    it = last;
  }
  return best_theta;
}

}  // namespace psd
