#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include "psd/error.hpp"
#include "psd/eval.hpp"

namespace psd {

int sign_state(double z, double threshold) {
  if (std::abs(z) <= threshold) return 1;
  return z < 0.0 ? 0 : 2;
}

std::uint64_t TransitionStats::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

double TransitionStats::change_probability() const {
  const std::uint64_t all = total();
  if (all == 0) return 0.0;
  std::uint64_t stay = 0;
  for (int s = 0; s < 3; ++s) stay += counts[s][s];
  return static_cast<double>(all - stay) / static_cast<double>(all);
}

std::array<double, 3> TransitionStats::next_state_marginal() const {
  std::array<double, 3> m{};
  const std::uint64_t all = total();
  if (all == 0) return m;
  for (const auto& row : counts)
    for (int s = 0; s < 3; ++s) m[s] += static_cast<double>(row[s]);
  for (double& v : m) v /= static_cast<double>(all);
  return m;
}

double TransitionStats::max_row_distance_from_marginal() const {
  const auto marginal = next_state_marginal();
  double worst = 0.0;
  for (int prev = 0; prev < 3; ++prev) {
    const auto& row = counts[prev];
    if (row[0] + row[1] + row[2] == 0) continue;
    double tv = 0.0;
    for (int s = 0; s < 3; ++s) tv += std::abs(probs[prev][s] - marginal[s]);
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

TransitionStats sign_transition_matrix(std::span<const CodeSet> frames, double threshold) {
  if (frames.size() < 2) throw InputError("stability needs at least two frames");
  if (!(threshold >= 0.0)) throw PreconditionError("threshold must be >= 0");
  const std::size_t patches = frames.front().codes.size();
  for (const auto& f : frames) {
    if (f.codes.size() != patches) throw InputError("frames hold different numbers of codes");
  }

  TransitionStats stats;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const auto& prev = frames[t - 1].codes;
    const auto& next = frames[t].codes;
    for (std::size_t p = 0; p < patches; ++p) {
      if (prev[p].size() != next[p].size()) {
        throw InputError("code length changes between frames at patch " + std::to_string(p));
      }
      for (std::size_t k = 0; k < prev[p].size(); ++k) {
        ++stats.counts[sign_state(prev[p][k], threshold)][sign_state(next[p][k], threshold)];
      }
    }
  }
  for (int a = 0; a < 3; ++a) {
    const double row = static_cast<double>(stats.counts[a][0] + stats.counts[a][1] +
                                           stats.counts[a][2]);
    for (int b = 0; b < 3; ++b) {
      stats.probs[a][b] = row > 0.0 ? static_cast<double>(stats.counts[a][b]) / row : 0.0;
    }
  }
  return stats;
}

std::string transition_table(const TransitionStats& stats) {
  static constexpr const char* kLabels[3] = {"-", "0", "+"};
  std::ostringstream os;
  os << "prev\\next,-,0,+\n" << std::setprecision(6) << std::fixed;
  for (int a = 0; a < 3; ++a) {
    os << kLabels[a];
    for (int b = 0; b < 3; ++b) os << ',' << stats.probs[a][b];
    os << '\n';
  }
  return os.str();
}

}  // namespace psd
