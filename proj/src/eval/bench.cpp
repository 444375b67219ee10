#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "psd/error.hpp"
#include "psd/eval.hpp"

namespace psd {
namespace {

void summarize(TimingStats& s) {
  std::vector<double> sorted = s.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (double v : sorted) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(n));
}

bool finite_codes(const std::vector<Vector>& codes) {
  for (const auto& c : codes)
    if (!all_finite(c)) return false;
  return true;
}

}  // namespace

TimingStats measure(std::string name, const std::function<void()>& pass,
                    std::size_t repetitions) {
  if (repetitions == 0) throw PreconditionError("measure needs at least one repetition");
  using Clock = std::chrono::steady_clock;
  pass();  // warm-up
  TimingStats stats;
  stats.name = std::move(name);
  stats.seconds.reserve(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = Clock::now();
    pass();
    const std::chrono::duration<double> elapsed = Clock::now() - start;
    // Clock granularity can report zero for trivial passes.
    stats.seconds.push_back(std::max(elapsed.count(), 1e-9));
  }
  summarize(stats);
  return stats;
}

double speedup(const TimingStats& slow, const TimingStats& fast) { return slow.median / fast.median; }

const TimingStats& BenchReport::find(std::string_view name) const {
  for (const auto& a : algorithms)
    if (a.name == name) return a;
  throw InputError("bench report has no algorithm '" + std::string(name) + "'");
}

BenchReport bench_inference(std::span<const Vector> patches, const Model& model,
                            const Hyperparams& h, const SolveOptions& opts,
                            std::size_t repetitions, bool include_optimal) {
  if (repetitions < 3) throw PreconditionError("bench_inference needs at least 3 repetitions");
  if (patches.empty()) throw InputError("bench_inference needs a non-empty batch");
  const Dictionary& b = model.dictionary;
  const Predictor& p = model.predictor;
  check_model_shapes(b, p);

  BenchReport report;
  report.batch_size = patches.size();
  report.code_size = b.code_size();
  report.signal_size = b.signal_size();

  std::vector<Vector> out(patches.size());
  report.algorithms.push_back(measure("approx", [&] {
    for (std::size_t i = 0; i < patches.size(); ++i) out[i] = infer_approx(patches[i], p);
  }, repetitions));
  report.outputs_finite = finite_codes(out);

  report.algorithms.push_back(measure("exact_cd", [&] {
    for (std::size_t i = 0; i < patches.size(); ++i) {
      out[i] = solve_bpdn_cd(patches[i], b, h.lambda, opts).code;
    }
  }, repetitions));
  report.outputs_finite = report.outputs_finite && finite_codes(out);
  report.speedup = speedup(report.algorithms[1], report.algorithms[0]);

  if (include_optimal) {
    const double norm_sq = squared_spectral_norm(b);
    report.algorithms.push_back(measure("optimal", [&] {
      for (std::size_t i = 0; i < patches.size(); ++i) {
        out[i] = infer_optimal(patches[i], b, p, h, opts, norm_sq).code;
      }
    }, repetitions));
    report.outputs_finite = report.outputs_finite && finite_codes(out);
    report.optimal_speedup = speedup(report.algorithms[2], report.algorithms[0]);
  }
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::ostringstream os;
  os.precision(17);
  std::size_t reps = 0;
  for (const auto& a : report.algorithms) reps = std::max(reps, a.seconds.size());
  os << "algorithm,batch,n,m,median_s,mean_s,std_s,speedup_vs_approx";
  for (std::size_t r = 0; r < reps; ++r) os << ",rep_" << r;
  os << '\n';
  const TimingStats& approx = report.find("approx");
  for (const auto& a : report.algorithms) {
    os << a.name << ',' << report.batch_size << ',' << report.signal_size << ','
       << report.code_size << ',' << a.median << ',' << a.mean << ',' << a.stddev << ','
       << speedup(a, approx);
    for (double s : a.seconds) os << ',' << s;
    os << '\n';
  }
  return os.str();
}

}  // namespace psd
