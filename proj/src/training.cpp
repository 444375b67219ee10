#include "psd/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "psd/error.hpp"
#include "psd/kernels.hpp"

namespace psd {
namespace {

// A zero step size stays zero: that is how a frozen model is expressed.
double decayed(double eta, const TrainConfig& cfg) {
  if (eta == 0.0) return 0.0;
  return std::max(cfg.eta_floor, eta * (1.0 - cfg.eta_decay));
}

bool gradients_finite(const ModelGradients& g) {
  return all_finite(g.d_basis.data()) && all_finite(g.d_gain) && all_finite(g.d_filters.data()) &&
         all_finite(g.d_bias);
}

void apply(std::span<double> param, std::span<const double> grad, double eta) {
  kernels::axpy(-eta, grad, param);
}

std::vector<std::size_t> shuffled_order(std::size_t count, std::uint64_t seed,
                                        std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void check_patches(std::span<const Vector> patches) {
  if (patches.empty()) throw InputError("training set is empty");
  const std::size_t n = patches.front().size();
  for (const auto& p : patches) {
    if (p.size() != n) throw InputError("training patches have unequal lengths");
  }
}

}  // namespace

void TrainConfig::validate() const {
  hyper.validate();
  infer_opts.validate();
  if (epochs < 1) throw PreconditionError("epochs must be >= 1");
  if (!(eta_decay >= 0.0) || eta_decay >= 1.0) {
    throw PreconditionError("eta_decay must be in [0, 1)");
  }
  if (!(eta_floor > 0.0)) throw PreconditionError("eta_floor must be > 0");
  if (eta_floor > hyper.eta) throw PreconditionError("eta_floor must not exceed eta");
}

TrainState initial_state(std::size_t signal_size, std::size_t code_size, const TrainConfig& cfg) {
  Model model = init_model(signal_size, code_size, cfg.seed);
  return TrainState{std::move(model.dictionary), std::move(model.predictor), 0, cfg.hyper.eta};
}

TrainState train_step(std::span<const double> y, TrainState state, const TrainConfig& cfg,
                      StepInfo* info) {
  const Hyperparams& h = cfg.hyper;
  check_model_shapes(state.dictionary, state.predictor);

  // Step 1: code inference with the parameters frozen.
  Vector z = h.mode == TrainingMode::Autoencoder
                 ? infer_approx(y, state.predictor)
                 : infer_optimal(y, state.dictionary, state.predictor, h, cfg.infer_opts).code;

  // Step 2: one gradient step on {B, G, W, D} with the code frozen.
  ModelGradients g = grad_params(y, z, state.dictionary, state.predictor, h);
  StepInfo local;
  StepInfo& out = info != nullptr ? *info : local;
  out = StepInfo{};
  out.loss = compound_loss(y, z, state.dictionary, state.predictor, h);
  out.l1 = kernels::abs_sum(z);

  const std::size_t step_index = state.samples_seen;
  if (!gradients_finite(g) || !std::isfinite(out.loss)) {
    out.rejected = true;
    out.diagnostic = "non-finite gradient at sample " + std::to_string(step_index) +
                     "; state left unchanged";
    out.code = std::move(z);
    return state;
  }

  ++state.samples_seen;
  const double eta = state.current_eta;
  state.current_eta = decayed(state.current_eta, cfg);

  if (eta == 0.0) {
    out.code = std::move(z);
    return state;
  }

  apply(state.dictionary.atoms().data(), g.d_basis.data(), eta);
  apply(state.predictor.gain, g.d_gain, eta);
  apply(state.predictor.filters.data(), g.d_filters.data(), eta);
  apply(state.predictor.bias, g.d_bias, eta);

  // A column driven exactly to zero has no direction to rescale; draw a new one.
  for (std::size_t j = 0; j < state.dictionary.code_size(); ++j) {
    const double norm_sq = kernels::sum_squares(state.dictionary.column(j));
    if (!(norm_sq > 0.0)) {
      std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (step_index + 1)) ^ j);
      reinitialize_column(state.dictionary, j, rng);
      ++out.reinitialized_columns;
    }
  }
  state.dictionary = normalize_columns(std::move(state.dictionary));
  out.code = std::move(z);
  return state;
}

TrainState train(std::span<const Vector> patches, std::size_t code_size, const TrainConfig& cfg,
                 const ProgressSink& progress) {
  check_patches(patches);
  return train_from(patches, initial_state(patches.front().size(), code_size, cfg), cfg,
                    progress);
}

TrainState train_from(std::span<const Vector> patches, TrainState state, const TrainConfig& cfg,
                      const ProgressSink& progress) {
  cfg.validate();
  check_patches(patches);
  if (patches.front().size() != state.dictionary.signal_size()) {
    throw ShapeError("patch length " + std::to_string(patches.front().size()) +
                     " does not match model input size " +
                     std::to_string(state.dictionary.signal_size()));
  }

  double loss_acc = 0.0, l1_acc = 0.0;
  std::size_t window = 0;
  StepInfo info;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t idx : shuffled_order(patches.size(), cfg.seed, epoch)) {
      state = train_step(patches[idx], std::move(state), cfg, &info);
      if (cfg.log_every == 0 || !progress) continue;
      loss_acc += info.loss;
      l1_acc += info.l1;
      if (++window == cfg.log_every) {
        const auto w = static_cast<double>(window);
        progress({state.samples_seen, loss_acc / w, l1_acc / w, state.current_eta});
        loss_acc = l1_acc = 0.0;
        window = 0;
      }
    }
  }
  return state;
}

Predictor train_regressor_posthoc(std::span<const std::pair<Vector, Vector>> pairs,
                                  Predictor pred, const TrainConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw InputError("posthoc regressor training needs at least one pair");
  const std::size_t n = pred.signal_size();
  const std::size_t m = pred.code_size();
  for (const auto& [y, z] : pairs) {
    if (y.size() != n || z.size() != m) {
      throw ShapeError("posthoc pair shapes do not match the predictor");
    }
  }

  const auto& k = kernels::active();
  double eta = cfg.hyper.eta;
  Vector act(m), d_pre(m), d_gain(m);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t idx : shuffled_order(pairs.size(), cfg.seed, epoch)) {
      const auto& [y, z] = pairs[idx];
      pred.filters.multiply(y, act);
      bool finite = true;
      // d/dF |z - F|^2 = -2 (z - F)
      for (std::size_t j = 0; j < m; ++j) {
        const double t = std::tanh(act[j] + pred.bias[j]);
        const double d_out = -2.0 * (z[j] - pred.gain[j] * t);
        d_gain[j] = d_out * t;
        d_pre[j] = d_out * pred.gain[j] * (1.0 - t * t);
        finite = finite && std::isfinite(d_gain[j]) && std::isfinite(d_pre[j]);
      }
      if (finite) {
        k.axpy(-eta, d_gain.data(), pred.gain.data(), m);
        k.axpy(-eta, d_pre.data(), pred.bias.data(), m);
        k.rank1_update(-eta, d_pre.data(), y.data(), pred.filters.data().data(), m, n);
      }
      eta = decayed(eta, cfg);
    }
  }
  return pred;
}

std::string progress_csv_header() { return "samples,avg_loss,avg_l1,eta"; }

std::string progress_csv_row(const ProgressRecord& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.samples << ',' << r.avg_loss << ',' << r.avg_l1 << ',' << r.eta;
  return os.str();
}

}  // namespace psd
