#pragma once

// Online block-coordinate learning of the dictionary and the regressor.
// Each sample: (1) infer the code with parameters frozen, (2) take one SGD
// step on all parameters with the code frozen, then rescale B's columns.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psd/model.hpp"
#include "psd/solvers.hpp"

namespace psd {

struct TrainConfig {
  Hyperparams hyper;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  SolveOptions infer_opts;
  /// Per-sample multiplicative decay: eta <- max(eta_floor, eta * (1 - eta_decay)).
  double eta_decay = 1e-4;
  double eta_floor = 1e-4;
  /// Emit a progress record every this many samples (0 disables).
  std::size_t log_every = 0;

  void validate() const;
};

struct TrainState {
  Dictionary dictionary;
  Predictor predictor;
  std::size_t samples_seen = 0;
  double current_eta = 0.0;

  bool operator==(const TrainState&) const = default;
};

/// Fresh state from init_model(n, m, cfg.seed) with current_eta = cfg.hyper.eta.
TrainState initial_state(std::size_t signal_size, std::size_t code_size, const TrainConfig& cfg);

/// Per-step diagnostics.
struct StepInfo {
  Vector code;           // code used for the parameter update
  double loss = 0.0;     // compound loss at that code, before the update
  double l1 = 0.0;       // |code|_1
  bool rejected = false; // non-finite gradient: parameters left untouched
  std::size_t reinitialized_columns = 0;
  std::string diagnostic;
};

TrainState train_step(std::span<const double> y, TrainState state, const TrainConfig& cfg,
                      StepInfo* info = nullptr);

struct ProgressRecord {
  std::size_t samples = 0;
  double avg_loss = 0.0;  // over the samples since the previous record
  double avg_l1 = 0.0;
  double eta = 0.0;
};

using ProgressSink = std::function<void(const ProgressRecord&)>;

/// Runs cfg.epochs passes over a seeded per-epoch shuffle of `patches`,
/// starting from initial_state(). Throws InputError on an empty set or
/// ragged patch lengths.
TrainState train(std::span<const Vector> patches, std::size_t code_size, const TrainConfig& cfg,
                 const ProgressSink& progress = {});

/// Same loop from an explicit starting state.
TrainState train_from(std::span<const Vector> patches, TrainState state, const TrainConfig& cfg,
                      const ProgressSink& progress = {});

/// Fits the regressor alone to fixed (signal, code) pairs by SGD on
/// |z - F(y)|^2 with the schedule and shuffling of `cfg`.
Predictor train_regressor_posthoc(std::span<const std::pair<Vector, Vector>> pairs,
                                  Predictor pred_init, const TrainConfig& cfg);

/// CSV header and row for progress records: samples,avg_loss,avg_l1,eta
std::string progress_csv_header();
std::string progress_csv_row(const ProgressRecord& record);

}  // namespace psd
