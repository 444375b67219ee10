#pragma once

// Experiment config files: one `key = value` per line, `#` starts a comment.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "psd/training.hpp"

namespace psd::cli {

struct ExperimentConfig {
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::optional<double> eta;
  std::optional<double> eta_decay;
  std::optional<double> eta_floor;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<TrainingMode> mode;
  std::optional<std::size_t> patch_side;
  std::optional<std::size_t> patch_count;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
};

/// Throws InputError naming the line for unknown or duplicate keys and for
/// values that do not parse as the key's type.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws InputError "missing config key 'name'" when `value` is empty.
template <typename T>
T require(const std::optional<T>& value, std::string_view name);

// Defaults applied when a key is absent.
inline constexpr std::size_t kDefaultPatchSide = 9;
inline constexpr std::size_t kDefaultPatchCount = 1000;

/// Training configuration; m, lambda, epochs and seed are required.
TrainConfig train_config(const ExperimentConfig& cfg);
/// Solver options from tol and max_iter.
SolveOptions solve_options(const ExperimentConfig& cfg);
/// lambda (required), alpha and mode.
Hyperparams hyperparams(const ExperimentConfig& cfg);

std::string_view mode_name(TrainingMode mode);

}  // namespace psd::cli
