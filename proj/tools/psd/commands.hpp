#pragma once

// One options struct and one function per subcommand. Functions throw
// psd::Error (exit 1) or NumericalFailure (exit 2).

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace psd::cli {

using Path = std::filesystem::path;

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PatchesArgs {
  Path config;
  std::vector<Path> images;
  Path out;
  bool raw = false;
};

struct TrainArgs {
  Path config;
  std::optional<Path> patches;
  std::vector<Path> images;
  Path out;
  std::optional<Path> log;  // defaults to train_log.csv next to `out`
  std::size_t log_every = 100;
};

struct EncodeArgs {
  Path model;
  Path patches;
  std::string method = "approx";
  std::optional<Path> config;
  Path out;
};

struct SnrArgs {
  Path reference;
  Path approx;
  Path out;
};

struct SparsityArgs {
  Path codes;
  std::optional<double> threshold;
  std::optional<double> target_zero_fraction;
  Path out;
};

struct StabilityArgs {
  std::vector<Path> frames;  // code tensors, or one directory of them
  std::optional<double> threshold;
  std::optional<double> target_zero_fraction;
  bool exact = false;
  bool shuffle = false;
  std::optional<Path> config;  // seed for --shuffle
  Path out;
};

struct BenchArgs {
  Path config;
  Path model;
  Path patches;
  std::size_t reps = 5;
  bool include_optimal = false;
  Path out;
};

struct FeaturesArgs {
  Path model;
  std::vector<Path> images;
  std::string method = "approx";
  std::optional<Path> config;
  std::size_t pool = 30;
  std::size_t long_side = 151;
  std::size_t pad_to = 143;
  Path out;
  std::optional<Path> labels;
  std::optional<Path> report;
  double l2 = 1e-4;
  std::size_t classifier_epochs = 50;
  double train_fraction = 0.5;
};

struct PreprocessArgs {
  Path in;
  Path out;
  std::size_t long_side = 151;
  std::size_t pad_to = 143;
  std::size_t window = 9;
  double sigma = 1.591;
};

void cmd_patches(const PatchesArgs& a, std::ostream& out);
void cmd_train(const TrainArgs& a, std::ostream& out);
void cmd_encode(const EncodeArgs& a, std::ostream& out);
void cmd_eval_snr(const SnrArgs& a, std::ostream& out);
void cmd_eval_sparsity(const SparsityArgs& a, std::ostream& out);
void cmd_eval_stability(const StabilityArgs& a, std::ostream& out);
void cmd_eval_bench(const BenchArgs& a, std::ostream& out);
void cmd_eval_features(const FeaturesArgs& a, std::ostream& out);
void cmd_preprocess(const PreprocessArgs& a, std::ostream& out);

}  // namespace psd::cli
