#include "cli.hpp"

#include <functional>

#include "CLI11.hpp"
#include "commands.hpp"
#include "psd/error.hpp"

namespace psd::cli {
namespace {

const std::vector<std::string> kEncodeMethods{"approx", "optimal", "exact-cd"};
const std::vector<std::string> kFeatureMethods{"approx", "exact-cd"};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predictive sparse decomposition: training, inference and evaluation", "psd"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::function<void()> action;

  PatchesArgs patches;
  auto* cmd = app.add_subcommand("patches", "Extract patches from PGM images into a TNSR tensor");
  cmd->add_option("--config", patches.config, "Config file (patch_side, patch_count, seed)")->required();
  cmd->add_option("--images", patches.images, "Input PGM images")->required();
  cmd->add_option("--out", patches.out, "Output patch tensor")->required();
  cmd->add_flag("--raw", patches.raw, "Skip per-patch zero-mean, unit-variance normalization");
  cmd->callback([&] { action = [&] { cmd_patches(patches, out); }; });

  TrainArgs train;
  cmd = app.add_subcommand("train", "Train a PSD model");
  cmd->add_option("--config", train.config, "Config file")->required();
  auto* p_opt = cmd->add_option("--patches", train.patches, "Training patch tensor");
  cmd->add_option("--images", train.images, "PGM images to draw normalized patches from")
      ->excludes(p_opt);
  cmd->add_option("--out", train.out, "Output PSD1 model")->required();
  cmd->add_option("--log", train.log, "Progress CSV (default: train_log.csv next to --out)");
  cmd->add_option("--log-every", train.log_every, "Samples per progress row")->check(CLI::PositiveNumber);
  cmd->callback([&] { action = [&] { cmd_train(train, out); }; });

  EncodeArgs encode;
  cmd = app.add_subcommand("encode", "Infer codes for a patch tensor");
  cmd->add_option("--model", encode.model, "PSD1 model")->required();
  cmd->add_option("--patches", encode.patches, "Patch tensor")->required();
  cmd->add_option("--method", encode.method, "Inference method")->check(CLI::IsMember(kEncodeMethods));
  cmd->add_option("--config", encode.config, "Config file (lambda, alpha, mode, tol, max_iter)");
  cmd->add_option("--out", encode.out, "Output code tensor")->required();
  cmd->callback([&] { action = [&] { cmd_encode(encode, out); }; });

  auto* eval = app.add_subcommand("eval", "Evaluation reports (.json output path for JSON, else CSV)");
  eval->require_subcommand(1);

  SnrArgs snr;
  cmd = eval->add_subcommand("snr", "Code-to-code signal-to-noise ratio");
  cmd->add_option("--reference", snr.reference, "Reference code tensor")->required();
  cmd->add_option("--approx", snr.approx, "Approximating code tensor")->required();
  cmd->add_option("--out", snr.out, "Report path")->required();
  cmd->callback([&] { action = [&] { cmd_eval_snr(snr, out); }; });

  SparsityArgs sparsity;
  cmd = eval->add_subcommand("sparsity", "Average l1 norm and zero fraction");
  cmd->add_option("--codes", sparsity.codes, "Code tensor")->required();
  auto* th = cmd->add_option("--threshold", sparsity.threshold, "Zero threshold on |z|");
  cmd->add_option("--target-zero-fraction", sparsity.target_zero_fraction,
                  "Calibrate the threshold to this zero fraction")
      ->excludes(th);
  cmd->add_option("--out", sparsity.out, "Report path")->required();
  cmd->callback([&] { action = [&] { cmd_eval_sparsity(sparsity, out); }; });

  StabilityArgs stability;
  cmd = eval->add_subcommand("stability", "Sign-transition statistics across consecutive frames");
  cmd->add_option("--frames", stability.frames, "Code tensors in frame order, or one directory")
      ->required();
  cmd->add_option("--threshold", stability.threshold, "Zero threshold on |z|");
  cmd->add_option("--target-zero-fraction", stability.target_zero_fraction,
                  "Calibrate the threshold on the pooled codes");
  cmd->add_flag("--exact", stability.exact, "Exact-solver codes: zero means |z| <= 1e-12");
  cmd->add_flag("--shuffle", stability.shuffle, "Random frame pairs (seeded by --config)");
  cmd->add_option("--config", stability.config, "Config file providing seed");
  cmd->add_option("--out", stability.out, "Report path")->required();
  cmd->callback([&] { action = [&] { cmd_eval_stability(stability, out); }; });

  BenchArgs bench;
  cmd = eval->add_subcommand("bench", "Single-threaded inference timing");
  cmd->add_option("--config", bench.config, "Config file (lambda, tol, max_iter)")->required();
  cmd->add_option("--model", bench.model, "PSD1 model")->required();
  cmd->add_option("--patches", bench.patches, "Patch tensor")->required();
  cmd->add_option("--reps", bench.reps, "Timed repetitions")->check(CLI::Range(3, 1000000));
  cmd->add_flag("--include-optimal", bench.include_optimal, "Also time optimal inference");
  cmd->add_option("--out", bench.out, "Report path")->required();
  cmd->callback([&] { action = [&] { cmd_eval_bench(bench, out); }; });

  FeaturesArgs features;
  cmd = eval->add_subcommand("features", "Convolutional features, optional linear classifier");
  cmd->add_option("--model", features.model, "PSD1 model with a square input window")->required();
  cmd->add_option("--images", features.images, "Input PGM images")->required();
  cmd->add_option("--method", features.method, "Encoder")->check(CLI::IsMember(kFeatureMethods));
  cmd->add_option("--config", features.config, "Config file (lambda for exact-cd, seed for the split)");
  cmd->add_option("--pool", features.pool, "Output grid side after average pooling")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--long-side", features.long_side, "Resize target for the longer side")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--pad-to", features.pad_to, "Square canvas side")->check(CLI::PositiveNumber);
  cmd->add_option("--out", features.out, "Feature tensor (images x maps x pool x pool)")->required();
  cmd->add_option("--labels", features.labels, "Class id per image; enables the classifier");
  cmd->add_option("--report", features.report, "Classifier report (default: <out>.classifier.csv)");
  cmd->add_option("--l2", features.l2, "Classifier L2 weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--classifier-epochs", features.classifier_epochs, "Classifier SGD epochs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--train-fraction", features.train_fraction, "Share of images used for training");
  cmd->callback([&] { action = [&] { cmd_eval_features(features, out); }; });

  PreprocessArgs prep;
  cmd = app.add_subcommand("preprocess", "Recognition preprocessing of one PGM image into a tensor");
  cmd->add_option("--in", prep.in, "Input PGM")->required();
  cmd->add_option("--out", prep.out, "Output tensor (height x width)")->required();
  cmd->add_option("--long-side", prep.long_side, "Resize target for the longer side")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--pad-to", prep.pad_to, "Square canvas side")->check(CLI::PositiveNumber);
  cmd->add_option("--window", prep.window, "Gaussian window side (odd)")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", prep.sigma, "Gaussian window sigma")->check(CLI::PositiveNumber);
  cmd->callback([&] { action = [&] { cmd_preprocess(prep, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    action();
    return kExitOk;
  } catch (const NumericalFailure& e) {
    err << "psd: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "psd: error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace psd::cli
