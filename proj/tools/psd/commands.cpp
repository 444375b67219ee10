#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "config.hpp"
#include "json.hpp"
#include "psd/data.hpp"
#include "psd/error.hpp"
#include "psd/eval.hpp"
#include "psd/file_io.hpp"
#include "psd/model_io.hpp"
#include "psd/tensor.hpp"
#include "psd/training.hpp"

namespace psd::cli {
namespace {

using nlohmann::json;

// JSON has no infinities; spell them out so the marker survives.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool wants_json(const Path& p) { return p.extension() == ".json"; }

void write_report(const Path& path, const std::string& csv, const json& doc) {
  write_file_atomic(path, wants_json(path) ? doc.dump(2) + "\n" : csv);
}

std::vector<Vector> load_rows(const Path& path, const char* what) {
  const Tensor t = load_tensor(path);
  if (t.dims.size() != 2) {
    throw InputError(std::string(what) + " " + path.string() + " must be a rank-2 tensor, got rank " +
                     std::to_string(t.dims.size()));
  }
  if (t.dims[0] == 0 || t.dims[1] == 0) {
    throw InputError(std::string(what) + " " + path.string() + " is empty");
  }
  return unstack_rows(t);
}

CodeSet load_codes(const Path& path) { return CodeSet{load_rows(path, "code tensor"), {}}; }

void require_finite(std::span<const Vector> rows, const char* what) {
  for (const auto& r : rows) {
    if (!all_finite(r)) throw NumericalFailure(std::string(what) + " contain non-finite values");
  }
}

// `count` patches spread as evenly as possible over the images, each image
// drawing from its own seed.
std::vector<Vector> collect_patches(std::span<const Path> images, std::size_t side,
                                    std::size_t count, std::uint64_t seed, bool normalize) {
  if (images.empty()) throw InputError("no input images");
  std::vector<Vector> out;
  out.reserve(count);
  const std::size_t share = count / images.size();
  const std::size_t extra = count % images.size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const GrayImage img = load_pgm_file(images[i]);
    const std::size_t want = share + (i < extra ? 1 : 0);
    PatchSet ps = extract_patches(img, side, want, seed + i, i);
    for (auto& p : ps.patches) out.push_back(normalize ? normalize_patch(p) : std::move(p));
  }
  return out;
}

void check_signal_size(const ExperimentConfig& cfg, std::size_t length) {
  if (cfg.n && *cfg.n != length) {
    throw InputError("config n = " + std::to_string(*cfg.n) + " but the patches have length " +
                     std::to_string(length));
  }
  if (cfg.patch_side && *cfg.patch_side * *cfg.patch_side != length) {
    throw InputError("config patch_side = " + std::to_string(*cfg.patch_side) +
                     " but the patches have length " + std::to_string(length));
  }
}

void check_patch_length(const Model& model, std::size_t length) {
  if (length != model.dictionary.signal_size()) {
    throw InputError("patch length " + std::to_string(length) + " does not match model input size " +
                     std::to_string(model.dictionary.signal_size()));
  }
}

bool model_finite(const Model& m) {
  return all_finite(m.dictionary.atoms().data()) && all_finite(m.predictor.gain) &&
         all_finite(m.predictor.filters.data()) && all_finite(m.predictor.bias);
}

std::vector<Path> expand_frames(const std::vector<Path>& inputs) {
  if (inputs.size() == 1 && std::filesystem::is_directory(inputs.front())) {
    std::vector<Path> files;
    for (const auto& entry : std::filesystem::directory_iterator(inputs.front())) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
  }
  return inputs;
}

double pick_threshold(const CodeSet& pooled, const std::optional<double>& threshold,
                      const std::optional<double>& target, bool exact) {
  const int given = (threshold ? 1 : 0) + (target ? 1 : 0) + (exact ? 1 : 0);
  if (given > 1) {
    throw InputError("use only one of --threshold, --target-zero-fraction and --exact");
  }
  if (exact) return kExactZeroThreshold;
  if (target) {
    if (!(*target >= 0.0 && *target <= 1.0)) {
      throw InputError("--target-zero-fraction must lie in [0, 1]");
    }
    return calibrate_threshold(pooled, *target);
  }
  if (threshold) {
    if (!(*threshold >= 0.0)) throw InputError("--threshold must be >= 0");
    return *threshold;
  }
  return 0.0;
}

std::vector<std::size_t> read_labels(const Path& path, std::size_t expected) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::size_t> labels;
  std::string token;
  while (in >> token) {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size() || v < 0) {
      throw InputError("label file " + path.string() + ": '" + token + "' is not a class id");
    }
    labels.push_back(static_cast<std::size_t>(v));
  }
  if (labels.size() != expected) {
    throw InputError("label file has " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(expected) + " images");
  }
  return labels;
}

}  // namespace

void cmd_patches(const PatchesArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_config(a.config);
  const std::size_t side = cfg.patch_side.value_or(kDefaultPatchSide);
  const std::size_t count = cfg.patch_count.value_or(kDefaultPatchCount);
  if (!cfg.seed) throw InputError("missing config key 'seed'");
  if (side == 0 || count == 0) throw InputError("patch_side and patch_count must be positive");
  const std::vector<Vector> patches = collect_patches(a.images, side, count, *cfg.seed, !a.raw);
  save_tensor(a.out, stack_rows(patches));
  out << "wrote " << patches.size() << " patches of " << side << "x" << side << " to "
      << a.out.string() << "\n";
}

void cmd_train(const TrainArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_config(a.config);
  TrainConfig tc = train_config(cfg);
  tc.log_every = a.log_every;
  if (a.patches.has_value() == !a.images.empty()) {
    throw InputError("give exactly one of --patches and --images");
  }
  const std::vector<Vector> patches =
      a.patches ? load_rows(*a.patches, "patch tensor")
                : collect_patches(a.images, cfg.patch_side.value_or(kDefaultPatchSide),
                                  cfg.patch_count.value_or(kDefaultPatchCount), tc.seed, true);
  check_signal_size(cfg, patches.front().size());

  std::string log = progress_csv_header() + "\n";
  bool finite_log = true;
  const TrainState state = train(patches, *cfg.m, tc, [&](const ProgressRecord& r) {
    log += progress_csv_row(r) + "\n";
    finite_log = finite_log && std::isfinite(r.avg_loss);
  });
  const Model model{state.dictionary, state.predictor};
  const Path log_path = a.log.value_or(a.out.parent_path() / "train_log.csv");
  write_file_atomic(log_path, log);
  if (!finite_log || !model_finite(model)) {
    throw NumericalFailure("training produced a non-finite loss or parameters; model not written");
  }
  save_model(a.out, model);
  out << "trained n=" << model.dictionary.signal_size() << " m=" << model.dictionary.code_size()
      << " on " << patches.size() << " patches for " << tc.epochs << " epochs ("
      << mode_name(tc.hyper.mode) << "); model " << a.out.string() << ", log "
      << log_path.string() << "\n";
}

void cmd_encode(const EncodeArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  const std::vector<Vector> patches = load_rows(a.patches, "patch tensor");
  check_patch_length(model, patches.front().size());

  std::vector<Vector> codes;
  codes.reserve(patches.size());
  if (a.method == "approx") {
    for (const auto& y : patches) codes.push_back(infer_approx(y, model.predictor));
  } else {
    if (!a.config) throw InputError("--method " + a.method + " needs --config for lambda");
    const ExperimentConfig cfg = load_config(*a.config);
    const SolveOptions opts = solve_options(cfg);
    if (a.method == "optimal") {
      const Hyperparams h = hyperparams(cfg);
      const double sigma_sq = squared_spectral_norm(model.dictionary);
      for (const auto& y : patches) {
        codes.push_back(infer_optimal(y, model.dictionary, model.predictor, h, opts, sigma_sq).code);
      }
    } else if (a.method == "exact-cd") {
      const double lambda = require(cfg.lambda, "lambda");
      for (const auto& y : patches) codes.push_back(solve_bpdn_cd(y, model.dictionary, lambda, opts).code);
    } else {
      throw InputError("unknown method '" + a.method + "'");
    }
  }
  require_finite(codes, "codes");
  save_tensor(a.out, stack_rows(codes));
  out << "encoded " << codes.size() << " patches with " << a.method << " into " << a.out.string()
      << "\n";
}

void cmd_eval_snr(const SnrArgs& a, std::ostream& out) {
  const SnrReport r = snr_report(load_codes(a.reference), load_codes(a.approx));
  const std::string csv =
      "mean_db,pooled_db,pairs_used,zero_noise_pairs,zero_signal_pairs\n" + csv_number(r.mean_db) +
      "," + csv_number(r.pooled_db) + "," + std::to_string(r.pairs_used) + "," +
      std::to_string(r.zero_noise_pairs) + "," + std::to_string(r.zero_signal_pairs) + "\n";
  const json doc = {{"mean_db", number(r.mean_db)},
                    {"pooled_db", number(r.pooled_db)},
                    {"pairs_used", r.pairs_used},
                    {"zero_noise_pairs", r.zero_noise_pairs},
                    {"zero_signal_pairs", r.zero_signal_pairs}};
  write_report(a.out, csv, doc);
  out << "snr " << csv_number(r.mean_db) << " dB over " << r.pairs_used << " pairs\n";
}

void cmd_eval_sparsity(const SparsityArgs& a, std::ostream& out) {
  const CodeSet codes = load_codes(a.codes);
  const double theta = pick_threshold(codes, a.threshold, a.target_zero_fraction, false);
  const double l1 = avg_l1(codes);
  const double zeros = zero_fraction(codes, theta);
  const std::string csv = "count,code_size,avg_l1,threshold,zero_fraction\n" +
                          std::to_string(codes.codes.size()) + "," +
                          std::to_string(codes.codes.front().size()) + "," + csv_number(l1) + "," +
                          csv_number(theta) + "," + csv_number(zeros) + "\n";
  const json doc = {{"count", codes.codes.size()},
                    {"code_size", codes.codes.front().size()},
                    {"avg_l1", number(l1)},
                    {"threshold", number(theta)},
                    {"zero_fraction", number(zeros)}};
  write_report(a.out, csv, doc);
  out << "avg_l1 " << csv_number(l1) << ", zero fraction " << csv_number(zeros) << "\n";
}

void cmd_eval_stability(const StabilityArgs& a, std::ostream& out) {
  const std::vector<Path> files = expand_frames(a.frames);
  if (files.size() < 2) throw InputError("stability needs at least two frames");
  std::vector<CodeSet> frames;
  CodeSet pooled;
  for (const auto& f : files) {
    frames.push_back(load_codes(f));
    const auto& c = frames.back().codes;
    pooled.codes.insert(pooled.codes.end(), c.begin(), c.end());
  }
  const double theta = pick_threshold(pooled, a.threshold, a.target_zero_fraction, a.exact);
  if (a.shuffle) {
    const std::uint64_t seed = a.config ? load_config(*a.config).seed.value_or(0) : 0;
    std::mt19937_64 rng(seed);
    std::shuffle(frames.begin(), frames.end(), rng);
  }
  const TransitionStats s = sign_transition_matrix(frames, theta);

  static constexpr const char* kStates[] = {"-", "0", "+"};
  std::string csv = "prev_state,p_minus,p_zero,p_plus,n_minus,n_zero,n_plus\n";
  json rows = json::array();
  for (int i = 0; i < 3; ++i) {
    csv += kStates[i];
    for (double p : s.probs[i]) csv += "," + csv_number(p);
    for (auto c : s.counts[i]) csv += "," + std::to_string(c);
    csv += "\n";
    rows.push_back({{"prev_state", kStates[i]},
                    {"probs", {s.probs[i][0], s.probs[i][1], s.probs[i][2]}},
                    {"counts", {s.counts[i][0], s.counts[i][1], s.counts[i][2]}}});
  }
  const auto marginal = s.next_state_marginal();
  const json doc = {{"frames", frames.size()},
                    {"threshold", number(theta)},
                    {"shuffled", a.shuffle},
                    {"transitions", s.total()},
                    {"change_probability", number(s.change_probability())},
                    {"next_state_marginal", {marginal[0], marginal[1], marginal[2]}},
                    {"max_row_distance_from_marginal", number(s.max_row_distance_from_marginal())},
                    {"rows", rows}};
  write_report(a.out, csv, doc);
  out << transition_table(s) << "P(change) = " << csv_number(s.change_probability()) << "\n";
}

void cmd_eval_bench(const BenchArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_config(a.config);
  const Model model = load_model(a.model);
  const std::vector<Vector> patches = load_rows(a.patches, "patch tensor");
  check_patch_length(model, patches.front().size());
  const BenchReport r =
      bench_inference(patches, model, hyperparams(cfg), solve_options(cfg), a.reps, a.include_optimal);
  if (!r.outputs_finite) throw NumericalFailure("benchmark produced non-finite codes");

  json algos = json::array();
  for (const auto& t : r.algorithms) {
    algos.push_back({{"name", t.name},
                     {"median_s", t.median},
                     {"mean_s", t.mean},
                     {"std_s", t.stddev},
                     {"seconds", t.seconds}});
  }
  const json doc = {{"batch", r.batch_size},
                    {"n", r.signal_size},
                    {"m", r.code_size},
                    {"speedup_exact_cd_over_approx", number(r.speedup)},
                    {"speedup_optimal_over_approx", number(r.optimal_speedup)},
                    {"algorithms", algos}};
  write_report(a.out, bench_csv(r), doc);
  out << "approx vs exact-cd speedup " << csv_number(r.speedup) << "x over " << r.batch_size
      << " patches\n";
}

void cmd_eval_features(const FeaturesArgs& a, std::ostream& out) {
  if (a.images.empty()) throw InputError("no input images");
  const Model model = load_model(a.model);
  const std::size_t n = model.dictionary.signal_size();
  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  if (k * k != n) throw InputError("model input size " + std::to_string(n) + " is not a square window");

  if (a.method != "approx" && a.method != "exact-cd") {
    throw InputError("unknown method '" + a.method + "'");
  }
  if (a.method == "exact-cd" && !a.config) throw InputError("--method exact-cd needs --config for lambda");
  Encoder encoder = ApproxEncoder{model.predictor};
  std::uint64_t seed = 0;
  if (a.config) {
    const ExperimentConfig cfg = load_config(*a.config);
    seed = cfg.seed.value_or(0);
    if (a.method == "exact-cd") {
      encoder = ExactEncoder{model.dictionary, require(cfg.lambda, "lambda"), solve_options(cfg)};
    }
  }

  RecognitionPreprocessing prep;
  prep.long_side = a.long_side;
  prep.pad_to = a.pad_to;
  std::vector<Vector> rows;
  std::size_t maps = 0;
  for (const auto& path : a.images) {
    const GrayImage img = preprocess_recognition(load_pgm_file(path), prep);
    const FeatureTensor f =
        avg_downsample(abs_rectify(encode_convolutional(img, encoder, k)), a.pool, a.pool);
    maps = f.maps;
    rows.push_back(f.values);
  }
  require_finite(rows, "features");
  Tensor t = stack_rows(rows);
  t.dims = {rows.size(), maps, a.pool, a.pool};
  save_tensor(a.out, t);
  out << "wrote features " << rows.size() << "x" << maps << "x" << a.pool << "x" << a.pool << " to "
      << a.out.string() << "\n";

  if (!a.labels) return;
  if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0)) {
    throw InputError("--train-fraction must lie in (0, 1)");
  }
  const std::vector<std::size_t> labels = read_labels(*a.labels, rows.size());
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(a.train_fraction * static_cast<double>(rows.size()))), 1,
      rows.size() - 1);
  std::vector<Vector> xtr, xte;
  std::vector<std::size_t> ytr, yte;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? xtr : xte).push_back(rows[order[i]]);
    (i < n_train ? ytr : yte).push_back(labels[order[i]]);
  }
  const LinearClassifier clf = train_linear_classifier(xtr, ytr, a.l2, a.classifier_epochs, seed);
  const double train_acc = accuracy(clf, xtr, ytr);
  const double test_acc = accuracy(clf, xte, yte);
  const std::string csv = "train_count,test_count,train_accuracy,test_accuracy\n" +
                          std::to_string(xtr.size()) + "," + std::to_string(xte.size()) + "," +
                          csv_number(train_acc) + "," + csv_number(test_acc) + "\n";
  const json doc = {{"train_count", xtr.size()},
                    {"test_count", xte.size()},
                    {"train_accuracy", train_acc},
                    {"test_accuracy", test_acc},
                    {"method", a.method},
                    {"pool", a.pool}};
  const Path report = a.report.value_or(Path(a.out).replace_extension(".classifier.csv"));
  write_report(report, csv, doc);
  out << "classifier accuracy train " << csv_number(train_acc) << ", test " << csv_number(test_acc)
      << "\n";
}

void cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  RecognitionPreprocessing prep;
  prep.long_side = a.long_side;
  prep.pad_to = a.pad_to;
  prep.window_side = a.window;
  prep.sigma = a.sigma;
  const GrayImage img = preprocess_recognition(load_pgm_file(a.in), prep);
  save_tensor(a.out, Tensor{{img.height(), img.width()}, {img.pixels().begin(), img.pixels().end()}});
  out << "wrote " << img.height() << "x" << img.width() << " preprocessed image to " << a.out.string()
      << "\n";
}

}  // namespace psd::cli
