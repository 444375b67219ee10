#include "config.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "psd/error.hpp"
#include "psd/file_io.hpp"

namespace psd::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::size_t line, std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw InputError("config line " + std::to_string(line) + ": " + std::string(key) + " = '" +
                   std::string(value) + "' is not " + std::string(expected));
}

template <typename T>
T parse_integer(std::size_t line, std::string_view key, std::string_view value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) {
    bad_value(line, key, value, "a non-negative integer");
  }
  return out;
}

double parse_real(std::size_t line, std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(line, key, value, "a finite real number");
  }
  return out;
}

TrainingMode parse_mode(std::size_t line, std::string_view value) {
  if (value == "joint") return TrainingMode::Joint;
  if (value == "separate") return TrainingMode::Separate;
  if (value == "autoencoder") return TrainingMode::Autoencoder;
  bad_value(line, "mode", value, "one of joint, separate, autoencoder");
}

template <typename T, typename Parse>
void assign(std::optional<T>& slot, std::size_t line, std::string_view key, Parse parse) {
  if (slot.has_value()) {
    throw InputError("config line " + std::to_string(line) + ": duplicate key '" +
                     std::string(key) + "'");
  }
  slot = parse();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::size_t ln = line_no;
    auto count = [&] { return parse_integer<std::size_t>(ln, key, value); };
    auto real = [&] { return parse_real(ln, key, value); };

    if (key == "n") assign(cfg.n, ln, key, count);
    else if (key == "m") assign(cfg.m, ln, key, count);
    else if (key == "lambda") assign(cfg.lambda, ln, key, real);
    else if (key == "alpha") assign(cfg.alpha, ln, key, real);
    else if (key == "eta") assign(cfg.eta, ln, key, real);
    else if (key == "eta_decay") assign(cfg.eta_decay, ln, key, real);
    else if (key == "eta_floor") assign(cfg.eta_floor, ln, key, real);
    else if (key == "epochs") assign(cfg.epochs, ln, key, count);
    else if (key == "seed") assign(cfg.seed, ln, key, [&] { return parse_integer<std::uint64_t>(ln, key, value); });
    else if (key == "mode") assign(cfg.mode, ln, key, [&] { return parse_mode(ln, value); });
    else if (key == "patch_side") assign(cfg.patch_side, ln, key, count);
    else if (key == "patch_count") assign(cfg.patch_count, ln, key, count);
    else if (key == "tol") assign(cfg.tol, ln, key, real);
    else if (key == "max_iter") assign(cfg.max_iter, ln, key, count);
    else {
      throw InputError("config line " + std::to_string(ln) + ": unknown key '" + std::string(key) +
                       "'");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

template <typename T>
T require(const std::optional<T>& value, std::string_view name) {
  if (!value) throw InputError("missing config key '" + std::string(name) + "'");
  return *value;
}

template double require(const std::optional<double>&, std::string_view);
template std::size_t require(const std::optional<std::size_t>&, std::string_view);

SolveOptions solve_options(const ExperimentConfig& cfg) {
  SolveOptions opts;
  if (cfg.tol) opts.tol = *cfg.tol;
  if (cfg.max_iter) opts.max_iter = *cfg.max_iter;
  opts.validate();
  return opts;
}

Hyperparams hyperparams(const ExperimentConfig& cfg) {
  Hyperparams h;
  h.lambda = require(cfg.lambda, "lambda");
  if (cfg.alpha) h.alpha = *cfg.alpha;
  if (cfg.eta) h.eta = *cfg.eta;
  if (cfg.mode) h.mode = *cfg.mode;
  h.validate();
  return h;
}

TrainConfig train_config(const ExperimentConfig& cfg) {
  require(cfg.m, "m");
  TrainConfig tc;
  tc.hyper = hyperparams(cfg);
  tc.epochs = require(cfg.epochs, "epochs");
  if (!cfg.seed) throw InputError("missing config key 'seed'");
  tc.seed = *cfg.seed;
  tc.infer_opts = solve_options(cfg);
  if (cfg.eta_decay) tc.eta_decay = *cfg.eta_decay;
  if (cfg.eta_floor) tc.eta_floor = *cfg.eta_floor;
  tc.validate();
  return tc;
}

std::string_view mode_name(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::Joint: return "joint";
    case TrainingMode::Separate: return "separate";
    case TrainingMode::Autoencoder: return "autoencoder";
  }
  return "joint";
}

}  // namespace psd::cli
