#include "specaug/experiment.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "specaug/augment.hpp"
#include "specaug/fcls.hpp"
#include "specaug/io.hpp"
#include "specaug/metrics.hpp"
#include "specaug/parallel.hpp"
#include "specaug/random.hpp"

namespace specaug {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* why) {
  throw Error(ErrorCode::InvalidConfig,
              "bad value '" + std::string(value) + "' for '" + std::string(key) + "': " + why);
}

double to_real(std::string_view key, std::string_view value) {
  if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
  try {
    return io::parse_double(value);
  } catch (const Error&) {
    bad_value(key, value, "expected a number");
  }
}

std::uint64_t to_count(std::string_view key, std::string_view value) {
  const double v = to_real(key, value);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) bad_value(key, value, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

std::vector<double> to_list(std::string_view key, std::string_view value) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(to_real(key, value.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

MethodScore score(const RowMatrix& abundances, const RowMatrix& reconstruction,
                  const SynthDataset& ds) {
  return {rmse(abundances, ds.true_abundances.values), rmse(reconstruction, ds.image.pixels())};
}

RunRecord run_once(const ExperimentConfig& cfg, std::size_t run,
                   std::span<const std::size_t> ns_values, const DatasetCallback& on_dataset) {
  RunRecord rec;
  rec.run = run;
  rec.seed = derive_seed(cfg.seed, run);

  SynthConfig synth = cfg.synth;
  synth.seed = rec.seed;
  const SynthDataset ds = synthesize_image(synth);
  if (on_dataset) on_dataset(run, ds);

  const EndmemberMatrix means = class_mean_endmembers(ds.library);
  const AbundanceMap fcls = fcls_unmix(ds.image, means);
  const RowMatrix fcls_recon = fcls.values * means.columns.transpose();
  rec.fcls = score(fcls.values, fcls_recon, ds);

  const MesmaOptions options{cfg.combination_cap, 1};
  const MesmaResult plain = mesma_unmix(ds.image, ds.library, options);
  rec.mesma = score(plain.abundances.values, mesma_reconstruct(plain, ds.library), ds);

  TrainConfig train = cfg.train;
  train.seed = derive_seed(rec.seed, kTrainStream);
  const auto models = train_class_models(ds.library, train);
  const std::uint64_t augment_seed = derive_seed(rec.seed, kAugmentStream);
  for (std::size_t ns : ns_values) {
    const auto aug = run_augmented_mesma(ds.image, ds.library, models, ns, augment_seed, options);
    rec.augmented.push_back(
        score(aug.result.abundances.values, mesma_reconstruct(aug.result, aug.library), ds));
    for (Eigen::Index n = 0; n < plain.residuals.size(); ++n) {
      if (aug.result.residuals(n) > plain.residuals(n)) rec.residuals_monotone = false;
    }
  }
  return rec;
}

void write_summary_row(std::ostream& out, std::span<const double> a, std::span<const double> y,
                       double scale) {
  const Summary sa = a.size() >= 2 ? monte_carlo_summary(a) : Summary{a.empty() ? 0.0 : a[0], 0.0};
  const Summary sy = y.size() >= 2 ? monte_carlo_summary(y) : Summary{y.empty() ? 0.0 : y[0], 0.0};
  out << ',' << io::format_double(scale * sa.mean) << ',' << io::format_double(scale * sa.stddev)
      << ',' << io::format_double(scale * sy.mean) << ',' << io::format_double(scale * sy.stddev)
      << '\n';
}

std::vector<double> collect(const ExperimentResult& r, auto&& pick) {
  std::vector<double> out;
  out.reserve(r.runs.size());
  for (const auto& run : r.runs) out.push_back(pick(run));
  return out;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  auto& s = cfg.synth;
  auto& t = cfg.train;
  if (key == "runs" || key == "R") cfg.runs = to_count(key, value);
  else if (key == "ns") cfg.ns = to_count(key, value);
  else if (key == "seed") cfg.seed = to_count(key, value);
  else if (key == "threads") cfg.threads = to_count(key, value);
  else if (key == "combination_cap") cfg.combination_cap = to_count(key, value);
  else if (key == "endmembers" || key == "P") s.endmembers = to_count(key, value);
  else if (key == "bands" || key == "L") s.bands = to_count(key, value);
  else if (key == "pixels" || key == "N") s.pixels = to_count(key, value);
  else if (key == "pool1_size") s.pool1_size = to_count(key, value);
  else if (key == "pool2_size") s.pool2_size = to_count(key, value);
  else if (key == "library_subset_size") s.library_subset_size = to_count(key, value);
  else if (key == "gain_min") s.gain_min = to_real(key, value);
  else if (key == "gain_max") s.gain_max = to_real(key, value);
  else if (key == "offset_min") s.offset_min = to_real(key, value);
  else if (key == "offset_max") s.offset_max = to_real(key, value);
  else if (key == "dirichlet") s.dirichlet = to_list(key, value);
  else if (key == "snr_db") s.snr_db = to_real(key, value);
  else if (key == "epochs") {
    const auto e = to_count(key, value);
    if (e < 1 || e > 100'000'000) bad_value(key, value, "expected at least one epoch");
    t.epochs = static_cast<int>(e);
  } else if (key == "learning_rate") t.learning_rate = to_real(key, value);
  else if (key == "beta1") t.beta1 = to_real(key, value);
  else if (key == "beta2") t.beta2 = to_real(key, value);
  else if (key == "adam_epsilon") t.epsilon = to_real(key, value);
  else if (key == "kl_weight") t.kl_weight = to_real(key, value);
  else if (key == "latent_dim" || key == "K") t.latent_dim = to_count(key, value);
  else throw Error(ErrorCode::InvalidConfig, "unknown key '" + std::string(key) + "'");
}

void finalize_config(ExperimentConfig& cfg) {
  if (cfg.synth.dirichlet.size() == 1 && cfg.synth.endmembers > 1) {
    cfg.synth.dirichlet.assign(cfg.synth.endmembers, cfg.synth.dirichlet.front());
  }
  validate_config(cfg.synth);
  if (cfg.runs < 1) throw Error(ErrorCode::InvalidConfig, "runs must be at least 1");
  if (cfg.threads < 1) throw Error(ErrorCode::InvalidConfig, "threads must be at least 1");
  if (!(cfg.train.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
  }
  if (cfg.train.latent_dim < 1 || cfg.train.latent_dim >= cfg.synth.bands) {
    throw Error(ErrorCode::InvalidConfig, "latent_dim must satisfy 1 <= K < L");
  }
}

ExperimentConfig load_experiment_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  for (const auto& kv : io::parse_key_values(in, source)) {
    try {
      set_config_value(cfg, kv.key, kv.value);
    } catch (const Error& e) {
      throw Error(e.code(), source + ":" + std::to_string(kv.line) + ": " + e.what());
    }
  }
  return cfg;
}

std::vector<double> ExperimentResult::rmse_a_fcls() const {
  return collect(*this, [](const RunRecord& r) { return r.fcls.rmse_a; });
}

std::vector<double> ExperimentResult::rmse_a_mesma() const {
  return collect(*this, [](const RunRecord& r) { return r.mesma.rmse_a; });
}

std::vector<double> ExperimentResult::rmse_a_augmented(std::size_t ns_index) const {
  return collect(*this, [&](const RunRecord& r) { return r.augmented.at(ns_index).rmse_a; });
}

ExperimentResult run_synthetic_experiment(const ExperimentConfig& cfg,
                                          std::span<const std::size_t> ns_values,
                                          const DatasetCallback& on_dataset) {
  ExperimentConfig checked = cfg;
  finalize_config(checked);
  ExperimentResult result;
  result.ns_values.assign(ns_values.begin(), ns_values.end());
  result.runs.resize(checked.runs);
  parallel_for(checked.runs, checked.threads, [&](std::size_t r) {
    result.runs[r] = run_once(checked, r, ns_values, on_dataset);
  });
  return result;
}

void write_results_table(std::ostream& out, const ExperimentResult& result,
                         std::size_t proposed_index, bool scale_1e3) {
  const double scale = scale_1e3 ? 1e3 : 1.0;
  out << "method,rmse_a_mean,rmse_a_sd,rmse_y_mean,rmse_y_sd\n";
  out << "FCLS";
  write_summary_row(out, result.rmse_a_fcls(),
                    collect(result, [](const RunRecord& r) { return r.fcls.rmse_y; }), scale);
  out << "MESMA";
  write_summary_row(out, result.rmse_a_mesma(),
                    collect(result, [](const RunRecord& r) { return r.mesma.rmse_y; }), scale);
  out << "Proposed";
  write_summary_row(
      out, result.rmse_a_augmented(proposed_index),
      collect(result, [&](const RunRecord& r) { return r.augmented.at(proposed_index).rmse_y; }),
      scale);
}

void write_ns_sweep_table(std::ostream& out, const ExperimentResult& result, bool scale_1e3) {
  const double scale = scale_1e3 ? 1e3 : 1.0;
  out << "ns,rmse_a_mean,rmse_a_sd,rmse_y_mean,rmse_y_sd\n";
  for (std::size_t i = 0; i < result.ns_values.size(); ++i) {
    out << result.ns_values[i];
    write_summary_row(out, result.rmse_a_augmented(i),
                      collect(result, [&](const RunRecord& r) { return r.augmented.at(i).rmse_y; }),
                      scale);
  }
}

void write_run_log(std::ostream& out, const ExperimentResult& result) {
  out << "run,seed,method,ns,rmse_a,rmse_y\n";
  auto row = [&](const RunRecord& r, const char* method, const std::string& ns, const MethodScore& s) {
    out << r.run << ',' << r.seed << ',' << method << ',' << ns << ',' << io::format_double(s.rmse_a)
        << ',' << io::format_double(s.rmse_y) << '\n';
  };
  for (const auto& r : result.runs) {
    row(r, "FCLS", "", r.fcls);
    row(r, "MESMA", "", r.mesma);
    for (std::size_t i = 0; i < r.augmented.size(); ++i) {
      row(r, "Proposed", std::to_string(result.ns_values[i]), r.augmented[i]);
    }
  }
}

}  // namespace specaug
