// specaug: MESMA unmixing with VAE-based spectral library augmentation.
//
// Subcommands: synth-experiment, ns-sweep, unmix, train-vae, augment-lib.
// Exit codes: 0 success, 64 usage or config error, 65 invalid data,
// 66 missing or unreadable input, 70 numerical failure, 1 anything else.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "specaug/augment.hpp"
#include "specaug/experiment.hpp"
#include "specaug/fcls.hpp"
#include "specaug/io.hpp"
#include "specaug/mesma.hpp"
#include "specaug/random.hpp"
#include "specaug/vae.hpp"

namespace fs = std::filesystem;
using namespace specaug;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitNumeric = 70;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return kExitNoInput;
    case ErrorCode::InvalidConfig: return kExitUsage;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::DegenerateColumns: return kExitNumeric;
    default: return kExitData;
  }
}

struct ExperimentFlags {
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> ns;
  std::optional<int> epochs;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> combination_cap;
  std::string out_dir = ".";
  bool scale_1e3 = false;
  bool export_datasets = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config_path, "key=value configuration file");
  cmd->add_option("--set", f.settings, "override one configuration key (key=value)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--threads", f.threads, "worker count")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", f.epochs, "generator training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--runs", f.runs, "Monte Carlo realizations")->check(CLI::PositiveNumber);
  cmd->add_option("--combination-cap", f.combination_cap, "maximum MESMA models per library");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_flag("--scale-1e3", f.scale_1e3, "report table values multiplied by 1000");
  cmd->add_flag("--export-datasets", f.export_datasets,
                "write every generated dataset under <out-dir>/datasets/");
}

ExperimentConfig resolve_config(const ExperimentFlags& f) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + f.config_path + "'");
    cfg = load_experiment_config(in, f.config_path);
  }
  for (const auto& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + s + "'");
    }
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (f.ns) cfg.ns = *f.ns;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.runs) cfg.runs = *f.runs;
  if (f.combination_cap) cfg.combination_cap = *f.combination_cap;
  finalize_config(cfg);
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

DatasetCallback dataset_exporter(const ExperimentFlags& f, const ExperimentConfig& cfg) {
  if (!f.export_datasets) return {};
  return [dir = fs::path(f.out_dir) / "datasets", cfg](std::size_t run, const SynthDataset& ds) {
    SynthConfig synth = cfg.synth;
    synth.seed = derive_seed(cfg.seed, run);
    io::write_dataset(dir / ("run_" + std::to_string(run)), ds, synth);
  };
}

int run_synth_experiment(const ExperimentFlags& f) {
  const auto cfg = resolve_config(f);
  fs::create_directories(f.out_dir);
  const std::vector<std::size_t> ns{cfg.ns};
  const auto result = run_synthetic_experiment(cfg, ns, dataset_exporter(f, cfg));
  {
    auto out = open_out(fs::path(f.out_dir) / "results.csv");
    write_results_table(out, result, 0, f.scale_1e3);
  }
  {
    auto out = open_out(fs::path(f.out_dir) / "runs.csv");
    write_run_log(out, result);
  }
  write_results_table(std::cout, result, 0, f.scale_1e3);
  return 0;
}

int run_ns_sweep(const ExperimentFlags& f, const std::vector<std::size_t>& ns_list) {
  const auto cfg = resolve_config(f);
  fs::create_directories(f.out_dir);
  const auto result = run_synthetic_experiment(cfg, ns_list, dataset_exporter(f, cfg));
  {
    auto out = open_out(fs::path(f.out_dir) / "ns_sweep.csv");
    write_ns_sweep_table(out, result, f.scale_1e3);
  }
  {
    auto out = open_out(fs::path(f.out_dir) / "runs.csv");
    write_run_log(out, result);
  }
  write_ns_sweep_table(std::cout, result, f.scale_1e3);
  return 0;
}

struct TrainFlags {
  int epochs = TrainConfig{}.epochs;
  double learning_rate = TrainConfig{}.learning_rate;
  double kl_weight = TrainConfig{}.kl_weight;
  std::size_t latent_dim = TrainConfig{}.latent_dim;
};

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--epochs", t.epochs, "generator training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--learning-rate", t.learning_rate, "Adam step size")->check(CLI::PositiveNumber);
  cmd->add_option("--kl-weight", t.kl_weight, "weight of the KL term");
  cmd->add_option("--latent-dim", t.latent_dim, "latent dimension K")->check(CLI::PositiveNumber);
}

TrainConfig make_train_config(const TrainFlags& t, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = t.epochs;
  cfg.learning_rate = t.learning_rate;
  cfg.kl_weight = t.kl_weight;
  cfg.latent_dim = t.latent_dim;
  cfg.seed = derive_seed(seed, kTrainStream);
  return cfg;
}

fs::path model_path(const fs::path& dir, std::size_t k, const std::string& material) {
  return dir / ("model_" + std::to_string(k) + "_" + material + ".vae");
}

void save_models(const fs::path& dir, const SpectralLibrary& lib, const std::vector<VaeModel>& models) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < models.size(); ++k) {
    auto out = open_out(model_path(dir, k, lib[k].material));
    save_model(models[k], out);
  }
}

std::vector<VaeModel> load_models(const fs::path& dir, const SpectralLibrary& lib) {
  std::vector<VaeModel> models;
  for (std::size_t k = 0; k < lib.num_classes(); ++k) {
    const auto path = model_path(dir, k, lib[k].material);
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    models.push_back(load_model(in));
  }
  return models;
}

struct UnmixFlags {
  std::string image;
  std::string library;
  std::string mode = "mesma";
  std::string models_dir;
  std::size_t ns = 3;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::uint64_t combination_cap = kDefaultCombinationCap;
  std::string out_dir = ".";
  TrainFlags train;
};

int run_unmix(const UnmixFlags& f) {
  const auto start = std::chrono::steady_clock::now();
  const HyperImage img = io::read_image_csv(f.image);
  const SpectralLibrary lib = io::read_library_csv(f.library);
  validate_library(lib);
  validate_image(img, lib.bands());
  fs::create_directories(f.out_dir);
  const fs::path out(f.out_dir);
  const MesmaOptions options{f.combination_cap, f.threads};

  std::uint64_t models_evaluated = 1;
  if (f.mode == "fcls") {
    const auto em = class_mean_endmembers(lib);
    const auto abundances = fcls_unmix(img, em, f.threads);
    const RowMatrix recon = abundances.values * em.columns.transpose();
    const Eigen::VectorXd residuals = (img.pixels() - recon).rowwise().squaredNorm();
    io::write_abundances_csv(out / "abundances.csv", abundances, lib);
    io::write_residuals_csv(out / "residuals.csv", residuals);
  } else if (f.mode == "mesma" || f.mode == "augmented") {
    SpectralLibrary used = lib;
    MesmaResult result;
    if (f.mode == "mesma") {
      result = mesma_unmix(img, lib, options);
    } else {
      std::vector<VaeModel> models;
      if (f.models_dir.empty()) {
        models = train_class_models(lib, make_train_config(f.train, f.seed), f.threads);
        save_models(out / "models", lib, models);
      } else {
        models = load_models(f.models_dir, lib);
      }
      auto aug = run_augmented_mesma(img, lib, models, f.ns, derive_seed(f.seed, kAugmentStream),
                                     options);
      result = std::move(aug.result);
      used = std::move(aug.library);
      io::write_library_csv(out / "augmented_library.csv", used, true);
    }
    models_evaluated = result.models_evaluated;
    io::write_abundances_csv(out / "abundances.csv", result.abundances, used);
    io::write_selections_csv(out / "selections.csv", result, used);
    io::write_residuals_csv(out / "residuals.csv", result.residuals);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + f.mode + "'");
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::cout << "models_evaluated=" << models_evaluated << " wall_time_s=" << elapsed.count() << '\n';
  return 0;
}

struct LibraryFlags {
  std::string library;
  std::string models_dir;
  std::string out;
  std::string out_dir = ".";
  std::size_t ns = 3;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  TrainFlags train;
};

int run_train_vae(const LibraryFlags& f) {
  const SpectralLibrary lib = io::read_library_csv(f.library);
  validate_library(lib);
  const auto models = train_class_models(lib, make_train_config(f.train, f.seed), f.threads);
  save_models(f.out_dir, lib, models);
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto& log = models[k].training_log;
    std::cout << lib[k].material << ": loss " << log.front() << " -> " << log.back() << '\n';
  }
  return 0;
}

int run_augment_lib(const LibraryFlags& f) {
  const SpectralLibrary lib = io::read_library_csv(f.library);
  validate_library(lib);
  const auto models = f.models_dir.empty()
                          ? train_class_models(lib, make_train_config(f.train, f.seed), f.threads)
                          : load_models(f.models_dir, lib);
  const auto augmented = augment_library(lib, models, f.ns, derive_seed(f.seed, kAugmentStream));
  if (f.out.empty()) {
    io::write_library_csv(std::cout, augmented, true);
  } else {
    io::write_library_csv(fs::path(f.out), augmented, true);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MESMA unmixing with generative spectral library augmentation"};
  app.require_subcommand(1);

  ExperimentFlags synth_flags;
  auto* synth = app.add_subcommand("synth-experiment",
                                   "Monte Carlo comparison of FCLS, MESMA and augmented MESMA");
  add_experiment_flags(synth, synth_flags);
  synth->add_option("--ns", synth_flags.ns, "signatures generated per class");

  ExperimentFlags sweep_flags;
  std::vector<std::size_t> ns_list{0, 1, 2, 3, 4, 5, 6};
  auto* sweep = app.add_subcommand("ns-sweep", "augmented-MESMA error as a function of N_s");
  add_experiment_flags(sweep, sweep_flags);
  sweep->add_option("--ns", ns_list, "N_s values to evaluate")->delimiter(',');

  UnmixFlags unmix_flags;
  auto* unmix = app.add_subcommand("unmix", "unmix an image with FCLS, MESMA or augmented MESMA");
  unmix->add_option("--image", unmix_flags.image, "image CSV")->required();
  unmix->add_option("--library", unmix_flags.library, "library CSV")->required();
  unmix->add_option("--mode", unmix_flags.mode, "fcls | mesma | augmented")
      ->check(CLI::IsMember({"fcls", "mesma", "augmented"}));
  unmix->add_option("--models-dir", unmix_flags.models_dir, "pre-trained generators (augmented)");
  unmix->add_option("--ns", unmix_flags.ns, "signatures generated per class (augmented)");
  unmix->add_option("--seed", unmix_flags.seed, "master seed");
  unmix->add_option("--threads", unmix_flags.threads, "worker count")->check(CLI::PositiveNumber);
  unmix->add_option("--combination-cap", unmix_flags.combination_cap, "maximum MESMA models");
  unmix->add_option("--out-dir", unmix_flags.out_dir, "output directory");
  add_train_flags(unmix, unmix_flags.train);

  LibraryFlags train_flags;
  auto* train = app.add_subcommand("train-vae", "train one generator per library class");
  train->add_option("--library", train_flags.library, "library CSV")->required();
  train->add_option("--seed", train_flags.seed, "master seed");
  train->add_option("--threads", train_flags.threads, "worker count")->check(CLI::PositiveNumber);
  train->add_option("--out-dir", train_flags.out_dir, "directory for model files");
  add_train_flags(train, train_flags.train);

  LibraryFlags augment_flags;
  auto* augment = app.add_subcommand("augment-lib", "append generated signatures to a library");
  augment->add_option("--library", augment_flags.library, "library CSV")->required();
  augment->add_option("--models-dir", augment_flags.models_dir, "pre-trained generators");
  augment->add_option("--ns", augment_flags.ns, "signatures generated per class");
  augment->add_option("--seed", augment_flags.seed, "master seed");
  augment->add_option("--threads", augment_flags.threads, "worker count")->check(CLI::PositiveNumber);
  augment->add_option("--out", augment_flags.out, "output library CSV (default stdout)");
  add_train_flags(augment, augment_flags.train);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return run_synth_experiment(synth_flags);
    if (*sweep) return run_ns_sweep(sweep_flags, ns_list);
    if (*unmix) return run_unmix(unmix_flags);
    if (*train) return run_train_vae(train_flags);
    if (*augment) return run_augment_lib(augment_flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
