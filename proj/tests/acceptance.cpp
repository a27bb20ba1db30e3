// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   specaug_acceptance [--runs R] [--epochs E] [--only N]
//
// --runs and --epochs exist for quick local iteration; the gate itself is the
// no-argument invocation.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <specaug/experiment.hpp>
#include <specaug/fcls.hpp>
#include <specaug/mesma.hpp>
#include <specaug/metrics.hpp>
#include <specaug/synthgen.hpp>
#include <specaug/vae.hpp>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace specaug;
using Clock = std::chrono::steady_clock;

namespace {

// Generator training length used for the Monte Carlo criteria. The
// reference 50 epochs leave the per-class generators barely trained; see
// the README for the measured effect of this setting.
constexpr int kAcceptanceEpochs = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome fcls_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pick_p(2, 3);
  std::uniform_int_distribution<int> pick_l(2, 10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int p = pick_p(rng);
    const int l = pick_l(rng);
    Eigen::MatrixXd m(l, p);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    Eigen::VectorXd y(l);
    for (Eigen::Index i = 0; i < l; ++i) y(i) = u(rng);
    const auto s = FclsSolver(m).solve({y.data(), static_cast<std::size_t>(l)});
    const auto g = oracle::simplex_grid(m, y, 1000);
    worst = std::max(worst, (s.abundances - g.abundances).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst <= 5e-3 && secs < 30.0,
          fmt("1000 instances, max abundance error %.2e (limit 5e-3), %.1f s (limit 30 s)", worst, secs)};
}

Outcome mesma_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::size_t selection_mismatches = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto lib = specaug::testing::random_library(rng, {3, 3}, 5);
    const HyperImage img(specaug::testing::random_matrix(rng, 20, 5, 0.05, 0.95));
    const auto r = mesma_unmix(img, lib);
    const auto ref = oracle::brute_force_mesma(img, lib, [](const Eigen::MatrixXd& m, auto px) {
      const auto s = FclsSolver(m).solve(px);
      return std::pair{s.abundances, s.residual_sq};
    });
    for (std::size_t n = 0; n < 20; ++n) {
      if (r.selection(n, 0) != ref[n].selection[0] || r.selection(n, 1) != ref[n].selection[1]) {
        ++selection_mismatches;
      }
      worst = std::max(worst, std::abs(r.residuals(static_cast<Eigen::Index>(n)) - ref[n].residual_sq));
    }
  }
  const double secs = seconds_since(t0);
  return {selection_mismatches == 0 && worst <= 1e-12 && secs < 10.0,
          fmt("100 instances x 20 pixels, %zu selection mismatches, max residual gap %.1e, %.2f s",
              selection_mismatches, worst, secs)};
}

Outcome vae_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::size_t checked = 0;
  std::size_t bad = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto l = static_cast<std::size_t>(std::uniform_int_distribution<int>(4, 12)(rng));
    const auto latent = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 2)(rng));
    const auto b = static_cast<Eigen::Index>(std::uniform_int_distribution<int>(1, 4)(rng));
    VaeModel m = init_vae(build_architecture(l, latent), rng());
    m.params.for_each_layer([&](DenseLayer& layer) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * normal(rng);
    });
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(l), b);
    for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = u(rng);
    Eigen::MatrixXd noise(b, static_cast<Eigen::Index>(latent));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng);
    const double w = 0.25 + 0.1 * t;
    const Eigen::VectorXd analytic = elbo_gradients(m, batch, noise, w).grad.flatten();
    const Eigen::VectorXd numeric = oracle::finite_difference(
        [&](const Eigen::VectorXd& theta) {
          VaeModel probe = m;
          probe.params.assign(theta);
          return elbo_loss(probe, batch, noise, w).loss;
        },
        m.params.flatten(), 1e-5);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double tol = std::max(1e-6, 1e-4 * std::abs(analytic(i)));
      const double err = std::abs(analytic(i) - numeric(i));
      worst_ratio = std::max(worst_ratio, err / tol);
      bad += err > tol ? 1 : 0;
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 120.0,
          fmt("20 configurations, %zu entries, %zu outside tolerance, worst error/tolerance %.2e, %.1f s",
              checked, bad, worst_ratio, secs)};
}

Outcome architecture() {
  const auto a = build_architecture(198, 2);
  const bool ok = a.encoder_hidden == std::array<std::size_t, 3>{243, 53, 20} &&
                  a.decoder_hidden == std::array<std::size_t, 3>{20, 53, 243} && a.input_dim == 198;
  return {ok, fmt("encoder [%zu, %zu, %zu], decoder [%zu, %zu, %zu] -> %zu", a.encoder_hidden[0],
                  a.encoder_hidden[1], a.encoder_hidden[2], a.decoder_hidden[0], a.decoder_hidden[1],
                  a.decoder_hidden[2], a.input_dim)};
}

struct MonteCarlo {
  ExperimentResult result;
  double seconds = 0.0;
  int epochs = 0;
};

const std::vector<std::size_t> kSweep{0, 1, 2, 3, 6};

MonteCarlo monte_carlo(std::size_t runs, int epochs) {
  ExperimentConfig cfg;
  cfg.runs = runs;
  cfg.train.epochs = epochs;
  const auto t0 = Clock::now();
  MonteCarlo mc{run_synthetic_experiment(cfg, kSweep), 0.0, epochs};
  mc.seconds = seconds_since(t0);
  return mc;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome ordering(const MonteCarlo& mc) {
  const auto mesma = mc.result.rmse_a_mesma();
  const auto proposed = mc.result.rmse_a_augmented(3);  // N_s = 3
  const double m = mean_of(mesma);
  const double p = mean_of(proposed);
  const double gain = (m - p) / m;
  const auto sign = paired_sign_test(proposed, mesma);
  const bool ok = p < m && sign.p_value < 0.05 && gain >= 0.05 && mc.seconds < 1800.0;
  return {ok, fmt("R=%zu, epochs=%d: MESMA %.2f, Proposed %.2f (x1e3), improvement %.1f%% (need >= 5%%), "
                  "sign test %zu/%zu wins p=%.2g (need < 0.05), %.0f s (limit 1800 s)",
                  mesma.size(), mc.epochs, 1e3 * m, 1e3 * p, 100.0 * gain, sign.wins,
                  sign.wins + sign.losses, sign.p_value, mc.seconds)};
}

Outcome monotone(const MonteCarlo& mc) {
  std::size_t broken = 0;
  for (const auto& r : mc.result.runs) broken += r.residuals_monotone ? 0 : 1;
  return {broken == 0, fmt("%zu realizations x N_s in {1,2,3,6}, %zu with a residual increase",
                           mc.result.runs.size(), broken)};
}

Outcome sweep_shape(const MonteCarlo& mc) {
  std::vector<double> means;
  for (std::size_t i = 0; i < kSweep.size(); ++i) means.push_back(mean_of(mc.result.rmse_a_augmented(i)));
  const bool zero_is_max = std::all_of(means.begin() + 1, means.end(), [&](double v) { return v < means[0]; });
  const double early = means[0] - means[3];
  const double late = means[3] - means[4];
  std::ostringstream curve;
  for (std::size_t i = 0; i < kSweep.size(); ++i) {
    curve << (i ? ", " : "") << kSweep[i] << ":" << fmt("%.2f", 1e3 * means[i]);
  }
  return {zero_is_max && early > late,
          "RMSE_A x1e3 by N_s {" + curve.str() + "}; gain 0->3 " + fmt("%.2f", 1e3 * early) +
              ", gain 3->6 " + fmt("%.2f", 1e3 * late)};
}

Outcome snr() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto ds = synthesize_image(cfg);
    worst = std::max(worst, std::abs(measured_snr_db(ds.clean, ds.image.pixels()) - 30.0));
  }
  return {worst <= 0.1, fmt("100 seeds, max |SNR - 30 dB| = %.2e dB", worst)};
}

#ifdef SPECAUG_CLI_PATH
std::string run_cli_tables(const std::string& dir, int threads) {
  const std::string cmd = std::string(SPECAUG_CLI_PATH) +
                          " synth-experiment --runs 4 --epochs 20 --seed 7 --set pixels=100 --threads " +
                          std::to_string(threads) + " --out-dir " + dir + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return "<cli failed>";
  std::string all;
  for (const char* f : {"/results.csv", "/runs.csv"}) {
    std::FILE* in = std::fopen((dir + f).c_str(), "rb");
    if (!in) return "<missing output>";
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, in)) > 0) all.append(buf, got);
    std::fclose(in);
  }
  return all;
}
#endif

Outcome determinism() {
#ifdef SPECAUG_CLI_PATH
  const std::string base = "/tmp/specaug_acceptance_det";
  const auto a = run_cli_tables(base + "_a", 1);
  const auto b = run_cli_tables(base + "_b", 1);
  const auto c = run_cli_tables(base + "_c", 4);
  const bool ok = a.front() != '<' && a == b && a == c;
  return {ok, fmt("synth-experiment tables (%zu bytes): repeat %s, threads 1 vs 4 %s", a.size(),
                  a == b ? "identical" : "DIFFERENT", a == c ? "identical" : "DIFFERENT")};
#else
  ExperimentConfig cfg;
  cfg.runs = 4;
  cfg.train.epochs = 20;
  cfg.synth.pixels = 100;
  auto tables = [&](std::size_t threads) {
    cfg.threads = threads;
    std::ostringstream out;
    const auto r = run_synthetic_experiment(cfg, std::vector<std::size_t>{3});
    write_results_table(out, r, 0);
    write_run_log(out, r);
    return out.str();
  };
  const auto a = tables(1);
  const bool ok = a == tables(1) && a == tables(4);
  return {ok, "library-level tables (command line tool not built)"};
#endif
}

Outcome metric_identities() {
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> dim(1, 12);
  std::uniform_real_distribution<double> scale(-10.0, 10.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int r = dim(rng);
    const int c = dim(rng);
    const auto x = specaug::testing::random_matrix(rng, r, c, -1.0, 1.0);
    const auto y = specaug::testing::random_matrix(rng, r, c, -1.0, 1.0);
    const double s = scale(rng);
    worst = std::max({worst, rmse(x, x), std::abs(rmse(x, y) - rmse(y, x)),
                      std::abs(rmse(s * x, s * y) - std::abs(s) * rmse(x, y))});
  }
  return {worst <= 1e-12, fmt("1000 random pairs, worst identity violation %.1e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t runs = 50;
  int epochs = kAcceptanceEpochs;
  int only = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--runs") runs = std::strtoul(argv[i + 1], nullptr, 10);
    else if (flag == "--epochs") epochs = std::atoi(argv[i + 1]);
    else if (flag == "--only") only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto wanted = [&](int id) { return only == 0 || only == id; };

  if (wanted(1)) report(1, "FCLS oracle equivalence", fcls_oracle());
  if (wanted(2)) report(2, "MESMA oracle equivalence", mesma_oracle());
  if (wanted(3)) report(3, "VAE gradient check", vae_gradients());
  if (wanted(4)) report(4, "architecture fidelity", architecture());
  if (wanted(5) || wanted(6) || wanted(7)) {
    const auto mc = monte_carlo(runs, epochs);
    if (wanted(5)) report(5, "ordering vs plain MESMA", ordering(mc));
    if (wanted(6)) report(6, "superset monotonicity", monotone(mc));
    if (wanted(7)) report(7, "N_s sweep shape", sweep_shape(mc));
  }
  if (wanted(8)) report(8, "SNR calibration", snr());
  if (wanted(9)) report(9, "determinism", determinism());
  if (wanted(10)) report(10, "metric identities", metric_identities());

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
