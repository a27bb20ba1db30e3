#include <benchmark/benchmark.h>

#include <random>

#include <specaug/augment.hpp>
#include <specaug/fcls.hpp>
#include <specaug/mesma.hpp>
#include <specaug/synthgen.hpp>
#include <specaug/vae.hpp>

using namespace specaug;

namespace {

// A 100-pixel scene shared by every benchmark.
const SynthDataset& scene() {
  static const SynthDataset ds = [] {
    SynthConfig cfg;
    cfg.seed = 11;
    cfg.pixels = 100;
    return synthesize_image(cfg);
  }();
  return ds;
}

}  // namespace

static void BM_FclsSolve(benchmark::State& state) {
  const auto bands = static_cast<Eigen::Index>(state.range(0));
  const auto p = static_cast<Eigen::Index>(state.range(1));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Eigen::MatrixXd m(bands, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  Eigen::VectorXd y(bands);
  for (Eigen::Index i = 0; i < bands; ++i) y(i) = u(rng);
  const FclsSolver solver(m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve({y.data(), static_cast<std::size_t>(bands)}));
  }
}
BENCHMARK(BM_FclsSolve)->Args({10, 3})->Args({198, 3})->Args({198, 6});

// Pixels per second for plain and augmented libraries (members per class).
static void BM_MesmaUnmix(benchmark::State& state) {
  const auto& ds = scene();
  const auto ns = static_cast<std::size_t>(state.range(0));
  std::vector<MaterialClass> classes;
  for (std::size_t k = 0; k < ds.library.num_classes(); ++k) {
    MaterialClass cls = ds.library[k];
    for (std::size_t j = 0; j < ns; ++j) cls.members.push_back(ds.scene_pools[k][j]);
    classes.push_back(std::move(cls));
  }
  const SpectralLibrary lib(std::move(classes));
  for (auto _ : state) benchmark::DoNotOptimize(mesma_unmix(ds.image, lib));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * ds.image.num_pixels()));
}
BENCHMARK(BM_MesmaUnmix)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

// One full-batch gradient evaluation, i.e. the cost of one training epoch.
static void BM_VaeEpoch(benchmark::State& state) {
  const auto& cls = scene().library[0].members;
  const auto bands = static_cast<Eigen::Index>(cls.front().values.size());
  Eigen::MatrixXd batch(bands, static_cast<Eigen::Index>(cls.size()));
  for (std::size_t j = 0; j < cls.size(); ++j) {
    batch.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(cls[j].values.data(), bands);
  }
  const VaeModel model = init_vae(build_architecture(static_cast<std::size_t>(bands)), 5);
  const Eigen::MatrixXd noise = Eigen::MatrixXd::Constant(batch.cols(), 2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(elbo_gradients(model, batch, noise));
}
BENCHMARK(BM_VaeEpoch)->Unit(benchmark::kMicrosecond);

static void BM_TrainClassModels(benchmark::State& state) {
  TrainConfig cfg;
  cfg.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_class_models(scene().library, cfg));
}
BENCHMARK(BM_TrainClassModels)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_Synthesize(benchmark::State& state) {
  SynthConfig cfg;
  cfg.pixels = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_image(cfg));
}
BENCHMARK(BM_Synthesize)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
