#include "specaug/augment.hpp"

#include "specaug/parallel.hpp"
#include "specaug/random.hpp"

namespace specaug {

std::vector<VaeModel> train_class_models(const SpectralLibrary& lib, const TrainConfig& cfg,
                                         std::size_t threads) {
  validate_library(lib);
  std::vector<VaeModel> models(lib.num_classes());
  parallel_for(lib.num_classes(), threads, [&](std::size_t k) {
    TrainConfig class_cfg = cfg;
    class_cfg.seed = cfg.seed + k;
    models[k] = train_vae(lib[k].members, class_cfg);
  });
  return models;
}

SpectralLibrary augment_library(const SpectralLibrary& lib, std::span<const VaeModel> models,
                                std::size_t ns, std::uint64_t seed) {
  validate_library(lib);
  if (models.size() != lib.num_classes()) {
    throw Error(ErrorCode::ModelMismatch, "need exactly one model per library class");
  }
  std::vector<MaterialClass> classes = lib.classes();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& model = models[k];
    if (model.architecture.input_dim != lib.bands()) {
      throw Error(ErrorCode::ModelMismatch,
                  "model for class " + std::to_string(k) + " has L=" +
                      std::to_string(model.architecture.input_dim) + ", library has L=" +
                      std::to_string(lib.bands()));
    }
    Rng rng = make_rng(seed, k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(model.architecture.latent_dim);
    for (std::size_t draw = 0; draw < ns; ++draw) {
      for (double& v : z) v = normal(rng);
      Spectrum generated = decode(model, z);
      generated.label = classes[k].material;
      generated.provenance = {true, draw};
      classes[k].members.push_back(std::move(generated));
    }
  }
  return SpectralLibrary(std::move(classes));
}

AugmentedMesma run_augmented_mesma(const HyperImage& img, const SpectralLibrary& lib,
                                   std::span<const VaeModel> models, std::size_t ns,
                                   std::uint64_t seed, const MesmaOptions& options) {
  AugmentedMesma out;
  out.library = augment_library(lib, models, ns, seed);
  out.result = mesma_unmix(img, out.library, options);
  return out;
}

}  // namespace specaug
