#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "specaug/mesma.hpp"
#include "specaug/vae.hpp"

namespace specaug {

/// Trains one generator per library class. Class k uses seed
/// `cfg.seed + k`; classes are trained concurrently on `threads` workers.
std::vector<VaeModel> train_class_models(const SpectralLibrary& lib, const TrainConfig& cfg,
                                         std::size_t threads = 1);

/// Appends `ns` decoded samples z ~ N(0, I_K) to every class. Originals
/// keep their order; generated members follow in draw order and are tagged
/// with their class label and draw index. Each class draws from its own
/// stream derived from `seed`, so the first n draws of a class do not
/// depend on `ns` or on other classes.
SpectralLibrary augment_library(const SpectralLibrary& lib, std::span<const VaeModel> models,
                                std::size_t ns, std::uint64_t seed);

struct AugmentedMesma {
  MesmaResult result;
  SpectralLibrary library;
};

AugmentedMesma run_augmented_mesma(const HyperImage& img, const SpectralLibrary& lib,
                                   std::span<const VaeModel> models, std::size_t ns,
                                   std::uint64_t seed, const MesmaOptions& options = {});

}  // namespace specaug
