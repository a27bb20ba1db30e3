#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "specaug/random.hpp"
#include "specaug/spectral.hpp"

namespace specaug {

/// Library-mismatch benchmark parameters. Defaults follow the reference
/// protocol: 3 materials, 198 bands, 20 scene / 14 library signatures per
/// material, 5-member libraries, gain in [0.75, 1.25], offset in
/// [-0.15, 0.15], 30 dB SNR.
struct SynthConfig {
  std::size_t endmembers = 3;
  std::size_t bands = 198;
  std::size_t pixels = 400;
  std::size_t pool1_size = 20;
  std::size_t pool2_size = 14;
  std::size_t library_subset_size = 5;
  double gain_min = 0.75;
  double gain_max = 1.25;
  double offset_min = -0.15;
  double offset_max = 0.15;
  std::vector<double> dirichlet{5.0, 5.0, 5.0};
  double snr_db = 30.0;  // +infinity disables noise
  std::uint64_t seed = 0;
};

/// Throws InvalidConfig on the first broken invariant.
void validate_config(const SynthConfig& cfg);

/// Per-class signature pools: scene pools (M1) and library pools (M2).
struct BasePools {
  std::vector<std::vector<Spectrum>> scene;
  std::vector<std::vector<Spectrum>> library;
};

/// Smooth synthetic signatures in [0.05, 0.95]. Each class has its own
/// base shape (a sum of 3 to 6 Gaussian bumps); members scale the base,
/// shift it by a flat offset and add faint low-frequency cosines. Scene and
/// library pools are disjoint.
BasePools make_base_pools(const SynthConfig& cfg);

struct AffineDraw {
  double gain = 1.0;
  double offset = 0.0;
};

/// g * m + o, clipped to [0, 1.25].
Spectrum apply_affine(const Spectrum& spec, AffineDraw draw);

struct MismatchedPool {
  std::vector<Spectrum> spectra;
  std::vector<AffineDraw> draws;
};

/// Independent gain/offset per signature from the configured ranges.
MismatchedPool apply_mismatch(std::span<const Spectrum> pool, const SynthConfig& cfg, Rng& rng);

/// Draws a ~ Dirichlet(alpha) via normalized Gamma variates.
std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

struct SynthDataset {
  HyperImage image;
  RowMatrix clean;  // noiseless M_n a_n
  AbundanceMap true_abundances;
  std::vector<std::vector<Spectrum>> scene_pools;  // perturbed M1
  SpectralLibrary library;                         // subset of M2
  std::vector<std::size_t> true_selections;        // N x P, row-major, into scene_pools
};

SynthDataset synthesize_image(const SynthConfig& cfg);

/// 10 log10(||clean||^2 / ||noisy - clean||^2) over the whole image.
double measured_snr_db(const RowMatrix& clean, const RowMatrix& noisy);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

}  // namespace specaug
