#include "specaug/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace specaug {

namespace {

// Stream ids under the dataset seed.
enum Stream : std::uint64_t { kPools = 0, kMismatch = 1, kPixels = 2, kNoise = 3, kLibrary = 4 };

constexpr double kPoolFloor = 0.05;
constexpr double kPoolCeil = 0.95;
constexpr double kMismatchCeil = 1.25;

// Class k concentrates its bumps around its own region of the band axis so
// that materials are spectrally distinct.
std::vector<double> base_shape(std::size_t bands, std::size_t cls, std::size_t classes, Rng& rng) {
  std::uniform_int_distribution<int> bump_count(3, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double span = static_cast<double>(bands);
  const double region = (static_cast<double>(cls) + 0.5) / static_cast<double>(classes);
  std::vector<double> shape(bands, 0.0);
  const int bumps = bump_count(rng);
  for (int i = 0; i < bumps; ++i) {
    const double center = (region + (unit(rng) - 0.5) / static_cast<double>(classes)) * span;
    const double width = (0.03 + 0.12 * unit(rng)) * span;
    const double height = 0.2 + 0.8 * unit(rng);
    for (std::size_t b = 0; b < bands; ++b) {
      const double d = (static_cast<double>(b) - center) / width;
      shape[b] += height * std::exp(-0.5 * d * d);
    }
  }
  // Rescale into a class-specific reflectance window.
  const auto [lo_it, hi_it] = std::minmax_element(shape.begin(), shape.end());
  const double lo = *lo_it;
  const double range = std::max(*hi_it - lo, 1e-12);
  const double floor = 0.05 + 0.15 * unit(rng);
  const double ceil = floor + 0.4 + 0.3 * unit(rng);
  for (double& v : shape) v = floor + (ceil - floor) * (v - lo) / range;
  return shape;
}

// One pool member: the class shape under a mild brightness scale and a flat
// reflectance offset, plus a few faint low-frequency cosines.
Spectrum pool_member(const std::vector<double>& base, Rng& rng) {
  std::uniform_real_distribution<double> scale_dist(0.9, 1.1);
  std::uniform_real_distribution<double> offset_dist(-0.2, 0.2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> amp(0.0, 0.005);
  const double scale = scale_dist(rng);
  const double offset = offset_dist(rng);
  double a[3];
  double ph[3];
  for (int r = 0; r < 3; ++r) {
    a[r] = amp(rng);
    ph[r] = phase(rng);
  }
  const std::size_t bands = base.size();
  Spectrum s;
  s.values.resize(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const double t = static_cast<double>(b) / static_cast<double>(bands);
    double v = scale * base[b] + offset;
    for (int r = 0; r < 3; ++r) v += a[r] * std::cos(std::numbers::pi * (r + 1) * t + ph[r]);
    s.values[b] = std::clamp(v, kPoolFloor, kPoolCeil);
  }
  return s;
}

}  // namespace

void validate_config(const SynthConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (cfg.endmembers < 2) fail("need at least two endmembers");
  if (cfg.bands < 2) fail("need at least two bands");
  if (cfg.pixels < 1) fail("need at least one pixel");
  if (cfg.pool1_size < 1) fail("scene pool must be non-empty");
  if (cfg.library_subset_size < 1 || cfg.pool2_size < cfg.library_subset_size) {
    fail("library pool must hold at least library_subset_size >= 1 signatures");
  }
  if (!(cfg.gain_min <= cfg.gain_max)) fail("gain range is not ordered");
  if (!(cfg.offset_min <= cfg.offset_max)) fail("offset range is not ordered");
  if (cfg.dirichlet.size() != cfg.endmembers) fail("need one Dirichlet concentration per endmember");
  for (double a : cfg.dirichlet) {
    if (!(a > 0.0) || !std::isfinite(a)) fail("Dirichlet concentrations must be positive");
  }
  if (std::isnan(cfg.snr_db)) fail("SNR must be a number");
}

BasePools make_base_pools(const SynthConfig& cfg) {
  validate_config(cfg);
  Rng rng = make_rng(cfg.seed, kPools);
  BasePools pools;
  pools.scene.resize(cfg.endmembers);
  pools.library.resize(cfg.endmembers);
  for (std::size_t k = 0; k < cfg.endmembers; ++k) {
    const auto base = base_shape(cfg.bands, k, cfg.endmembers, rng);
    const std::string label = "class_" + std::to_string(k);
    std::set<std::vector<double>> seen;
    for (std::size_t j = 0; j < cfg.pool1_size + cfg.pool2_size; ++j) {
      Spectrum s = pool_member(base, rng);
      while (!seen.insert(s.values).second) s = pool_member(base, rng);
      s.label = label;
      (j < cfg.pool1_size ? pools.scene[k] : pools.library[k]).push_back(std::move(s));
    }
  }
  return pools;
}

Spectrum apply_affine(const Spectrum& spec, AffineDraw draw) {
  Spectrum out = spec;
  for (double& v : out.values) v = std::clamp(draw.gain * v + draw.offset, 0.0, kMismatchCeil);
  return out;
}

MismatchedPool apply_mismatch(std::span<const Spectrum> pool, const SynthConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> gain(cfg.gain_min, cfg.gain_max);
  std::uniform_real_distribution<double> offset(cfg.offset_min, cfg.offset_max);
  MismatchedPool out;
  out.spectra.reserve(pool.size());
  out.draws.reserve(pool.size());
  for (const auto& s : pool) {
    AffineDraw d;
    d.gain = gain(rng);
    d.offset = offset(rng);
    out.spectra.push_back(apply_affine(s, d));
    out.draws.push_back(d);
  }
  return out;
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  do {
    total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      std::gamma_distribution<double> gamma(alpha[i], 1.0);
      out[i] = gamma(rng);
      total += out[i];
    }
  } while (!(total > 0.0));
  for (double& v : out) v /= total;
  return out;
}

SynthDataset synthesize_image(const SynthConfig& cfg) {
  validate_config(cfg);
  const BasePools pools = make_base_pools(cfg);
  const std::size_t p = cfg.endmembers;
  const std::size_t n_pixels = cfg.pixels;
  const auto bands = static_cast<Eigen::Index>(cfg.bands);

  SynthDataset ds;
  Rng mismatch_rng = make_rng(cfg.seed, kMismatch);
  ds.scene_pools.reserve(p);
  for (std::size_t k = 0; k < p; ++k) {
    ds.scene_pools.push_back(apply_mismatch(pools.scene[k], cfg, mismatch_rng).spectra);
  }

  Rng library_rng = make_rng(cfg.seed, kLibrary);
  std::vector<MaterialClass> classes;
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<std::size_t> idx(pools.library[k].size());
    std::iota(idx.begin(), idx.end(), 0);
    MaterialClass cls{"class_" + std::to_string(k), {}};
    for (std::size_t j = 0; j < cfg.library_subset_size; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
      std::swap(idx[j], idx[pick(library_rng)]);
      cls.members.push_back(pools.library[k][idx[j]]);
    }
    classes.push_back(std::move(cls));
  }
  ds.library = SpectralLibrary(std::move(classes));

  Rng pixel_rng = make_rng(cfg.seed, kPixels);
  std::uniform_int_distribution<std::size_t> pick_member(0, cfg.pool1_size - 1);
  ds.clean.setZero(static_cast<Eigen::Index>(n_pixels), bands);
  ds.true_abundances.values.resize(static_cast<Eigen::Index>(n_pixels), static_cast<Eigen::Index>(p));
  ds.true_selections.resize(n_pixels * p);
  for (std::size_t n = 0; n < n_pixels; ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    for (std::size_t k = 0; k < p; ++k) ds.true_selections[n * p + k] = pick_member(pixel_rng);
    const auto a = sample_dirichlet(cfg.dirichlet, pixel_rng);
    for (std::size_t k = 0; k < p; ++k) {
      ds.true_abundances.values(row, static_cast<Eigen::Index>(k)) = a[k];
      const auto& m = ds.scene_pools[k][ds.true_selections[n * p + k]].values;
      ds.clean.row(row) += a[k] * Eigen::Map<const Eigen::RowVectorXd>(m.data(), bands);
    }
  }

  RowMatrix noisy = ds.clean;
  if (std::isfinite(cfg.snr_db)) {
    const double signal_power = ds.clean.squaredNorm();
    const double elements = static_cast<double>(ds.clean.size());
    const double sigma = std::sqrt(signal_power / elements / std::pow(10.0, cfg.snr_db / 10.0));
    Rng noise_rng = make_rng(cfg.seed, kNoise);
    std::normal_distribution<double> normal(0.0, sigma);
    RowMatrix noise(ds.clean.rows(), ds.clean.cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(noise_rng);
    // Pin the realized image-wide SNR to the requested value.
    const double target_energy = signal_power / std::pow(10.0, cfg.snr_db / 10.0);
    noise *= std::sqrt(target_energy / noise.squaredNorm());
    noisy += noise;
  }
  ds.image = HyperImage(std::move(noisy));
  return ds;
}

double measured_snr_db(const RowMatrix& clean, const RowMatrix& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "SNR needs images of equal shape");
  }
  return 10.0 * std::log10(clean.squaredNorm() / (noisy - clean).squaredNorm());
}

}  // namespace specaug
