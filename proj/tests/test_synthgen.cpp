#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <specaug/random.hpp>
#include <specaug/synthgen.hpp>

#include "helpers.hpp"

using namespace specaug;

namespace {

// One-sample Kolmogorov-Smirnov test against U(lo, hi), asymptotic p-value.
double ks_uniform_p(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.bands = 40;
  cfg.pixels = 60;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(BasePools, DefaultSizes) {
  SynthConfig cfg;
  cfg.seed = 3;
  const auto pools = make_base_pools(cfg);
  ASSERT_EQ(pools.scene.size(), 3u);
  ASSERT_EQ(pools.library.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(pools.scene[k].size(), 20u);
    EXPECT_EQ(pools.library[k].size(), 14u);
  }
}

TEST(BasePools, DisjointInRangeAndDeterministic) {
  SynthConfig cfg;
  cfg.seed = 4;
  const auto pools = make_base_pools(cfg);
  std::set<std::vector<double>> seen;
  std::size_t total = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    for (const auto* pool : {&pools.scene[k], &pools.library[k]}) {
      for (const auto& s : *pool) {
        seen.insert(s.values);
        ++total;
        ASSERT_EQ(s.values.size(), 198u);
        for (double v : s.values) {
          EXPECT_GE(v, 0.05);
          EXPECT_LE(v, 0.95);
        }
      }
    }
  }
  EXPECT_EQ(seen.size(), total);
  const auto again = make_base_pools(cfg);
  EXPECT_EQ(again.scene, pools.scene);
  EXPECT_EQ(again.library, pools.library);
}

TEST(Mismatch, IdentityDraw) {
  const auto s = specaug::testing::make_spectrum({0.1, 0.5, 0.9});
  EXPECT_EQ(apply_affine(s, {1.0, 0.0}).values, s.values);
}

TEST(Mismatch, HandArithmetic) {
  const auto s = specaug::testing::make_spectrum(std::vector<double>(5, 0.4));
  for (double v : apply_affine(s, {0.75, -0.15}).values) EXPECT_NEAR(v, 0.15, 1e-15);
}

TEST(Mismatch, ClipsToPhysicalRange) {
  const auto s = specaug::testing::make_spectrum({0.05, 0.95});
  const auto low = apply_affine(s, {0.75, -0.15});
  EXPECT_EQ(low.values[0], 0.0);
  const auto high = apply_affine(s, {1.25, 0.15});
  EXPECT_EQ(high.values[1], 1.25);
}

TEST(Mismatch, DrawsAreUniform) {
  SynthConfig cfg;
  const std::vector<Spectrum> pool(10000, specaug::testing::make_spectrum({0.5}));
  Rng rng(7);
  const auto out = apply_mismatch(pool, cfg, rng);
  ASSERT_EQ(out.draws.size(), 10000u);
  std::vector<double> g;
  std::vector<double> o;
  for (const auto& d : out.draws) {
    g.push_back(d.gain);
    o.push_back(d.offset);
  }
  EXPECT_GT(ks_uniform_p(g, 0.75, 1.25), 0.01);
  EXPECT_GT(ks_uniform_p(o, -0.15, 0.15), 0.01);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(out.spectra[i].values[0], 0.5 * g[i] + o[i]);
  }
}

TEST(Dirichlet, MeanOfFlatConcentration) {
  Rng rng(8);
  const std::vector<double> alpha{1.0, 1.0, 1.0};
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto a = sample_dirichlet(alpha, rng);
    ASSERT_NEAR(a[0] + a[1] + a[2], 1.0, 1e-12);
    mean += Eigen::Vector3d(a[0], a[1], a[2]);
  }
  mean /= draws;
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(mean(k), 1.0 / 3.0, 0.005);
}

TEST(Dirichlet, MeanFollowsConcentrations) {
  Rng rng(9);
  const std::vector<double> alpha{2.0, 1.0, 5.0};
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i = 0; i < 50000; ++i) {
    const auto a = sample_dirichlet(alpha, rng);
    mean += Eigen::Vector3d(a[0], a[1], a[2]);
  }
  mean /= 50000.0;
  EXPECT_NEAR(mean(0), 0.25, 0.005);
  EXPECT_NEAR(mean(2), 0.625, 0.005);
}

TEST(Synthesize, NoiselessImageIsExactMixture) {
  auto cfg = small_config(10);
  cfg.snr_db = kNoNoise;
  const auto ds = synthesize_image(cfg);
  require_simplex_rows(ds.true_abundances.values);
  double worst = 0.0;
  for (std::size_t n = 0; n < cfg.pixels; ++n) {
    for (std::size_t b = 0; b < cfg.bands; ++b) {
      double y = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const auto j = ds.true_selections[n * 3 + k];
        y += ds.true_abundances.values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) *
             ds.scene_pools[k][j].values[b];
      }
      worst = std::max(worst, std::abs(y - ds.image.pixels()(static_cast<Eigen::Index>(n),
                                                             static_cast<Eigen::Index>(b))));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Synthesize, RealizedSnrMatchesTarget) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = synthesize_image(small_config(seed));
    EXPECT_NEAR(measured_snr_db(ds.clean, ds.image.pixels()), 30.0, 0.1);
  }
}

TEST(Synthesize, LibraryIsSubsetOfLibraryPool) {
  const auto cfg = small_config(11);
  const auto ds = synthesize_image(cfg);
  const auto pools = make_base_pools(cfg);
  ASSERT_EQ(ds.library.num_classes(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    ASSERT_EQ(ds.library[k].members.size(), 5u);
    std::set<std::vector<double>> picked;
    for (const auto& s : ds.library[k].members) {
      picked.insert(s.values);
      EXPECT_NE(std::find(pools.library[k].begin(), pools.library[k].end(), s), pools.library[k].end());
    }
    EXPECT_EQ(picked.size(), 5u);
  }
}

TEST(Synthesize, Deterministic) {
  const auto a = synthesize_image(small_config(12));
  const auto b = synthesize_image(small_config(12));
  EXPECT_EQ(a.image.pixels(), b.image.pixels());
  EXPECT_EQ(a.library, b.library);
  EXPECT_EQ(a.true_selections, b.true_selections);
  EXPECT_NE(synthesize_image(small_config(13)).image.pixels(), a.image.pixels());
}

TEST(SynthConfig, RejectsBrokenInvariants) {
  auto expect_invalid = [](SynthConfig cfg) {
    try {
      validate_config(cfg);
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
  };
  SynthConfig c;
  c.pool2_size = 4;
  expect_invalid(c);
  c = {};
  c.gain_min = 1.5;
  expect_invalid(c);
  c = {};
  c.dirichlet = {1.0, 0.0, 1.0};
  expect_invalid(c);
  c = {};
  c.dirichlet = {1.0, 1.0};
  expect_invalid(c);
  EXPECT_NO_THROW(validate_config(SynthConfig{}));
}
