#include <random>

#include <gtest/gtest.h>

#include <specaug/augment.hpp>

#include "helpers.hpp"

using namespace specaug;

namespace {

struct Fixture {
  SpectralLibrary lib;
  std::vector<VaeModel> models;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    std::mt19937_64 rng(1);
    Fixture out;
    out.lib = specaug::testing::random_library(rng, {5, 5, 5}, 12);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 3;
    out.models = train_class_models(out.lib, cfg);
    return out;
  }();
  return f;
}

std::vector<Spectrum> other_library() {
  std::mt19937_64 rng(2);
  return specaug::testing::random_library(rng, {3, 1}, 7)[0].members;
}

}  // namespace

TEST(Augment, ZeroSamplesIsIdentity) {
  const auto& f = fixture();
  EXPECT_EQ(augment_library(f.lib, f.models, 0, 9), f.lib);
}

TEST(Augment, AppendsAfterOriginals) {
  const auto& f = fixture();
  const auto aug = augment_library(f.lib, f.models, 3, 9);
  EXPECT_EQ(aug.class_sizes(), (std::vector<std::size_t>{8, 8, 8}));
  EXPECT_EQ(count_models(aug), 512u);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(aug.member(k, j), f.lib.member(k, j));
    for (std::size_t d = 0; d < 3; ++d) {
      const auto& s = aug.member(k, 5 + d);
      EXPECT_TRUE(s.provenance.synthetic);
      EXPECT_EQ(s.provenance.draw_index, d);
      EXPECT_EQ(s.label, f.lib[k].material);
      for (double v : s.values) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
      }
    }
  }
}

TEST(Augment, DeterministicAndPrefixStable) {
  const auto& f = fixture();
  const auto a = augment_library(f.lib, f.models, 4, 21);
  EXPECT_EQ(a, augment_library(f.lib, f.models, 4, 21));
  const auto shorter = augment_library(f.lib, f.models, 2, 21);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(shorter.member(k, j), a.member(k, j));
  }
  EXPECT_NE(augment_library(f.lib, f.models, 4, 22), a);
}

TEST(Augment, ClassesDrawIndependently) {
  // Swapping the model of class 0 leaves the draws of class 1 alone.
  const auto& f = fixture();
  auto models = f.models;
  models[0] = models[2];
  const auto a = augment_library(f.lib, f.models, 3, 5);
  const auto b = augment_library(f.lib, models, 3, 5);
  EXPECT_EQ(a[1], b[1]);
  EXPECT_NE(a[0], b[0]);
}

TEST(Augment, RejectsModelMismatch) {
  const auto& f = fixture();
  try {
    augment_library(f.lib, std::span(f.models).first(2), 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelMismatch);
  }
  auto wrong = f.models;
  TrainConfig cfg;
  cfg.epochs = 1;
  wrong[1] = train_vae(other_library(), cfg);
  EXPECT_THROW(augment_library(f.lib, wrong, 1, 0), Error);
}

TEST(Augment, TrainedModelsAreDeterministic) {
  const auto& f = fixture();
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 3;
  const auto again = train_class_models(f.lib, cfg, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(again[k].params.flatten(), f.models[k].params.flatten());
  }
}

TEST(AugmentedMesma, ZeroSamplesEqualsPlainMesma) {
  const auto& f = fixture();
  std::mt19937_64 rng(4);
  const HyperImage img(specaug::testing::random_matrix(rng, 20, 12, 0.1, 0.9));
  const auto plain = mesma_unmix(img, f.lib);
  const auto aug = run_augmented_mesma(img, f.lib, f.models, 0, 7);
  EXPECT_EQ(aug.result.selections, plain.selections);
  EXPECT_EQ(aug.result.abundances.values, plain.abundances.values);
  EXPECT_EQ(aug.result.residuals, plain.residuals);
}

TEST(AugmentedMesma, ResidualsNeverIncrease) {
  const auto& f = fixture();
  std::mt19937_64 rng(5);
  const HyperImage img(specaug::testing::random_matrix(rng, 30, 12, 0.1, 0.9));
  const auto plain = mesma_unmix(img, f.lib);
  for (std::size_t ns : {1u, 3u, 5u}) {
    const auto aug = run_augmented_mesma(img, f.lib, f.models, ns, 7);
    EXPECT_EQ(aug.result.models_evaluated, (5 + ns) * (5 + ns) * (5 + ns));
    for (Eigen::Index n = 0; n < 30; ++n) EXPECT_LE(aug.result.residuals(n), plain.residuals(n));
    EXPECT_EQ(aug.result.selections, mesma_unmix(img, aug.library).selections);
  }
}
