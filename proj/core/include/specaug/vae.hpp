#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specaug/spectral.hpp"

namespace specaug {

/// Layer widths of the per-class encoder/decoder pair.
///
/// Encoder: L -> ceil(1.2 L) + 5 -> max(ceil(L/4), K+2) + 3 -> max(ceil(L/10), K+1),
/// all ReLU, followed by two linear heads of width K (latent mean and
/// log-variance). Decoder mirrors the hidden widths with ReLU, starting
/// directly from z, and ends in a sigmoid layer of width L.
struct VaeArchitecture {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 0;
  std::array<std::size_t, 3> encoder_hidden{};
  std::array<std::size_t, 3> decoder_hidden{};

  friend bool operator==(const VaeArchitecture&, const VaeArchitecture&) = default;
};

/// Throws InvalidDimensions unless 1 <= latent_dim < bands.
VaeArchitecture build_architecture(std::size_t bands, std::size_t latent_dim = 2);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Parameters in canonical layer order: encoder[0..2], mean head,
/// log-variance head, decoder[0..3]. Gradients use the same type.
struct VaeParameters {
  std::array<DenseLayer, 3> encoder;
  DenseLayer mean_head;
  DenseLayer logvar_head;
  std::array<DenseLayer, 4> decoder;

  static VaeParameters zeros(const VaeArchitecture& arch);

  std::size_t size() const;
  /// Concatenates every layer, weights row-major then bias.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);

  template <typename Fn>
  void for_each_layer(Fn&& fn) {
    for (auto& l : encoder) fn(l);
    fn(mean_head);
    fn(logvar_head);
    for (auto& l : decoder) fn(l);
  }
  template <typename Fn>
  void for_each_layer(Fn&& fn) const {
    for (const auto& l : encoder) fn(l);
    fn(mean_head);
    fn(logvar_head);
    for (const auto& l : decoder) fn(l);
  }
};

struct VaeModel {
  VaeArchitecture architecture;
  VaeParameters params;
  std::vector<double> training_log;  // ELBO loss per epoch
};

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  double kl_weight = 1.0;
  std::size_t latent_dim = 2;
};

/// log sigma^2 is clamped to this range before exponentiation.
inline constexpr double kLogVarClamp = 10.0;

/// Xavier-uniform weights, zero biases.
VaeModel init_vae(const VaeArchitecture& arch, std::uint64_t seed);

struct ElboTerms {
  double loss = 0.0;            // reconstruction + kl_weight * kl
  double reconstruction = 0.0;  // mean over batch of ||x - G(z)||^2
  double kl = 0.0;              // mean over batch of KL(q(z|x) || N(0, I))
};

/// Negative ELBO of a batch (L x B, columns are spectra) with fixed
/// standard-normal draws `noise` (B x K) for the reparameterized sample.
ElboTerms elbo_loss(const VaeModel& model, const Eigen::MatrixXd& batch,
                    const Eigen::MatrixXd& noise, double kl_weight = 1.0);

struct ElboGradients {
  ElboTerms terms;
  VaeParameters grad;
};

/// Exact gradients of elbo_loss by backpropagation.
ElboGradients elbo_gradients(const VaeModel& model, const Eigen::MatrixXd& batch,
                             const Eigen::MatrixXd& noise, double kl_weight = 1.0);

/// Full-batch Adam, one step per epoch. Inputs are clipped to [0, 1].
/// Deterministic in (spectra, cfg).
VaeModel train_vae(std::span<const Spectrum> class_spectra, const TrainConfig& cfg);

/// Decoder forward pass; every output lies in (0, 1).
Spectrum decode(const VaeModel& model, std::span<const double> z);

/// Versioned text format with hexadecimal floats; round-trips bit-exactly.
void save_model(const VaeModel& model, std::ostream& out);
VaeModel load_model(std::istream& in);

}  // namespace specaug
