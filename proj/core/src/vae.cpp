#include "specaug/vae.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "specaug/random.hpp"

namespace specaug {

namespace {

constexpr const char* kFormatMagic = "specaug-vae";
constexpr int kFormatVersion = 1;

std::size_t ceil_div(std::size_t num, std::size_t den) { return (num + den - 1) / den; }

DenseLayer zero_layer(std::size_t out, std::size_t in) {
  return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))};
}

Eigen::MatrixXd affine(const DenseLayer& layer, const Eigen::MatrixXd& in) {
  return (layer.weights * in).colwise() + layer.bias;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// Zeroes entries whose pre-activation is not strictly positive.
Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& upstream, const Eigen::MatrixXd& pre) {
  return upstream.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
}

struct Forward {
  std::array<Eigen::MatrixXd, 4> enc_act;  // enc_act[0] is the input batch
  std::array<Eigen::MatrixXd, 3> enc_pre;
  Eigen::MatrixXd mean;
  Eigen::MatrixXd logvar_raw;
  Eigen::MatrixXd logvar;
  Eigen::MatrixXd stddev;
  Eigen::MatrixXd eps;                     // K x B
  std::array<Eigen::MatrixXd, 4> dec_act;  // dec_act[0] is z
  std::array<Eigen::MatrixXd, 3> dec_pre;
  Eigen::MatrixXd output;
  ElboTerms terms;
};

void check_batch(const VaeModel& model, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& noise) {
  const auto& arch = model.architecture;
  if (static_cast<std::size_t>(batch.rows()) != arch.input_dim || batch.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "batch must be L x B with B >= 1");
  }
  if (noise.rows() != batch.cols() || static_cast<std::size_t>(noise.cols()) != arch.latent_dim) {
    throw Error(ErrorCode::DimensionMismatch, "noise must be B x K");
  }
}

Forward forward(const VaeModel& model, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& noise,
                double kl_weight) {
  check_batch(model, batch, noise);
  const auto& p = model.params;
  const double b = static_cast<double>(batch.cols());
  Forward f;
  f.enc_act[0] = batch;
  for (std::size_t i = 0; i < 3; ++i) {
    f.enc_pre[i] = affine(p.encoder[i], f.enc_act[i]);
    f.enc_act[i + 1] = relu(f.enc_pre[i]);
  }
  f.mean = affine(p.mean_head, f.enc_act[3]);
  f.logvar_raw = affine(p.logvar_head, f.enc_act[3]);
  f.logvar = f.logvar_raw.cwiseMax(-kLogVarClamp).cwiseMin(kLogVarClamp);
  f.stddev = (0.5 * f.logvar.array()).exp().matrix();
  f.eps = noise.transpose();
  f.dec_act[0] = f.mean + f.stddev.cwiseProduct(f.eps);
  for (std::size_t i = 0; i < 3; ++i) {
    f.dec_pre[i] = affine(p.decoder[i], f.dec_act[i]);
    f.dec_act[i + 1] = relu(f.dec_pre[i]);
  }
  f.output = sigmoid(affine(p.decoder[3], f.dec_act[3]));

  f.terms.reconstruction = (batch - f.output).squaredNorm() / b;
  f.terms.kl = 0.5 *
               (f.mean.array().square() + f.logvar.array().exp() - f.logvar.array() - 1.0).sum() /
               b;
  f.terms.loss = f.terms.reconstruction + kl_weight * f.terms.kl;
  if (!std::isfinite(f.terms.loss)) {
    throw Error(ErrorCode::NonFiniteLoss, "ELBO loss is not finite");
  }
  return f;
}

void accumulate(DenseLayer& grad, const Eigen::MatrixXd& delta, const Eigen::MatrixXd& input) {
  grad.weights = delta * input.transpose();
  grad.bias = delta.rowwise().sum();
}

void write_hex(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  out << buf << '\n';
}

double read_hex(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw Error(ErrorCode::ParseError, "unexpected end of model file");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) {
    throw Error(ErrorCode::ParseError, "bad number '" + token + "' in model file");
  }
  return v;
}

template <typename T>
T read_field(std::istream& in, const std::string& key) {
  std::string name;
  T value{};
  if (!(in >> name) || name != key || !(in >> value)) {
    throw Error(ErrorCode::ParseError, "expected field '" + key + "' in model file");
  }
  return value;
}

}  // namespace

VaeArchitecture build_architecture(std::size_t bands, std::size_t latent_dim) {
  if (bands < 1 || latent_dim < 1 || latent_dim >= bands) {
    throw Error(ErrorCode::InvalidDimensions, "need 1 <= K < L, got L=" + std::to_string(bands) +
                                                  ", K=" + std::to_string(latent_dim));
  }
  const std::size_t wide = ceil_div(12 * bands, 10) + 5;
  const std::size_t mid = std::max(ceil_div(bands, 4), latent_dim + 2) + 3;
  const std::size_t narrow = std::max(ceil_div(bands, 10), latent_dim + 1);
  VaeArchitecture arch;
  arch.input_dim = bands;
  arch.latent_dim = latent_dim;
  arch.encoder_hidden = {wide, mid, narrow};
  arch.decoder_hidden = {narrow, mid, wide};
  return arch;
}

VaeParameters VaeParameters::zeros(const VaeArchitecture& arch) {
  const auto& e = arch.encoder_hidden;
  const auto& d = arch.decoder_hidden;
  VaeParameters p;
  p.encoder = {zero_layer(e[0], arch.input_dim), zero_layer(e[1], e[0]), zero_layer(e[2], e[1])};
  p.mean_head = zero_layer(arch.latent_dim, e[2]);
  p.logvar_head = zero_layer(arch.latent_dim, e[2]);
  p.decoder = {zero_layer(d[0], arch.latent_dim), zero_layer(d[1], d[0]), zero_layer(d[2], d[1]),
               zero_layer(arch.input_dim, d[2])};
  return p;
}

std::size_t VaeParameters::size() const {
  std::size_t n = 0;
  for_each_layer([&](const DenseLayer& l) {
    n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  });
  return n;
}

Eigen::VectorXd VaeParameters::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for_each_layer([&](const DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) flat(at++) = l.weights(r, c);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat(at++) = l.bias(r);
  });
  return flat;
}

void VaeParameters::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) {
    throw Error(ErrorCode::DimensionMismatch, "flat parameter vector has the wrong length");
  }
  Eigen::Index at = 0;
  for_each_layer([&](DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = flat(at++);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat(at++);
  });
}

VaeModel init_vae(const VaeArchitecture& arch, std::uint64_t seed) {
  VaeModel model{arch, VaeParameters::zeros(arch), {}};
  Rng rng(seed);
  model.params.for_each_layer([&](DenseLayer& l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weights.rows() + l.weights.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = dist(rng);
    }
  });
  return model;
}

ElboTerms elbo_loss(const VaeModel& model, const Eigen::MatrixXd& batch,
                    const Eigen::MatrixXd& noise, double kl_weight) {
  return forward(model, batch, noise, kl_weight).terms;
}

ElboGradients elbo_gradients(const VaeModel& model, const Eigen::MatrixXd& batch,
                             const Eigen::MatrixXd& noise, double kl_weight) {
  const Forward f = forward(model, batch, noise, kl_weight);
  const auto& p = model.params;
  const double inv_b = 1.0 / static_cast<double>(batch.cols());

  ElboGradients out{f.terms, VaeParameters::zeros(model.architecture)};
  auto& g = out.grad;

  // Decoder: squared error through the sigmoid output.
  Eigen::MatrixXd delta =
      (2.0 * inv_b) * (f.output - batch).cwiseProduct(f.output.cwiseProduct(
                                                        (1.0 - f.output.array()).matrix()));
  accumulate(g.decoder[3], delta, f.dec_act[3]);
  Eigen::MatrixXd upstream = p.decoder[3].weights.transpose() * delta;
  for (std::size_t i = 3; i-- > 0;) {
    delta = relu_backward(upstream, f.dec_pre[i]);
    accumulate(g.decoder[i], delta, f.dec_act[i]);
    upstream = p.decoder[i].weights.transpose() * delta;
  }
  const Eigen::MatrixXd& d_z = upstream;

  // Reparameterization z = mean + exp(logvar / 2) * eps, plus the KL term.
  const double kl_scale = kl_weight * inv_b;
  Eigen::MatrixXd d_mean = d_z + kl_scale * f.mean;
  Eigen::MatrixXd d_logvar =
      0.5 * d_z.cwiseProduct(f.stddev).cwiseProduct(f.eps) +
      (0.5 * kl_scale) * (f.logvar.array().exp() - 1.0).matrix();
  for (Eigen::Index r = 0; r < d_logvar.rows(); ++r) {
    for (Eigen::Index c = 0; c < d_logvar.cols(); ++c) {
      const double raw = f.logvar_raw(r, c);
      if (raw <= -kLogVarClamp || raw >= kLogVarClamp) d_logvar(r, c) = 0.0;
    }
  }
  accumulate(g.mean_head, d_mean, f.enc_act[3]);
  accumulate(g.logvar_head, d_logvar, f.enc_act[3]);
  upstream = p.mean_head.weights.transpose() * d_mean + p.logvar_head.weights.transpose() * d_logvar;

  for (std::size_t i = 3; i-- > 0;) {
    delta = relu_backward(upstream, f.enc_pre[i]);
    accumulate(g.encoder[i], delta, f.enc_act[i]);
    if (i > 0) upstream = p.encoder[i].weights.transpose() * delta;
  }
  return out;
}

VaeModel train_vae(std::span<const Spectrum> class_spectra, const TrainConfig& cfg) {
  if (class_spectra.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "training needs at least two spectra");
  }
  if (cfg.epochs < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1 and learning rate > 0");
  }
  std::vector<Spectrum> clipped;
  clipped.reserve(class_spectra.size());
  for (const auto& s : class_spectra) clipped.push_back(clip_to_unit(s).spectrum);
  const Eigen::MatrixXd batch = spectra_as_columns(clipped);

  const auto arch = build_architecture(static_cast<std::size_t>(batch.rows()), cfg.latent_dim);
  VaeModel model = init_vae(arch, derive_seed(cfg.seed, 0));
  Rng noise_rng = make_rng(cfg.seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd theta = model.params.flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  Eigen::MatrixXd noise(batch.cols(), static_cast<Eigen::Index>(arch.latent_dim));
  model.training_log.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index r = 0; r < noise.rows(); ++r) {
      for (Eigen::Index c = 0; c < noise.cols(); ++c) noise(r, c) = normal(noise_rng);
    }
    ElboGradients eg;
    try {
      eg = elbo_gradients(model, batch, noise, cfg.kl_weight);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteLoss) throw;
      throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch));
    }
    model.training_log.push_back(eg.terms.loss);

    const Eigen::VectorXd grad = eg.grad.flatten();
    const double t = static_cast<double>(epoch + 1);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double m_corr = 1.0 / (1.0 - std::pow(cfg.beta1, t));
    const double v_corr = 1.0 / (1.0 - std::pow(cfg.beta2, t));
    theta.array() -= cfg.learning_rate * (m.array() * m_corr) /
                     ((v.array() * v_corr).sqrt() + cfg.epsilon);
    if (!theta.allFinite()) {
      throw Error(ErrorCode::NonFiniteLoss, "parameters diverged at epoch " + std::to_string(epoch));
    }
    model.params.assign(theta);
  }
  return model;
}

Spectrum decode(const VaeModel& model, std::span<const double> z) {
  const auto& arch = model.architecture;
  if (z.size() != arch.latent_dim) {
    throw Error(ErrorCode::DimensionMismatch, "latent vector must have K entries");
  }
  Eigen::MatrixXd h = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < 3; ++i) h = relu(affine(model.params.decoder[i], h));
  const Eigen::MatrixXd out = sigmoid(affine(model.params.decoder[3], h));

  // Keep the open-interval guarantee when the sigmoid saturates in floating point.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  Spectrum s;
  s.values.resize(arch.input_dim);
  for (std::size_t b = 0; b < arch.input_dim; ++b) {
    s.values[b] = std::clamp(out(static_cast<Eigen::Index>(b), 0), lo, hi);
  }
  return s;
}

void save_model(const VaeModel& model, std::ostream& out) {
  const auto& a = model.architecture;
  out << kFormatMagic << ' ' << kFormatVersion << '\n';
  out << "input_dim " << a.input_dim << '\n';
  out << "latent_dim " << a.latent_dim << '\n';
  out << "encoder_hidden " << a.encoder_hidden[0] << ' ' << a.encoder_hidden[1] << ' '
      << a.encoder_hidden[2] << '\n';
  out << "decoder_hidden " << a.decoder_hidden[0] << ' ' << a.decoder_hidden[1] << ' '
      << a.decoder_hidden[2] << '\n';
  const Eigen::VectorXd flat = model.params.flatten();
  out << "parameters " << flat.size() << '\n';
  for (Eigen::Index i = 0; i < flat.size(); ++i) write_hex(out, flat(i));
  out << "training_log " << model.training_log.size() << '\n';
  for (double v : model.training_log) write_hex(out, v);
  if (!out) throw Error(ErrorCode::IoError, "failed to write model");
}

VaeModel load_model(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kFormatMagic) {
    throw Error(ErrorCode::ParseError, "not a specaug VAE model file");
  }
  if (version != kFormatVersion) {
    throw Error(ErrorCode::ParseError, "unsupported model format version " + std::to_string(version));
  }
  const auto input_dim = read_field<std::size_t>(in, "input_dim");
  const auto latent_dim = read_field<std::size_t>(in, "latent_dim");
  VaeArchitecture stored;
  stored.input_dim = input_dim;
  stored.latent_dim = latent_dim;
  stored.encoder_hidden[0] = read_field<std::size_t>(in, "encoder_hidden");
  in >> stored.encoder_hidden[1] >> stored.encoder_hidden[2];
  stored.decoder_hidden[0] = read_field<std::size_t>(in, "decoder_hidden");
  in >> stored.decoder_hidden[1] >> stored.decoder_hidden[2];
  if (!in) throw Error(ErrorCode::ParseError, "truncated model header");

  const auto arch = build_architecture(input_dim, latent_dim);
  if (arch != stored) {
    throw Error(ErrorCode::ParseError, "stored layer widths do not match the architecture formulas");
  }
  VaeModel model{arch, VaeParameters::zeros(arch), {}};
  const auto count = read_field<std::size_t>(in, "parameters");
  if (count != model.params.size()) {
    throw Error(ErrorCode::ParseError, "parameter count does not match the architecture");
  }
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) flat(static_cast<Eigen::Index>(i)) = read_hex(in);
  model.params.assign(flat);
  const auto log_size = read_field<std::size_t>(in, "training_log");
  model.training_log.reserve(log_size);
  for (std::size_t i = 0; i < log_size; ++i) model.training_log.push_back(read_hex(in));
  return model;
}

}  // namespace specaug
