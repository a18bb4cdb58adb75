#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "derc/dataset.hpp"
#include "derc/error.hpp"
#include "derc/neural.hpp"
#include "derc/text.hpp"

namespace derc {

/// Stacked autoencoder architecture.
///
/// `layer_dims` lists the encoder widths after the input, ending with the
/// latent width; the decoder mirrors them. Hidden layers use
/// `hidden_activation`, the latent layer `latent_activation` (the VAE mean
/// and log-variance heads are always linear) and the reconstruction layer
/// `output_activation`.
struct AeSpec {
  std::vector<std::size_t> layer_dims{2000, 500, 70, 10};
  nn::Activation hidden_activation = nn::Activation::relu;
  nn::Activation latent_activation = nn::Activation::relu;
  nn::Activation output_activation = nn::Activation::sigmoid;

  [[nodiscard]] std::size_t latent_dim() const { return layer_dims.back(); }
};

struct PretrainConfig {
  std::size_t epochs = 300;
  double lr = 1.0;
  double momentum = 0.0;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  double vae_recon_weight = 0.8;
  double validation_fraction = 0.0;
};

inline void validate(const AeSpec& spec, std::size_t input_dim) {
  if (spec.layer_dims.empty()) throw ConfigError("AeSpec: no layers");
  for (auto w : spec.layer_dims)
    if (w == 0) throw ConfigError("AeSpec: zero-width layer");
  if (spec.latent_dim() >= input_dim)
    throw ConfigError("latent dimension " + std::to_string(spec.latent_dim()) +
                      " must be smaller than input dimension " + std::to_string(input_dim));
}

inline void validate(const PretrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0,1)");
  if (!(cfg.vae_recon_weight >= 0.0 && cfg.vae_recon_weight <= 1.0))
    throw ConfigError("vae_recon_weight must lie in [0,1]");
}

/// Freshly initialised network: weights uniform in [-l, l], biases zero.
inline nn::NetworkParams build_autoencoder(const AeSpec& spec, std::size_t input_dim,
                                           bool variational, std::mt19937_64& rng) {
  validate(spec, input_dim);
  std::vector<Eigen::Index> dims{static_cast<Eigen::Index>(input_dim)};
  for (auto w : spec.layer_dims) dims.push_back(static_cast<Eigen::Index>(w));
  const std::size_t depth = spec.layer_dims.size();

  nn::NetworkParams params;
  for (std::size_t i = 0; i < depth; ++i) {
    const bool last = i + 1 == depth;
    const auto act = !last ? spec.hidden_activation
                           : (variational ? nn::Activation::linear : spec.latent_activation);
    params.encoder.push_back(nn::make_dense(dims[i], dims[i + 1], act, rng));
  }
  if (variational)
    params.log_var_head =
        nn::make_dense(dims[depth - 1], dims[depth], nn::Activation::linear, rng);
  for (std::size_t i = depth; i-- > 0;) {
    const auto act = i == 0 ? spec.output_activation : spec.hidden_activation;
    params.decoder.push_back(nn::make_dense(dims[i + 1], dims[i], act, rng));
  }
  return params;
}

/// Latent map Z = f(X). For a VAE this is the mean vector (no sampling).
inline Matrix encode(const nn::NetworkParams& params, const Matrix& data) {
  if (data.cols() != params.input_dim())
    throw ArgumentError("encode: data has " + std::to_string(data.cols()) +
                        " features, model expects " + std::to_string(params.input_dim()));
  return nn::apply(params.encoder, data);
}

inline Matrix decode(const nn::NetworkParams& params, const Matrix& latent) {
  return nn::apply(params.decoder, latent);
}

/// KL divergence of N(mu, exp(log_var)) from N(0, I):
///   -1/2 sum(1 + log_var - mu^2 - exp(log_var))   (always >= 0).
inline double vae_kl(const Eigen::Ref<const Vector>& mu, const Eigen::Ref<const Vector>& log_var) {
  if (mu.size() != log_var.size()) throw ArgumentError("vae_kl: length mismatch");
  return -0.5 * (1.0 + log_var.array() - mu.array().square() - log_var.array().exp()).sum();
}

struct VaeLatent {
  Matrix mu;
  Matrix log_var;
  Matrix epsilon;
  Matrix z;  // mu + exp(log_var / 2) * epsilon
};

inline Matrix reparameterize(const Matrix& mu, const Matrix& log_var, const Matrix& epsilon) {
  return mu.array() + (0.5 * log_var.array()).exp() * epsilon.array();
}

inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

struct BatchLoss {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;  // mean per-sample KL; 0 for plain autoencoders
  nn::NetworkGrads grads;
};

/// Reconstruction MSE of a plain autoencoder and its gradient.
inline BatchLoss ae_batch_loss(const nn::NetworkParams& params, const Matrix& batch) {
  const auto enc = nn::forward(params.encoder, batch);
  const auto dec = nn::forward(params.decoder, enc.output());
  const auto mse = nn::mse_loss(batch, dec.output());
  BatchLoss out;
  out.total = out.reconstruction = mse.value;
  auto dec_back = nn::backward(params.decoder, dec, mse.grad);
  auto enc_back = nn::backward(params.encoder, enc, dec_back.input_grad, false);
  out.grads.decoder = std::move(dec_back.grads);
  out.grads.encoder = std::move(enc_back.grads);
  return out;
}

/// recon_weight * MSE + (1 - recon_weight) * mean KL for a VAE, using the
/// supplied standard-normal draws `epsilon` (bs x latent).
inline BatchLoss vae_batch_loss(const nn::NetworkParams& params, const Matrix& batch,
                                const Matrix& epsilon, double recon_weight) {
  if (!params.variational()) throw ArgumentError("vae_batch_loss: network has no log-variance head");
  const std::span<const nn::DenseLayer> encoder(params.encoder);
  const auto trunk_layers = encoder.first(encoder.size() - 1);
  const auto mu_layer = encoder.last(1);
  const std::span<const nn::DenseLayer> lv_layer(&*params.log_var_head, 1);

  nn::ForwardCache trunk;
  const Matrix* hidden = &batch;
  if (!trunk_layers.empty()) {
    trunk = nn::forward(trunk_layers, batch);
    hidden = &trunk.output();
  }
  const auto mu_cache = nn::forward(mu_layer, *hidden);
  const auto lv_cache = nn::forward(lv_layer, *hidden);
  const Matrix& mu = mu_cache.output();
  const Matrix& log_var = lv_cache.output();
  if (epsilon.rows() != mu.rows() || epsilon.cols() != mu.cols())
    throw ArgumentError("vae_batch_loss: epsilon shape mismatch");
  const Matrix sigma = (0.5 * log_var.array()).exp();
  const Matrix z = mu.array() + sigma.array() * epsilon.array();

  const auto dec = nn::forward(params.decoder, z);
  const auto mse = nn::mse_loss(batch, dec.output());
  const double bs = static_cast<double>(batch.rows());
  double kl_sum = 0.0;
  for (Eigen::Index i = 0; i < mu.rows(); ++i)
    kl_sum += vae_kl(mu.row(i).transpose(), log_var.row(i).transpose());
  const double kl_weight = 1.0 - recon_weight;

  BatchLoss out;
  out.reconstruction = mse.value;
  out.kl = kl_sum / bs;
  out.total = recon_weight * mse.value + kl_weight * out.kl;

  auto dec_back = nn::backward(params.decoder, dec, recon_weight * mse.grad);
  const Matrix& dz = dec_back.input_grad;
  const Matrix d_mu = dz + (kl_weight / bs) * mu;
  const Matrix d_lv = (dz.array() * epsilon.array() * 0.5 * sigma.array() +
                       (kl_weight / bs) * 0.5 * (log_var.array().exp() - 1.0))
                          .matrix();
  auto mu_back = nn::backward(mu_layer, mu_cache, d_mu, !trunk_layers.empty());
  auto lv_back = nn::backward(lv_layer, lv_cache, d_lv, !trunk_layers.empty());
  out.grads.decoder = std::move(dec_back.grads);
  if (!trunk_layers.empty()) {
    auto trunk_back =
        nn::backward(trunk_layers, trunk, mu_back.input_grad + lv_back.input_grad, false);
    out.grads.encoder = std::move(trunk_back.grads);
  }
  out.grads.encoder.push_back(std::move(mu_back.grads.front()));
  out.grads.log_var_head = std::move(lv_back.grads.front());
  return out;
}

struct ReconstructionLoss {
  double mean_latent = 0.0;     // decoding the encoder output (the VAE mean)
  double sampled_latent = 0.0;  // VAE only: decoding a reparameterised sample
};

/// Whole-set reconstruction error; `rng` drives VAE sampling.
inline ReconstructionLoss reconstruction_loss(const nn::NetworkParams& params, const Matrix& data,
                                              std::mt19937_64& rng) {
  ReconstructionLoss out;
  const Matrix z = encode(params, data);
  out.mean_latent = nn::mse_loss(data, decode(params, z)).value;
  out.sampled_latent = out.mean_latent;
  if (params.variational()) {
    const std::span<const nn::DenseLayer> encoder(params.encoder);
    const Matrix hidden = encoder.size() > 1 ? nn::apply(encoder.first(encoder.size() - 1), data)
                                             : data;
    const Matrix log_var = nn::apply(std::span<const nn::DenseLayer>(&*params.log_var_head, 1),
                                     hidden);
    const Matrix eps = standard_normal(z.rows(), z.cols(), rng);
    out.sampled_latent = nn::mse_loss(data, decode(params, reparameterize(z, log_var, eps))).value;
  }
  return out;
}

struct PretrainEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;       // optimised objective, sample-weighted over the epoch
  double train_reconstruction = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // reconstruction on held-out rows
};

struct PretrainResult {
  nn::NetworkParams params;
  std::vector<PretrainEpoch> history;
  std::vector<std::size_t> validation_rows;
};

namespace detail {

inline Matrix gather_rows(const Matrix& data, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

inline void check_unit_range(const Matrix& data) {
  if (data.size() == 0) throw ArgumentError("pretrain: empty dataset");
  if (!data.allFinite() || data.minCoeff() < 0.0 || data.maxCoeff() > 1.0)
    throw ValidationError("pretrain: data must lie in [0,1]");
}

inline PretrainResult pretrain(const Matrix& data, const AeSpec& spec, const PretrainConfig& cfg,
                               bool variational) {
  validate(cfg);
  check_unit_range(data);
  const auto n = static_cast<std::size_t>(data.rows());
  std::mt19937_64 rng(cfg.seed);

  PretrainResult result;
  result.params = build_autoencoder(spec, static_cast<std::size_t>(data.cols()), variational, rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
  if (n_val > 0) {
    std::shuffle(order.begin(), order.end(), rng);
    result.validation_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(result.validation_rows.begin(), result.validation_rows.end());
  }
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(train.begin(), train.end());
  if (train.empty()) throw ConfigError("pretrain: no training rows left after validation split");
  const Matrix val_data = gather_rows(data, result.validation_rows);

  nn::SgdMomentum opt{cfg.lr, cfg.momentum, {}};
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double objective = 0.0, recon = 0.0;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train.size(), start + cfg.batch_size);
      const Matrix batch = gather_rows(data, std::span(train).subspan(start, stop - start));
      BatchLoss loss;
      if (variational) {
        const Matrix eps = standard_normal(batch.rows(), static_cast<Eigen::Index>(spec.latent_dim()), rng);
        loss = vae_batch_loss(result.params, batch, eps, cfg.vae_recon_weight);
      } else {
        loss = ae_batch_loss(result.params, batch);
      }
      if (!std::isfinite(loss.total))
        throw NumericError("pretrain: non-finite loss in epoch " + std::to_string(epoch));
      nn::sgd_momentum_step(opt, result.params, loss.grads);
      const double w = static_cast<double>(stop - start);
      objective += w * loss.total;
      recon += w * loss.reconstruction;
    }
    PretrainEpoch row;
    row.epoch = epoch;
    row.train_loss = objective / static_cast<double>(train.size());
    row.train_reconstruction = recon / static_cast<double>(train.size());
    if (n_val > 0)
      row.val_loss = nn::mse_loss(val_data, decode(result.params, encode(result.params, val_data))).value;
    result.history.push_back(row);
  }
  return result;
}

}  // namespace detail

/// Trains the conventional autoencoder on the full stack end to end with
/// mini-batch SGD; rows are reshuffled every epoch and the last partial
/// batch is kept.
inline PretrainResult pretrain_ae(const Matrix& data, const AeSpec& spec,
                                  const PretrainConfig& cfg) {
  return detail::pretrain(data, spec, cfg, false);
}

/// Trains the variational autoencoder with reparameterised sampling.
inline PretrainResult pretrain_vae(const Matrix& data, const AeSpec& spec,
                                   const PretrainConfig& cfg) {
  return detail::pretrain(data, spec, cfg, true);
}

inline std::string history_csv(const std::vector<PretrainEpoch>& history) {
  std::string out = "epoch,train_loss,train_reconstruction,val_loss\n";
  for (const auto& row : history) {
    out += std::to_string(row.epoch) + "," + text::format_double(row.train_loss) + "," +
           text::format_double(row.train_reconstruction) + ",";
    if (!std::isnan(row.val_loss)) out += text::format_double(row.val_loss);
    out += '\n';
  }
  return out;
}

}  // namespace derc
