#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "derc/autoencoder.hpp"
#include "derc/clustering.hpp"
#include "derc/dataset.hpp"
#include "derc/error.hpp"
#include "derc/neural.hpp"
#include "derc/text.hpp"

namespace derc {

/// Hyperparameters of the joint reconstruction + clustering refinement.
///
/// One iteration is one mini-batch step; Q and P are refreshed on the full
/// dataset whenever the iteration counter (starting at 0) is a multiple of
/// `update_interval`. `stop_fraction` > 0 enables an early stop when fewer
/// than that fraction of hard assignments change between two refreshes.
struct DercConfig {
  double beta = 0.75;
  std::size_t update_interval = 10;
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t k = 2;
  std::uint64_t seed = 0;
  double stop_fraction = 0.0;
};

inline void validate(const DercConfig& cfg) {
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("beta must be >= 0");
  if (cfg.update_interval == 0) throw ConfigError("update interval T must be >= 1");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (cfg.k == 0) throw ConfigError("k must be >= 1");
}

struct ClusterState {
  Matrix centroids;  // k x latent
  Matrix q;          // n x k
  Matrix p;          // n x k
  Vector frequencies;
};

struct Prediction {
  std::vector<int> cluster_ids;
};

struct DercHistoryRow {
  std::size_t iteration = 0;
  double cluster_loss = 0.0;
  double reconstruction_loss = 0.0;
  double total_loss = 0.0;
};

struct DercResult {
  nn::NetworkParams params;
  ClusterState state;
  Prediction prediction;
  std::vector<DercHistoryRow> history;
  std::size_t iterations = 0;
  bool stopped_early = false;
};

struct DercBatchLoss {
  double cluster = 0.0;         // batch mean of the KL term
  double reconstruction = 0.0;  // element-mean squared error
  double total = 0.0;           // cluster + beta * reconstruction
  nn::NetworkGrads grads;
  Matrix centroid_grad;
};

/// L = L_cluster + beta L_rec on one batch, both terms averaged over the
/// batch rows, with gradients for the encoder (both terms), the decoder
/// (beta L_rec) and the centroids (L_cluster). `targets` holds the rows of
/// P for the batch samples.
inline DercBatchLoss derc_batch_loss(const nn::NetworkParams& params, const Matrix& centroids,
                                     const Matrix& batch, const Matrix& targets, double beta) {
  const auto enc = nn::forward(params.encoder, batch);
  const Matrix& latent = enc.output();
  const auto dec = nn::forward(params.decoder, latent);
  const auto rec = nn::mse_loss(batch, dec.output());
  const auto cl = cluster_kl_loss(targets, latent, centroids);
  const double inv_bs = 1.0 / static_cast<double>(batch.rows());

  DercBatchLoss out;
  out.cluster = cl.value * inv_bs;
  out.reconstruction = rec.value;
  out.total = out.cluster + beta * out.reconstruction;

  auto dec_back = nn::backward(params.decoder, dec, beta * rec.grad);
  const Matrix latent_grad = dec_back.input_grad + inv_bs * cl.latent_grad;
  auto enc_back = nn::backward(params.encoder, enc, latent_grad, false);
  out.grads.encoder = std::move(enc_back.grads);
  out.grads.decoder = std::move(dec_back.grads);
  out.centroid_grad = inv_bs * cl.centroid_grad;
  return out;
}

// Q, P and f on the full dataset for the current parameters.
inline ClusterState refresh_state(const nn::NetworkParams& params, const Matrix& centroids,
                                  const Matrix& data) {
  ClusterState s;
  s.centroids = centroids;
  s.q = soft_assign(encode(params, data), centroids);
  s.frequencies = s.q.colwise().sum().transpose();
  s.p = target_distribution(s.q);
  return s;
}

/// End-to-end refinement of a pretrained autoencoder and its K-means
/// centroids (the VAE log-variance head, if any, is left untouched).
/// Mini-batches are reshuffled every epoch with the config seed; the last
/// partial batch is kept. The final prediction is argmax_j q_ij over the
/// full dataset.
inline DercResult train_derc(const Matrix& data, const nn::NetworkParams& pretrained,
                             const Matrix& initial_centroids, const DercConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<std::size_t>(data.rows());
  if (cfg.k > n)
    throw ArgumentError("train_derc: k = " + std::to_string(cfg.k) + " exceeds sample count " +
                        std::to_string(n));
  if (static_cast<std::size_t>(initial_centroids.rows()) != cfg.k)
    throw ArgumentError("train_derc: expected " + std::to_string(cfg.k) + " centroids, got " +
                        std::to_string(initial_centroids.rows()));
  if (initial_centroids.cols() != pretrained.latent_dim())
    throw ArgumentError("train_derc: centroid width does not match the latent dimension");
  if (data.cols() != pretrained.input_dim())
    throw ArgumentError("train_derc: data has " + std::to_string(data.cols()) +
                        " features, model expects " + std::to_string(pretrained.input_dim()));

  DercResult result;
  result.params = pretrained;
  Matrix centroids = initial_centroids;
  nn::SgdMomentum opt{cfg.lr, cfg.momentum, {}};
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Matrix p;
  std::vector<int> last_labels;
  std::size_t ite = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !result.stopped_early; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++ite) {
      if (ite % cfg.update_interval == 0) {
        const ClusterState state = refresh_state(result.params, centroids, data);
        p = state.p;
        auto labels = argmax_rows(state.q);
        if (cfg.stop_fraction > 0.0 && !last_labels.empty()) {
          std::size_t changed = 0;
          for (std::size_t i = 0; i < n; ++i) changed += labels[i] != last_labels[i];
          if (static_cast<double>(changed) < cfg.stop_fraction * static_cast<double>(n)) {
            result.stopped_early = true;
            break;
          }
        }
        last_labels = std::move(labels);
      }
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const auto rows = std::span(order).subspan(start, stop - start);
      const Matrix batch = detail::gather_rows(data, rows);
      const Matrix targets = detail::gather_rows(p, rows);

      auto loss = derc_batch_loss(result.params, centroids, batch, targets, cfg.beta);
      if (!std::isfinite(loss.total))
        throw NumericError("train_derc: non-finite loss at iteration " + std::to_string(ite));
      std::size_t slot = nn::sgd_layers_step(opt, result.params.encoder, loss.grads.encoder, 0);
      slot = nn::sgd_layers_step(opt, result.params.decoder, loss.grads.decoder, slot);
      opt.update(slot, centroids, loss.centroid_grad);
      result.history.push_back({ite, loss.cluster, loss.reconstruction, loss.total});
    }
  }
  result.iterations = ite;
  result.state = refresh_state(result.params, centroids, data);
  result.prediction.cluster_ids = argmax_rows(result.state.q);
  return result;
}

/// c_i = argmax_j q_ij for the encoded data.
inline Prediction predict(const nn::NetworkParams& params, const Matrix& centroids,
                          const Matrix& data) {
  return {argmax_rows(soft_assign(encode(params, data), centroids))};
}

inline std::string derc_history_csv(const std::vector<DercHistoryRow>& history) {
  std::string out = "iteration,cluster_loss,reconstruction_loss,total_loss\n";
  for (const auto& r : history)
    out += std::to_string(r.iteration) + "," + text::format_double(r.cluster_loss) + "," +
           text::format_double(r.reconstruction_loss) + "," + text::format_double(r.total_loss) +
           "\n";
  return out;
}

// sample_id followed by one column per matrix column.
inline std::string matrix_csv(const Matrix& m, const std::vector<std::string>& sample_ids,
                              const std::string& prefix) {
  std::string out = "sample_id";
  for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + prefix + std::to_string(j);
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += sample_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + text::format_double(m(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace derc
