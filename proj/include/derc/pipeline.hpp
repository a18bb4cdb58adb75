#pragma once

#include <optional>
#include <string>
#include <vector>

#include "derc/autoencoder.hpp"
#include "derc/config.hpp"
#include "derc/dataset.hpp"
#include "derc/kmeans.hpp"
#include "derc/metrics.hpp"
#include "derc/prescreen.hpp"
#include "derc/trainer.hpp"

namespace derc {

struct PipelineResult {
  std::optional<PrescreenReport> prescreen;
  std::size_t n_features_in = 0;
  std::size_t n_features_used = 0;
  PretrainResult ae;
  std::optional<PretrainResult> vae;
  DercResult derc;
  MetricsReport raw_kmeans;
  MetricsReport ae_kmeans;
  std::optional<MetricsReport> vae_kmeans;
  MetricsReport derc_metrics;
  double ae_reconstruction = 0.0;
  std::optional<double> vae_reconstruction;

  [[nodiscard]] std::vector<MetricsReport> rows() const {
    std::vector<MetricsReport> out{raw_kmeans, ae_kmeans};
    if (vae_kmeans) out.push_back(*vae_kmeans);
    out.push_back(derc_metrics);
    return out;
  }
};

/// Prescreen -> AE pretrain -> K-means init -> DERC refinement -> metrics,
/// plus the input-space and (optionally) VAE K-means baselines. `cfg` must
/// already carry derived stage seeds.
inline PipelineResult run_pipeline(const Dataset& input, const RunConfig& cfg) {
  if (!input.labels) throw ArgumentError("run_pipeline: labelled data required for evaluation");
  PipelineResult out;
  out.n_features_in = input.n_features();
  Dataset data = input;
  if (cfg.run_prescreen) {
    out.prescreen = discriminative_filter(input, cfg.prescreen);
    if (out.prescreen->kept_indices.empty())
      throw ValidationError("prescreen removed every feature");
    data = select_features(input, out.prescreen->kept_indices);
  }
  out.n_features_used = data.n_features();
  const Labels& y = *data.labels;

  KmeansOptions km = cfg.kmeans;
  km.k = cfg.derc.k;
  out.raw_kmeans = evaluate_clustering("Input Data + K-means", y,
                                       kmeans_fit(data.values, km).assignments, cfg.positive_label);

  out.ae = pretrain_ae(data.values, cfg.ae, cfg.pretrain);
  std::mt19937_64 eval_rng(stage_seed(cfg.seed, Stage::pretrain) ^ 0x5eedULL);
  out.ae_reconstruction = reconstruction_loss(out.ae.params, data.values, eval_rng).mean_latent;
  const Matrix latent = encode(out.ae.params, data.values);
  const auto init = kmeans_fit(latent, km);
  out.ae_kmeans = evaluate_clustering("AE + K-means", y, init.assignments, cfg.positive_label);

  if (cfg.run_vae) {
    out.vae = pretrain_vae(data.values, cfg.ae, cfg.vae_pretrain);
    out.vae_reconstruction = reconstruction_loss(out.vae->params, data.values, eval_rng).sampled_latent;
    const auto vae_init = kmeans_fit(encode(out.vae->params, data.values), km);
    out.vae_kmeans = evaluate_clustering("VAE + K-means", y, vae_init.assignments, cfg.positive_label);
  }

  out.derc = train_derc(data.values, out.ae.params, init.centroids, cfg.derc);
  out.derc_metrics = evaluate_clustering("DERC (beta=" + text::format_double(cfg.derc.beta) + ")", y,
                                         out.derc.prediction.cluster_ids, cfg.positive_label);
  return out;
}

inline std::string pipeline_report_csv(const PipelineResult& r) {
  std::string out = kMetricsCsvHeader;
  for (const auto& row : r.rows()) out += metrics_csv_row(row);
  return out;
}

inline std::string pipeline_report_text(const PipelineResult& r, const RunConfig& cfg) {
  std::string out = "features: " + std::to_string(r.n_features_in) + " in, " +
                    std::to_string(r.n_features_used) + " used\n";
  out += "AE reconstruction loss: " + text::format_double(r.ae_reconstruction) + "\n";
  if (r.vae_reconstruction)
    out += "VAE reconstruction loss: " + text::format_double(*r.vae_reconstruction) + "\n";
  out += "DERC iterations: " + std::to_string(r.derc.iterations) + "\n\n";
  for (const auto& row : r.rows()) out += metrics_text(row) + "\n";
  out += "config:\n" + describe(cfg);
  return out;
}

}  // namespace derc
