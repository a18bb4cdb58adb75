#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "derc/autoencoder.hpp"
#include "derc/data_io.hpp"
#include "derc/error.hpp"
#include "derc/kmeans.hpp"
#include "derc/prescreen.hpp"
#include "derc/text.hpp"
#include "derc/trainer.hpp"

namespace derc {

// Stage tags for sub-seed derivation: stage_seed = mix_seed(global, tag).
enum class Stage : std::uint64_t { synth = 1, pretrain = 2, kmeans = 3, derc = 4, vae = 5 };

inline std::uint64_t stage_seed(std::uint64_t global, Stage stage) {
  return mix_seed(global, static_cast<std::uint64_t>(stage));
}

/// Every knob of a pipeline run. Populated from defaults, then a
/// `key = value` config file, then command-line overrides.
struct RunConfig {
  std::uint64_t seed = 7;
  bool run_prescreen = true;
  bool run_vae = false;
  int positive_label = 1;
  PrescreenConfig prescreen;
  AeSpec ae;
  PretrainConfig pretrain;
  PretrainConfig vae_pretrain;
  KmeansOptions kmeans;
  DercConfig derc;
  SynthSpec synth;

  /// Writes the derived per-stage seeds into the stage configs.
  void derive_seeds() {
    synth.seed = stage_seed(seed, Stage::synth);
    pretrain.seed = stage_seed(seed, Stage::pretrain);
    vae_pretrain.seed = stage_seed(seed, Stage::vae);
    kmeans.seed = stage_seed(seed, Stage::kmeans);
    derc.seed = stage_seed(seed, Stage::derc);
  }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  const auto d = text::parse_double(v);
  if (!d) throw ConfigError("config key " + key + ": '" + v + "' is not a number");
  return *d;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto t = text::trim(v);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("config key " + key + ": '" + v + "' is not a non-negative integer");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + ": '" + v + "' is not a boolean");
}

inline std::vector<std::size_t> to_dims(const std::string& key, const std::string& v) {
  std::vector<std::size_t> dims;
  for (auto part : text::split(v, ','))
    dims.push_back(static_cast<std::size_t>(to_uint(key, std::string(text::trim(part)))));
  return dims;
}

}  // namespace detail

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  const std::map<std::string, std::function<void(const std::string&)>> setters{
      {"seed", [&](const std::string& v) { cfg.seed = to_uint(key, v); }},
      {"pipeline.prescreen", [&](const std::string& v) { cfg.run_prescreen = to_bool(key, v); }},
      {"pipeline.vae", [&](const std::string& v) { cfg.run_vae = to_bool(key, v); }},
      {"eval.positive_label", [&](const std::string& v) { cfg.positive_label = static_cast<int>(to_uint(key, v)); }},
      {"prescreen.alpha", [&](const std::string& v) { cfg.prescreen.alpha = to_double(key, v); }},
      {"prescreen.rho_threshold", [&](const std::string& v) { cfg.prescreen.rho_threshold = to_double(key, v); }},
      {"prescreen.normality_alpha", [&](const std::string& v) { cfg.prescreen.normality_alpha = to_double(key, v); }},
      {"ae.layer_dims", [&](const std::string& v) { cfg.ae.layer_dims = to_dims(key, v); }},
      {"ae.latent_dim", [&](const std::string& v) { cfg.ae.layer_dims.back() = to_uint(key, v); }},
      {"ae.hidden_activation", [&](const std::string& v) { cfg.ae.hidden_activation = nn::activation_from_string(v); }},
      {"ae.latent_activation", [&](const std::string& v) { cfg.ae.latent_activation = nn::activation_from_string(v); }},
      {"pretrain.epochs", [&](const std::string& v) { cfg.pretrain.epochs = cfg.vae_pretrain.epochs = to_uint(key, v); }},
      {"pretrain.lr", [&](const std::string& v) { cfg.pretrain.lr = cfg.vae_pretrain.lr = to_double(key, v); }},
      {"pretrain.momentum", [&](const std::string& v) { cfg.pretrain.momentum = cfg.vae_pretrain.momentum = to_double(key, v); }},
      {"pretrain.batch_size", [&](const std::string& v) { cfg.pretrain.batch_size = cfg.vae_pretrain.batch_size = to_uint(key, v); }},
      {"pretrain.vae_recon_weight", [&](const std::string& v) { cfg.pretrain.vae_recon_weight = cfg.vae_pretrain.vae_recon_weight = to_double(key, v); }},
      {"pretrain.validation_fraction", [&](const std::string& v) { cfg.pretrain.validation_fraction = cfg.vae_pretrain.validation_fraction = to_double(key, v); }},
      {"kmeans.restarts", [&](const std::string& v) { cfg.kmeans.restarts = to_uint(key, v); }},
      {"kmeans.max_iter", [&](const std::string& v) { cfg.kmeans.max_iter = to_uint(key, v); }},
      {"kmeans.tol", [&](const std::string& v) { cfg.kmeans.tol = to_double(key, v); }},
      {"derc.beta", [&](const std::string& v) { cfg.derc.beta = to_double(key, v); }},
      {"derc.update_interval", [&](const std::string& v) { cfg.derc.update_interval = to_uint(key, v); }},
      {"derc.epochs", [&](const std::string& v) { cfg.derc.epochs = to_uint(key, v); }},
      {"derc.batch_size", [&](const std::string& v) { cfg.derc.batch_size = to_uint(key, v); }},
      {"derc.lr", [&](const std::string& v) { cfg.derc.lr = to_double(key, v); }},
      {"derc.momentum", [&](const std::string& v) { cfg.derc.momentum = to_double(key, v); }},
      {"derc.k", [&](const std::string& v) { cfg.derc.k = cfg.kmeans.k = to_uint(key, v); }},
      {"derc.stop_fraction", [&](const std::string& v) { cfg.derc.stop_fraction = to_double(key, v); }},
      {"synth.n_samples", [&](const std::string& v) { cfg.synth.n_samples = to_uint(key, v); }},
      {"synth.n_features", [&](const std::string& v) { cfg.synth.n_features = to_uint(key, v); }},
      {"synth.n_informative", [&](const std::string& v) { cfg.synth.n_informative = to_uint(key, v); }},
      {"synth.class_ratio", [&](const std::string& v) { cfg.synth.class_ratio = to_double(key, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key: " + key);
  it->second(std::string(text::trim(value)));
}

/// Parses `key = value` lines; '#' starts a comment.
inline void apply_config_text(RunConfig& cfg, std::string_view content, const std::string& source) {
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    apply_setting(cfg, std::string(text::trim(line.substr(0, eq))),
                  std::string(text::trim(line.substr(eq + 1))));
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  apply_config_text(cfg, text::read_file(path), path);
}

// Canonical dump of every setting; hashed into stage manifests.
inline std::string describe(const RunConfig& c) {
  using text::format_double;
  std::string dims;
  for (std::size_t i = 0; i < c.ae.layer_dims.size(); ++i)
    dims += (i ? "," : "") + std::to_string(c.ae.layer_dims[i]);
  std::string out;
  auto put = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  put("seed", std::to_string(c.seed));
  put("pipeline.prescreen", c.run_prescreen ? "true" : "false");
  put("pipeline.vae", c.run_vae ? "true" : "false");
  put("eval.positive_label", std::to_string(c.positive_label));
  put("prescreen.alpha", format_double(c.prescreen.alpha));
  put("prescreen.rho_threshold", format_double(c.prescreen.rho_threshold));
  put("prescreen.normality_alpha", format_double(c.prescreen.normality_alpha));
  put("ae.layer_dims", dims);
  put("ae.hidden_activation", nn::to_string(c.ae.hidden_activation));
  put("ae.latent_activation", nn::to_string(c.ae.latent_activation));
  put("pretrain.epochs", std::to_string(c.pretrain.epochs));
  put("pretrain.lr", format_double(c.pretrain.lr));
  put("pretrain.momentum", format_double(c.pretrain.momentum));
  put("pretrain.batch_size", std::to_string(c.pretrain.batch_size));
  put("pretrain.vae_recon_weight", format_double(c.pretrain.vae_recon_weight));
  put("pretrain.validation_fraction", format_double(c.pretrain.validation_fraction));
  put("kmeans.restarts", std::to_string(c.kmeans.restarts));
  put("kmeans.max_iter", std::to_string(c.kmeans.max_iter));
  put("kmeans.tol", format_double(c.kmeans.tol));
  put("derc.beta", format_double(c.derc.beta));
  put("derc.update_interval", std::to_string(c.derc.update_interval));
  put("derc.epochs", std::to_string(c.derc.epochs));
  put("derc.batch_size", std::to_string(c.derc.batch_size));
  put("derc.lr", format_double(c.derc.lr));
  put("derc.momentum", format_double(c.derc.momentum));
  put("derc.k", std::to_string(c.derc.k));
  put("derc.stop_fraction", format_double(c.derc.stop_fraction));
  put("synth.n_samples", std::to_string(c.synth.n_samples));
  put("synth.n_features", std::to_string(c.synth.n_features));
  put("synth.n_informative", std::to_string(c.synth.n_informative));
  put("synth.class_ratio", format_double(c.synth.class_ratio));
  return out;
}

}  // namespace derc
