// Command-line front end for the deep embedded refined clustering pipeline.
//
// Exit codes: 0 success, 1 usage, 2 validation (bad input, config or
// model file), 3 numeric failure during training.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "derc.hpp"

namespace {

using namespace derc;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta, lr, momentum;
  std::optional<std::size_t> epochs, batch_size, restarts, latent_dim;
  std::optional<int> positive_label;
};

// Defaults, then the config file, then explicit flags.
RunConfig resolve_config(const CommonOptions& o, bool pretrain_stage) {
  RunConfig cfg;
  if (!o.config_path.empty()) load_config_file(cfg, o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.beta) cfg.derc.beta = *o.beta;
  if (o.positive_label) cfg.positive_label = *o.positive_label;
  if (o.restarts) cfg.kmeans.restarts = *o.restarts;
  if (o.latent_dim) cfg.ae.layer_dims.back() = *o.latent_dim;
  // Optimiser flags address the stage being run.
  if (pretrain_stage) {
    if (o.epochs) cfg.pretrain.epochs = cfg.vae_pretrain.epochs = *o.epochs;
    if (o.batch_size) cfg.pretrain.batch_size = cfg.vae_pretrain.batch_size = *o.batch_size;
    if (o.lr) cfg.pretrain.lr = cfg.vae_pretrain.lr = *o.lr;
    if (o.momentum) cfg.pretrain.momentum = cfg.vae_pretrain.momentum = *o.momentum;
  } else {
    if (o.epochs) cfg.derc.epochs = *o.epochs;
    if (o.batch_size) cfg.derc.batch_size = *o.batch_size;
    if (o.lr) cfg.derc.lr = *o.lr;
    if (o.momentum) cfg.derc.momentum = *o.momentum;
  }
  cfg.derive_seeds();
  return cfg;
}

bool is_series_matrix(const std::string& path) {
  return text::read_file(path).find("series_matrix_table_begin") != std::string::npos;
}

std::vector<std::string> read_id_list(const std::string& path) {
  std::vector<std::string> ids;
  for (auto line : text::split(text::read_file(path), '\n'))
    if (const auto t = text::trim(line); !t.empty()) ids.emplace_back(t);
  return ids;
}

Dataset select_by_ids(const Dataset& data, const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < data.feature_ids.size(); ++j) index[data.feature_ids[j]] = j;
  std::vector<std::size_t> cols;
  for (const auto& id : ids) {
    const auto it = index.find(id);
    if (it == index.end()) throw ValidationError("feature " + id + " is missing from the input");
    cols.push_back(it->second);
  }
  return select_features(data, cols);
}

// Reads a labels source: either a two-column sample_id,label file or a
// dataset CSV with a trailing label column.
std::map<std::string, int> read_label_map(const std::string& path) {
  const std::string content = text::read_file(path);
  const auto header = text::trim(std::string_view(content).substr(0, content.find('\n')));
  std::map<std::string, int> out;
  if (header == "sample_id,label") {
    Dataset probe;
    for (auto line : text::split(content, '\n')) {
      const auto t = text::trim(line);
      if (t.empty() || t == header) continue;
      probe.sample_ids.emplace_back(text::split(t, ',').front());
    }
    attach_labels(probe, path);
    for (std::size_t i = 0; i < probe.sample_ids.size(); ++i)
      out[probe.sample_ids[i]] = (*probe.labels)[i];
    return out;
  }
  const Dataset d = load_csv(path, true);
  for (std::size_t i = 0; i < d.n_samples(); ++i) out[d.sample_ids[i]] = (*d.labels)[i];
  return out;
}

struct InputOptions {
  std::string input;
  std::string labels;
  std::string features;
};

Dataset load_input(const InputOptions& in, bool need_labels) {
  Dataset data;
  if (is_series_matrix(in.input)) {
    data = load_series_matrix(in.input);
  } else {
    data = load_csv(in.input, need_labels && in.labels.empty() ? true
                                                              : csv_has_label_column(in.input));
  }
  for (const auto& id : data.dropped_feature_ids)
    std::cerr << "note: dropped feature " << id << " (no observed values)\n";
  if (!in.labels.empty()) attach_labels(data, in.labels);
  if (need_labels && !data.labels)
    throw ValidationError("class labels are required: supply a 'label' column or --labels");
  if (!in.features.empty()) data = select_by_ids(data, read_id_list(in.features));
  return data;
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--input,-i", in.input, "Dataset (CSV or GEO series matrix)")->required();
  cmd->add_option("--labels", in.labels, "sample_id,label file attached to the input");
  cmd->add_option("--features", in.features, "Keep only the feature ids listed in this file");
}

void write_manifest(const std::string& output, const std::string& stage,
                    const std::vector<std::string>& inputs, const RunConfig& cfg) {
  std::string m = "stage = " + stage + "\n";
  m += "format_version = " + std::to_string(kModelVersion) + "\n";
  for (const auto& in : inputs)
    m += "input " + std::filesystem::path(in).filename().string() + " = " +
         text::hex64(text::fnv1a(text::read_file(in))) + "\n";
  m += "config = " + text::hex64(text::fnv1a(describe(cfg))) + "\n";
  text::write_file(output + ".manifest", m);
}

void check_width(const nn::NetworkParams& params, const Dataset& data) {
  if (static_cast<std::size_t>(params.input_dim()) != data.n_features())
    throw ValidationError("feature count mismatch: model expects " +
                          std::to_string(params.input_dim()) + " features, input has " +
                          std::to_string(data.n_features()));
}

Matrix read_centroids(const std::string& path) {
  const auto lines = text::split(text::read_file(path), '\n');
  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto t = text::trim(lines[li]);
    if (t.empty()) continue;
    const auto cells = text::split(t, ',');
    auto& row = rows.emplace_back();
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = text::parse_double(cells[c]);
      if (!v) throw ParseError(path + ": bad number at line " + std::to_string(li + 1));
      row.push_back(*v);
    }
    if (row.size() != rows.front().size()) throw ParseError(path + ": ragged centroid rows");
  }
  if (rows.empty()) throw ParseError(path + ": no centroids");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::string centroids_csv(const Matrix& c) {
  std::vector<std::string> ids;
  for (Eigen::Index j = 0; j < c.rows(); ++j) ids.push_back(std::to_string(j));
  auto csv = matrix_csv(c, ids, "z");
  csv.replace(0, std::string("sample_id").size(), "cluster");
  return csv;
}

std::string predictions_csv(const std::vector<std::string>& ids, const std::vector<int>& clusters) {
  std::string out = "sample_id,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "," + std::to_string(clusters[i]) + "\n";
  return out;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--beta", o.beta, "Reconstruction weight in the joint loss");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size");
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--momentum", o.momentum, "Momentum coefficient");
  cmd->add_option("--restarts", o.restarts, "K-means restarts");
  cmd->add_option("--latent-dim", o.latent_dim, "Latent dimension");
  cmd->add_option("--positive-label", o.positive_label, "Label id of the positive (tumour) class");
}

int run(int argc, char** argv) {
  CLI::App app{"Deep embedded refined clustering of methylation profiles"};
  app.require_subcommand(1);
  CommonOptions common;
  InputOptions in;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-class cohort");
  std::string synth_out;
  std::optional<std::size_t> s_n, s_d, s_inf;
  std::optional<double> s_ratio;
  synth->add_option("--out,-o", synth_out, "Output CSV")->required();
  synth->add_option("--n-samples", s_n);
  synth->add_option("--n-features", s_d);
  synth->add_option("--n-informative", s_inf);
  synth->add_option("--class-ratio", s_ratio, "Fraction of samples in class 1");
  add_common(synth, common);

  // prescreen
  auto* pre = app.add_subcommand("prescreen", "Correlation pruning and class-discrimination filter");
  std::string pre_out, pre_report, pre_kept;
  add_input_options(pre, in);
  pre->add_option("--out,-o", pre_out, "Filtered dataset CSV")->required();
  pre->add_option("--report", pre_report, "Per-feature report CSV");
  pre->add_option("--kept", pre_kept, "Kept feature id list");
  add_common(pre, common);

  // pretrain
  auto* pt = app.add_subcommand("pretrain", "Pretrain the autoencoder (ae) or VAE (vae)");
  std::string kind = "ae", pt_out, pt_history;
  add_input_options(pt, in);
  pt->add_option("--kind", kind)->check(CLI::IsMember({"ae", "vae"}));
  pt->add_option("--out,-o", pt_out, "Model file")->required();
  pt->add_option("--history", pt_history, "Loss history CSV");
  add_common(pt, common);

  // cluster-init
  auto* ci = app.add_subcommand("cluster-init", "K-means on the latent space");
  std::string ci_model, ci_out;
  add_input_options(ci, in);
  ci->add_option("--model,-m", ci_model)->required();
  ci->add_option("--out,-o", ci_out, "Centroids CSV")->required();
  add_common(ci, common);

  // train-derc
  auto* td = app.add_subcommand("train-derc", "Joint reconstruction and clustering refinement");
  std::string td_model, td_centroids, td_out, td_pred, td_history, td_q, td_p;
  add_input_options(td, in);
  td->add_option("--model,-m", td_model)->required();
  td->add_option("--centroids,-c", td_centroids)->required();
  td->add_option("--out,-o", td_out, "Refined model file")->required();
  td->add_option("--predictions", td_pred, "sample_id,cluster CSV");
  td->add_option("--history", td_history, "Iteration loss history CSV");
  td->add_option("--export-q", td_q, "Final soft assignments CSV");
  td->add_option("--export-p", td_p, "Final target distribution CSV");
  add_common(td, common);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions against labels");
  std::string ev_pred, ev_labels, ev_out, ev_csv, ev_method = "DERC";
  ev->add_option("--predictions,-p", ev_pred)->required();
  ev->add_option("--labels,-l", ev_labels, "sample_id,label file or labelled dataset CSV")->required();
  ev->add_option("--out,-o", ev_out, "Human-readable report");
  ev->add_option("--csv", ev_csv, "Table row CSV");
  ev->add_option("--method", ev_method);
  add_common(ev, common);

  // export-latent
  auto* ex = app.add_subcommand("export-latent", "Write the encoder output as CSV");
  std::string ex_model, ex_out;
  add_input_options(ex, in);
  ex->add_option("--model,-m", ex_model)->required();
  ex->add_option("--out,-o", ex_out)->required();
  add_common(ex, common);

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run every stage and write the comparison report");
  std::string pl_in, pl_labels, pl_out;
  pl->add_option("--input,-i", pl_in, "Labelled dataset; a synthetic cohort is generated if omitted");
  pl->add_option("--labels", pl_labels);
  pl->add_option("--out,-o", pl_out, "Report prefix (writes .txt and .csv)")->required();
  add_common(pl, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    auto cfg = resolve_config(common, false);
    if (s_n) cfg.synth.n_samples = *s_n;
    if (s_d) cfg.synth.n_features = *s_d;
    if (s_inf) cfg.synth.n_informative = *s_inf;
    if (s_ratio) cfg.synth.class_ratio = *s_ratio;
    save_csv(generate_synthetic(cfg.synth), synth_out);
    write_manifest(synth_out, "synth", {}, cfg);
  } else if (pre->parsed()) {
    const auto cfg = resolve_config(common, false);
    const auto data = load_input(in, true);
    const auto report = discriminative_filter(data, cfg.prescreen);
    save_csv(select_features(data, report.kept_indices), pre_out);
    if (!pre_report.empty()) text::write_file(pre_report, report_csv(data, report));
    if (!pre_kept.empty()) text::write_file(pre_kept, kept_list(report));
    std::cerr << data.n_features() << " features in, " << report.removed_by_correlation.size()
              << " removed by correlation, " << report.removed_by_class_test.size()
              << " removed by class test, " << report.kept_feature_ids.size() << " kept\n";
    write_manifest(pre_out, "prescreen", {in.input}, cfg);
  } else if (pt->parsed()) {
    const auto cfg = resolve_config(common, true);
    const auto data = load_input(in, false);
    const bool vae = kind == "vae";
    const auto result = vae ? pretrain_vae(data.values, cfg.ae, cfg.vae_pretrain)
                            : pretrain_ae(data.values, cfg.ae, cfg.pretrain);
    ModelBundle model{result.params, std::nullopt,
                      {{"kind", kind},
                       {"input_dim", std::to_string(data.n_features())},
                       {"config", describe(cfg)}}};
    save_model(model, pt_out);
    if (!pt_history.empty()) text::write_file(pt_history, history_csv(result.history));
    std::mt19937_64 rng(cfg.pretrain.seed);
    const auto rec = reconstruction_loss(result.params, data.values, rng);
    std::cerr << "reconstruction loss " << rec.mean_latent;
    if (vae) std::cerr << " (sampled " << rec.sampled_latent << ")";
    std::cerr << "\n";
    write_manifest(pt_out, "pretrain", {in.input}, cfg);
  } else if (ci->parsed()) {
    const auto cfg = resolve_config(common, false);
    const auto data = load_input(in, false);
    const auto model = load_model(ci_model);
    check_width(model.params, data);
    KmeansOptions km = cfg.kmeans;
    km.k = cfg.derc.k;
    const auto result = kmeans_fit(encode(model.params, data.values), km);
    text::write_file(ci_out, centroids_csv(result.centroids));
    std::cerr << "k-means inertia " << result.inertia << " (best of " << result.restarts_run
              << " restarts)\n";
    write_manifest(ci_out, "cluster-init", {in.input, ci_model}, cfg);
  } else if (td->parsed()) {
    const auto cfg = resolve_config(common, false);
    const auto data = load_input(in, false);
    auto model = load_model(td_model);
    check_width(model.params, data);
    const Matrix centroids = read_centroids(td_centroids);
    const auto result = train_derc(data.values, model.params, centroids, cfg.derc);
    model.params = result.params;
    model.centroids = result.state.centroids;
    model.metadata["kind"] = "derc";
    model.metadata["config"] = describe(cfg);
    save_model(model, td_out);
    if (!td_pred.empty())
      text::write_file(td_pred, predictions_csv(data.sample_ids, result.prediction.cluster_ids));
    if (!td_history.empty()) text::write_file(td_history, derc_history_csv(result.history));
    if (!td_q.empty()) text::write_file(td_q, matrix_csv(result.state.q, data.sample_ids, "q"));
    if (!td_p.empty()) text::write_file(td_p, matrix_csv(result.state.p, data.sample_ids, "p"));
    write_manifest(td_out, "train-derc", {in.input, td_model, td_centroids}, cfg);
  } else if (ev->parsed()) {
    const auto cfg = resolve_config(common, false);
    const auto label_map = read_label_map(ev_labels);
    std::vector<int> y, c;
    const auto lines = text::split(text::read_file(ev_pred), '\n');
    for (std::size_t li = 1; li < lines.size(); ++li) {
      const auto t = text::trim(lines[li]);
      if (t.empty()) continue;
      const auto cells = text::split(t, ',');
      if (cells.size() != 2) throw ParseError(ev_pred + ": line " + std::to_string(li + 1) +
                                              " should be sample_id,cluster");
      const std::string id(cells[0]);
      const auto it = label_map.find(id);
      if (it == label_map.end()) throw ValidationError("no label for sample " + id);
      const auto cl = text::parse_double(cells[1]);
      if (!cl || *cl < 0) throw ParseError(ev_pred + ": bad cluster id at line " + std::to_string(li + 1));
      y.push_back(it->second);
      c.push_back(static_cast<int>(*cl));
    }
    const auto report = evaluate_clustering(ev_method, y, c, cfg.positive_label);
    std::cout << metrics_text(report);
    if (!ev_out.empty()) text::write_file(ev_out, metrics_text(report));
    if (!ev_csv.empty()) text::write_file(ev_csv, std::string(kMetricsCsvHeader) + metrics_csv_row(report));
  } else if (ex->parsed()) {
    const auto data = load_input(in, false);
    const auto model = load_model(ex_model);
    check_width(model.params, data);
    text::write_file(ex_out, matrix_csv(encode(model.params, data.values), data.sample_ids, "z"));
  } else if (pl->parsed()) {
    const auto cfg = resolve_config(common, true);
    Dataset data;
    if (pl_in.empty()) {
      data = generate_synthetic(cfg.synth);
    } else {
      InputOptions pin{pl_in, pl_labels, {}};
      data = load_input(pin, true);
    }
    const auto result = run_pipeline(data, cfg);
    text::write_file(pl_out + ".txt", pipeline_report_text(result, cfg));
    text::write_file(pl_out + ".csv", pipeline_report_csv(result));
    std::cout << pipeline_report_csv(result);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const derc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const derc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
