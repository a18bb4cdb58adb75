#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "derc/dataset.hpp"
#include "derc/error.hpp"
#include "derc/stats.hpp"
#include "derc/text.hpp"

namespace derc {

struct PrescreenConfig {
  double alpha = 0.05;
  double rho_threshold = 0.90;
  double normality_alpha = 0.05;
};

inline void validate(const PrescreenConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (!(cfg.rho_threshold > 0.0 && cfg.rho_threshold <= 1.0))
    throw ConfigError("rho_threshold must lie in (0,1]");
  if (!(cfg.normality_alpha > 0.0 && cfg.normality_alpha < 1.0))
    throw ConfigError("normality_alpha must lie in (0,1)");
}

struct PruneResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
};

/// Removes redundant features.
///
/// Pairs (i, j), i < j, are scanned in index order over features that are
/// still present; a pair with |rho| >= rho_threshold and p <= alpha removes
/// feature j. Correlations come from one Gram product over standardized
/// columns, computed in blocks of rows.
inline PruneResult correlation_prune(const Dataset& data, const PrescreenConfig& cfg) {
  validate(cfg);
  const Eigen::Index n = data.values.rows();
  const Eigen::Index d = data.values.cols();
  if (n < 3) throw ArgumentError("correlation_prune: need at least 3 samples");

  Matrix standardized = data.values.rowwise() - data.values.colwise().mean();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double norm = standardized.col(j).norm();
    if (norm > 0.0)
      standardized.col(j) /= norm;
    else
      standardized.col(j).setZero();
  }

  std::vector<bool> removed(static_cast<std::size_t>(d), false);
  constexpr Eigen::Index kBlock = 256;
  Matrix block;
  for (Eigen::Index b0 = 0; b0 < d; b0 += kBlock) {
    const Eigen::Index rows = std::min(kBlock, d - b0);
    const Eigen::Index width = d - b0;
    block.noalias() = standardized.middleCols(b0, rows).transpose() * standardized.rightCols(width);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = b0 + r;
      if (removed[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = i + 1; j < d; ++j) {
        if (removed[static_cast<std::size_t>(j)]) continue;
        const double rho = std::clamp(block(r, j - b0), -1.0, 1.0);
        if (std::abs(rho) < cfg.rho_threshold) continue;
        if (stats::correlation_pvalue(rho, static_cast<std::size_t>(n)) <= cfg.alpha)
          removed[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  PruneResult out;
  for (std::size_t j = 0; j < removed.size(); ++j) (removed[j] ? out.removed : out.kept).push_back(j);
  return out;
}

struct ClassTestResult {
  double p = 1.0;
  bool used_welch = false;
};

/// Per-feature class discrimination test.
///
/// Welch's t-test when both class subsamples pass the normality gate,
/// otherwise the Wilcoxon rank-sum test.
inline ClassTestResult class_test(std::span<const double> x, const Labels& y,
                                  const PrescreenConfig& cfg) {
  if (x.size() != y.size()) throw ArgumentError("class_test: values and labels differ in length");
  std::vector<double> g0, g1;
  for (std::size_t i = 0; i < x.size(); ++i) (y[i] == 1 ? g1 : g0).push_back(x[i]);
  if (g0.empty() || g1.empty()) throw ArgumentError("class_test: one class is empty");
  if (stats::normality_gate(g0, cfg.normality_alpha) &&
      stats::normality_gate(g1, cfg.normality_alpha))
    return {stats::welch_t_test(g0, g1), true};
  return {stats::wilcoxon_rank_sum(g0, g1), false};
}

struct PrescreenReport {
  std::vector<std::size_t> kept_indices;
  std::vector<std::string> kept_feature_ids;
  std::vector<std::string> removed_by_correlation;
  std::vector<std::string> removed_by_class_test;
  std::unordered_map<std::string, double> per_feature_pvalues;
};

inline PrescreenReport discriminative_filter(const Dataset& data, const PrescreenConfig& cfg) {
  if (!data.labels) throw ArgumentError("discriminative_filter requires class labels");
  const auto pruned = correlation_prune(data, cfg);
  PrescreenReport report;
  for (auto j : pruned.removed) report.removed_by_correlation.push_back(data.feature_ids[j]);
  std::vector<double> column(data.n_samples());
  for (auto j : pruned.kept) {
    const auto col = data.values.col(static_cast<Eigen::Index>(j));
    std::copy(col.begin(), col.end(), column.begin());
    const double p = class_test(column, *data.labels, cfg).p;
    const auto& id = data.feature_ids[j];
    report.per_feature_pvalues[id] = p;
    // alpha = 0 accepts nothing, even a p-value that underflowed to 0.
    if (cfg.alpha > 0.0 && p <= cfg.alpha) {
      report.kept_indices.push_back(j);
      report.kept_feature_ids.push_back(id);
    } else {
      report.removed_by_class_test.push_back(id);
    }
  }
  return report;
}

// feature_id,status,p_value rows in input order.
inline std::string report_csv(const Dataset& data, const PrescreenReport& report) {
  std::unordered_map<std::string, std::string> status;
  for (const auto& id : report.kept_feature_ids) status[id] = "kept";
  for (const auto& id : report.removed_by_correlation) status[id] = "removed_correlation";
  for (const auto& id : report.removed_by_class_test) status[id] = "removed_class_test";
  std::string out = "feature_id,status,p_value\n";
  for (const auto& id : data.feature_ids) {
    out += id + "," + status.at(id) + ",";
    if (const auto it = report.per_feature_pvalues.find(id); it != report.per_feature_pvalues.end())
      out += text::format_double(it->second);
    out += '\n';
  }
  return out;
}

inline std::string kept_list(const PrescreenReport& report) {
  std::string out;
  for (const auto& id : report.kept_feature_ids) out += id + '\n';
  return out;
}

}  // namespace derc
