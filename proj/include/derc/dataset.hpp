#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "derc/error.hpp"

namespace derc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// Samples x features matrix of beta values in [0,1].
///
/// Rows are samples. `labels`, when present, holds one 0/1 class id per row
/// (1 is the positive, tumour class by convention). `dropped_feature_ids`
/// lists features a loader removed because every value was missing.
struct Dataset {
  Matrix values;
  std::optional<Labels> labels;
  std::vector<std::string> feature_ids;
  std::vector<std::string> sample_ids;
  std::vector<std::string> dropped_feature_ids;

  [[nodiscard]] std::size_t n_samples() const { return static_cast<std::size_t>(values.rows()); }
  [[nodiscard]] std::size_t n_features() const { return static_cast<std::size_t>(values.cols()); }
  [[nodiscard]] bool has_labels() const { return labels.has_value(); }
};

enum class MissingPolicy { mean_impute, drop_feature };

inline void validate_labels(const Labels& labels, std::size_t n) {
  if (labels.size() != n)
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match sample count " + std::to_string(n));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("label of sample " + std::to_string(i) + " is " +
                            std::to_string(labels[i]) + ", expected 0 or 1");
}

// Throws ValidationError unless every Dataset invariant holds.
inline void validate(const Dataset& data) {
  const auto n = data.n_samples();
  const auto d = data.n_features();
  if (data.feature_ids.size() != d)
    throw ValidationError("feature id count does not match matrix width");
  if (data.sample_ids.size() != n)
    throw ValidationError("sample id count does not match matrix height");
  std::unordered_set<std::string> seen;
  for (const auto& id : data.feature_ids)
    if (!seen.insert(id).second) throw ValidationError("duplicate feature id: " + id);
  for (Eigen::Index j = 0; j < data.values.cols(); ++j)
    for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
      const double v = data.values(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ValidationError("value " + std::to_string(v) + " of sample " + data.sample_ids[i] +
                              ", feature " + data.feature_ids[j] + " is outside [0,1]");
    }
  if (data.labels) validate_labels(*data.labels, n);
}

/// Builds a dataset from per-feature columns where NaN marks a missing cell.
///
/// Missing cells are replaced by the feature mean (or the feature is dropped
/// under MissingPolicy::drop_feature). Features without any observed value are
/// always dropped and recorded in `dropped_feature_ids`.
inline Dataset assemble(const std::vector<std::vector<double>>& columns,
                        std::vector<std::string> feature_ids, std::vector<std::string> sample_ids,
                        std::optional<Labels> labels, MissingPolicy policy) {
  const std::size_t n = sample_ids.size();
  std::vector<std::size_t> keep;
  Dataset out;
  std::vector<double> fill(columns.size(), 0.0);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    double sum = 0.0;
    std::size_t observed = 0;
    for (double v : columns[j])
      if (!std::isnan(v)) {
        sum += v;
        ++observed;
      }
    if (observed == 0 || (policy == MissingPolicy::drop_feature && observed < n)) {
      out.dropped_feature_ids.push_back(feature_ids[j]);
      continue;
    }
    fill[j] = sum / static_cast<double>(observed);
    keep.push_back(j);
  }
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto& col = columns[keep[c]];
    for (std::size_t i = 0; i < n; ++i) {
      const double v = col[i];
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          std::isnan(v) ? fill[keep[c]] : v;
    }
    out.feature_ids.push_back(std::move(feature_ids[keep[c]]));
  }
  out.sample_ids = std::move(sample_ids);
  out.labels = std::move(labels);
  validate(out);
  return out;
}

// Keeps only the listed columns, in the given order.
inline Dataset select_features(const Dataset& data, const std::vector<std::size_t>& columns) {
  Dataset out;
  out.values.resize(data.values.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] >= data.n_features()) throw ArgumentError("feature index out of range");
    out.values.col(static_cast<Eigen::Index>(c)) =
        data.values.col(static_cast<Eigen::Index>(columns[c]));
    out.feature_ids.push_back(data.feature_ids[columns[c]]);
  }
  out.labels = data.labels;
  out.sample_ids = data.sample_ids;
  return out;
}

}  // namespace derc
