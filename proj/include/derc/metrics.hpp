#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <vector>

#include "derc/error.hpp"
#include "derc/text.hpp"

namespace derc {

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm, potentials form, O(n^3)). Returns row -> column.
inline std::vector<std::size_t> hungarian_min(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const std::size_t r = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost[r - 1][c - 1] - u[r] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> out(n);
  for (std::size_t c = 1; c <= n; ++c) out[match[c] - 1] = c - 1;
  return out;
}

struct AccuracyResult {
  double acc = 0.0;
  std::size_t matched = 0;
  std::vector<int> mapping;  // cluster id -> label
};

/// Best match rate between cluster ids and labels over all one-to-one
/// mappings. The contingency matrix is padded to square and solved
/// exactly; when the identity mapping is also optimal it is returned.
inline AccuracyResult clustering_accuracy(const std::vector<int>& labels,
                                          const std::vector<int>& clusters) {
  if (labels.size() != clusters.size())
    throw ArgumentError("clustering_accuracy: " + std::to_string(labels.size()) + " labels vs " +
                        std::to_string(clusters.size()) + " cluster ids");
  if (labels.empty()) throw ArgumentError("clustering_accuracy: empty input");
  int max_id = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || clusters[i] < 0) throw ArgumentError("clustering_accuracy: negative id");
    max_id = std::max({max_id, labels[i], clusters[i]});
  }
  const auto size = static_cast<std::size_t>(max_id) + 1;
  std::vector<std::vector<double>> counts(size, std::vector<double>(size, 0.0));
  for (std::size_t i = 0; i < labels.size(); ++i)
    counts[static_cast<std::size_t>(clusters[i])][static_cast<std::size_t>(labels[i])] += 1.0;

  std::vector<std::vector<double>> cost(size, std::vector<double>(size));
  for (std::size_t c = 0; c < size; ++c)
    for (std::size_t l = 0; l < size; ++l) cost[c][l] = -counts[c][l];
  const auto assignment = hungarian_min(cost);

  double best = 0.0, identity = 0.0;
  for (std::size_t c = 0; c < size; ++c) {
    best += counts[c][assignment[c]];
    identity += counts[c][c];
  }
  AccuracyResult out;
  out.mapping.resize(size);
  for (std::size_t c = 0; c < size; ++c)
    out.mapping[c] = static_cast<int>(identity >= best ? c : assignment[c]);
  out.matched = static_cast<std::size_t>(std::max(best, identity));
  out.acc = static_cast<double>(out.matched) / static_cast<double>(labels.size());
  return out;
}

struct Confusion {
  std::size_t fp = 0;
  std::size_t fn = 0;
  // counts[truth][predicted], with 0 = negative and 1 = positive
  std::array<std::array<std::size_t, 2>, 2> counts{};
};

/// FP / FN after mapping cluster ids to labels; `positive_label` is the
/// tumour class.
inline Confusion confusion_counts(const std::vector<int>& labels, const std::vector<int>& clusters,
                                  const std::vector<int>& mapping, int positive_label) {
  if (labels.size() != clusters.size()) throw ArgumentError("confusion_counts: length mismatch");
  std::vector<bool> seen(mapping.size(), false);
  for (int m : mapping) {
    if (m < 0 || static_cast<std::size_t>(m) >= mapping.size() || seen[static_cast<std::size_t>(m)])
      throw ArgumentError("confusion_counts: mapping is not a bijection");
    seen[static_cast<std::size_t>(m)] = true;
  }
  Confusion out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(clusters[i]);
    if (c >= mapping.size()) throw ArgumentError("confusion_counts: cluster id outside mapping");
    const bool truth = labels[i] == positive_label;
    const bool pred = mapping[c] == positive_label;
    ++out.counts[truth ? 1 : 0][pred ? 1 : 0];
    if (pred && !truth) ++out.fp;
    if (!pred && truth) ++out.fn;
  }
  return out;
}

struct MetricsReport {
  std::string method;
  double acc = 0.0;
  double error_rate_percent = 0.0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<int> mapping;
  Confusion confusion;
};

inline MetricsReport evaluate_clustering(const std::string& method, const std::vector<int>& labels,
                                         const std::vector<int>& clusters, int positive_label = 1) {
  const auto acc = clustering_accuracy(labels, clusters);
  MetricsReport r;
  r.method = method;
  r.acc = acc.acc;
  r.error_rate_percent = (1.0 - acc.acc) * 100.0;
  r.mapping = acc.mapping;
  r.confusion = confusion_counts(labels, clusters, acc.mapping, positive_label);
  r.fp = r.confusion.fp;
  r.fn = r.confusion.fn;
  return r;
}

inline constexpr const char* kMetricsCsvHeader = "method,acc,error_rate_percent,fp,fn\n";

// One table row: ACC to 4 decimals, error rate to 2.
inline std::string metrics_csv_row(const MetricsReport& r) {
  return r.method + "," + text::format_fixed(r.acc, 4) + "," +
         text::format_fixed(r.error_rate_percent, 2) + "," + std::to_string(r.fp) + "," +
         std::to_string(r.fn) + "\n";
}

inline std::string metrics_text(const MetricsReport& r) {
  std::string out = r.method + "\n";
  out += "  ACC            " + text::format_fixed(r.acc, 4) + "\n";
  out += "  Error rate (%) " + text::format_fixed(r.error_rate_percent, 2) + "\n";
  out += "  FP             " + std::to_string(r.fp) + "\n";
  out += "  FN             " + std::to_string(r.fn) + "\n";
  out += "  mapping        ";
  for (std::size_t c = 0; c < r.mapping.size(); ++c)
    out += (c ? ", " : "") + std::to_string(c) + "->" + std::to_string(r.mapping[c]);
  out += "\n";
  return out;
}

}  // namespace derc
