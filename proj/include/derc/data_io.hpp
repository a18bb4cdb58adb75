#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "derc/dataset.hpp"
#include "derc/error.hpp"
#include "derc/text.hpp"

namespace derc {

namespace detail {

inline std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> lines = text::split(content, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline double parse_cell(std::string_view tok, std::size_t line_no, std::size_t col,
                         std::string_view source) {
  if (text::is_missing_token(tok)) return std::numeric_limits<double>::quiet_NaN();
  const auto v = text::parse_double(tok);
  if (!v)
    throw ParseError(std::string(source) + ": non-numeric cell '" + std::string(text::trim(tok)) +
                     "' at line " + std::to_string(line_no) + ", column " +
                     std::to_string(col + 1));
  if (std::isnan(*v)) return *v;
  if (*v < 0.0 || *v > 1.0 || !std::isfinite(*v))
    throw ValidationError(std::string(source) + ": value " + std::string(text::trim(tok)) +
                          " at line " + std::to_string(line_no) + ", column " +
                          std::to_string(col + 1) + " is outside [0,1]");
  return *v;
}

}  // namespace detail

/// Reads a GEO series-matrix text file.
///
/// Metadata lines start with '!'. The data table sits between the
/// `!series_matrix_table_begin` and `!series_matrix_table_end` markers; its
/// first row holds sample ids and each further row is one probe. The file is
/// transposed so that samples become rows. Labels are never present.
inline Dataset load_series_matrix(const std::string& path,
                                  MissingPolicy policy = MissingPolicy::mean_impute) {
  const std::string content = text::read_file(path);
  const auto lines = detail::lines_of(content);

  std::size_t begin = 0, end = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find("series_matrix_table_begin") != std::string_view::npos) {
      if (begin != 0)
        throw ParseError(path + ": second table begin marker at line " + std::to_string(i + 1));
      begin = i + 1;
    } else if (lines[i].find("series_matrix_table_end") != std::string_view::npos) {
      if (begin == 0)
        throw ParseError(path + ": table end marker without begin at line " +
                         std::to_string(i + 1));
      end = i + 1;
      break;
    }
  }
  if (begin == 0) throw ParseError(path + ": missing series_matrix_table_begin marker");
  if (end == 0)
    throw ParseError(path + ": table opened at line " + std::to_string(begin) +
                     " has no series_matrix_table_end marker");
  if (end == begin + 1) throw ParseError(path + ": empty table at line " + std::to_string(begin));

  const auto header = text::split(lines[begin], '\t');
  if (header.size() < 2)
    throw ParseError(path + ": table header at line " + std::to_string(begin + 1) +
                     " lists no samples");
  std::vector<std::string> sample_ids;
  for (std::size_t c = 1; c < header.size(); ++c)
    sample_ids.emplace_back(text::unquote(header[c]));

  std::vector<std::vector<double>> columns;
  std::vector<std::string> feature_ids;
  for (std::size_t li = begin + 1; li + 1 < end; ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const auto cells = text::split(lines[li], '\t');
    if (cells.size() != header.size())
      throw ParseError(path + ": line " + std::to_string(li + 1) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    feature_ids.emplace_back(text::unquote(cells[0]));
    auto& col = columns.emplace_back();
    col.reserve(sample_ids.size());
    for (std::size_t c = 1; c < cells.size(); ++c)
      col.push_back(detail::parse_cell(cells[c], li + 1, c, path));
  }
  return assemble(columns, std::move(feature_ids), std::move(sample_ids), std::nullopt, policy);
}

/// Reads a comma-separated dataset.
///
/// The header row names the features. An optional leading `sample_id`
/// column carries sample names and an optional trailing `label` column
/// carries 0/1 classes; with `has_labels` the label column is mandatory,
/// without it any label column is ignored.
inline Dataset load_csv(const std::string& path, bool has_labels,
                        MissingPolicy policy = MissingPolicy::mean_impute) {
  const std::string content = text::read_file(path);
  const auto lines = detail::lines_of(content);
  if (lines.empty()) throw ParseError(path + ": empty file");

  const auto header = text::split(lines[0], ',');
  const bool id_col = text::unquote(header.front()) == "sample_id";
  const bool label_col = text::unquote(header.back()) == "label";
  if (has_labels && !label_col)
    throw ValidationError(path + ": a trailing 'label' column is required");
  const std::size_t first = id_col ? 1 : 0;
  const std::size_t last = label_col ? header.size() - 1 : header.size();
  if (last <= first) throw ParseError(path + ": header lists no features");

  std::vector<std::string> feature_ids;
  for (std::size_t c = first; c < last; ++c) feature_ids.emplace_back(text::unquote(header[c]));
  std::vector<std::vector<double>> columns(feature_ids.size());
  std::vector<std::string> sample_ids;
  Labels labels;

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const auto cells = text::split(lines[li], ',');
    if (cells.size() != header.size())
      throw ParseError(path + ": ragged row at line " + std::to_string(li + 1) + " (" +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()) + ")");
    sample_ids.push_back(id_col ? std::string(text::unquote(cells[0]))
                                : "s" + std::to_string(sample_ids.size()));
    for (std::size_t c = first; c < last; ++c)
      columns[c - first].push_back(detail::parse_cell(cells[c], li + 1, c, path));
    if (label_col && has_labels) {
      const auto v = text::parse_double(cells.back());
      if (!v || (*v != 0.0 && *v != 1.0))
        throw ValidationError(path + ": label '" + std::string(text::trim(cells.back())) +
                              "' at line " + std::to_string(li + 1) + " is not 0 or 1");
      labels.push_back(static_cast<int>(*v));
    }
  }
  std::optional<Labels> maybe_labels;
  if (has_labels) maybe_labels = std::move(labels);
  return assemble(columns, std::move(feature_ids), std::move(sample_ids), std::move(maybe_labels),
                  policy);
}

// True if the CSV header ends with a `label` column.
inline bool csv_has_label_column(const std::string& path) {
  const std::string content = text::read_file(path);
  const auto nl = content.find('\n');
  const auto header = text::split(std::string_view(content).substr(0, nl), ',');
  return text::unquote(header.back()) == "label";
}

inline std::string to_csv(const Dataset& data) {
  std::string out = "sample_id";
  for (const auto& f : data.feature_ids) out += "," + f;
  if (data.labels) out += ",label";
  out += '\n';
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    out += data.sample_ids[i];
    for (Eigen::Index j = 0; j < data.values.cols(); ++j)
      out += "," + text::format_double(data.values(static_cast<Eigen::Index>(i), j));
    if (data.labels) out += "," + std::to_string((*data.labels)[i]);
    out += '\n';
  }
  return out;
}

inline void save_csv(const Dataset& data, const std::string& path) {
  text::write_file(path, to_csv(data));
}

/// Reads a `sample_id,label` file and attaches the labels to `data` by id.
inline void attach_labels(Dataset& data, const std::string& path) {
  const std::string content = text::read_file(path);
  const auto lines = detail::lines_of(content);
  std::unordered_map<std::string, int> by_id;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    const auto cells = text::split(lines[li], ',');
    if (cells.size() != 2) throw ParseError(path + ": line " + std::to_string(li + 1) +
                                            " should be sample_id,label");
    const auto v = text::parse_double(cells[1]);
    if (!v || (*v != 0.0 && *v != 1.0))
      throw ValidationError(path + ": label at line " + std::to_string(li + 1) +
                            " is not 0 or 1");
    by_id[std::string(text::unquote(cells[0]))] = static_cast<int>(*v);
  }
  Labels labels;
  for (const auto& id : data.sample_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError(path + ": no label for sample " + id);
    labels.push_back(it->second);
  }
  data.labels = std::move(labels);
}

struct BetaShape {
  double a = 2.0;
  double b = 2.0;
};

/// Recipe for a reproducible two-class methylation-like cohort.
///
/// `class_ratio` is the fraction of samples in class 1. Informative
/// features are drawn from a class-conditional Beta distribution, all
/// other features from the shared noise Beta.
struct SynthSpec {
  std::size_t n_samples = 100;
  std::size_t n_features = 500;
  std::size_t n_informative = 50;
  double class_ratio = 0.5;
  std::uint64_t seed = 7;
  BetaShape informative_class0{2.0, 8.0};
  BetaShape informative_class1{8.0, 2.0};
  BetaShape noise{2.0, 2.0};
};

inline void validate(const SynthSpec& spec) {
  if (spec.n_samples < 2) throw ArgumentError("synthetic cohort needs at least 2 samples");
  if (spec.n_features < 1) throw ArgumentError("synthetic cohort needs at least 1 feature");
  if (spec.n_informative > spec.n_features)
    throw ArgumentError("n_informative exceeds n_features");
  if (!(spec.class_ratio > 0.0 && spec.class_ratio < 1.0))
    throw ArgumentError("class_ratio must lie in (0,1)");
  for (const auto& s : {spec.informative_class0, spec.informative_class1, spec.noise})
    if (!(s.a > 0.0 && s.b > 0.0)) throw ArgumentError("Beta shape parameters must be > 0");
}

inline Dataset generate_synthetic(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_samples;
  const std::size_t d = spec.n_features;

  auto n1 = static_cast<std::size_t>(std::llround(spec.class_ratio * static_cast<double>(n)));
  n1 = std::clamp<std::size_t>(n1, 1, n - 1);
  Labels labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n1), 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> informative(d, false);
  for (std::size_t k = 0; k < spec.n_informative; ++k) informative[order[k]] = true;

  auto draw_beta = [&rng](const BetaShape& s) {
    std::gamma_distribution<double> ga(s.a, 1.0), gb(s.b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
  };

  Dataset out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const BetaShape& s = !informative[j]   ? spec.noise
                           : labels[i] == 1 ? spec.informative_class1
                                            : spec.informative_class0;
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = draw_beta(s);
    }
  char buf[32];
  for (std::size_t j = 0; j < d; ++j) {
    std::snprintf(buf, sizeof buf, "cg%08zu", j);
    out.feature_ids.emplace_back(buf);
  }
  for (std::size_t i = 0; i < n; ++i) out.sample_ids.push_back("s" + std::to_string(i));
  out.labels = std::move(labels);
  return out;
}

}  // namespace derc
