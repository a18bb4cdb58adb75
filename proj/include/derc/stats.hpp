#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "derc/error.hpp"

// Hypothesis tests used by the feature prescreen.
namespace derc::stats {

struct Correlation {
  double rho = 0.0;
  double p = 1.0;
};

// Two-sided p-value of a correlation coefficient from the t statistic with
// n - 2 degrees of freedom.
inline double correlation_pvalue(double rho, std::size_t n) {
  rho = std::clamp(rho, -1.0, 1.0);
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n) - 2.0;
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  const boost::math::students_t dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

/// Pearson correlation with its two-sided p-value.
///
/// A constant input has no defined correlation; it is reported as rho = 0,
/// p = 1 so that it never triggers redundancy pruning.
inline Correlation pearson_correlation_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ArgumentError("pearson_correlation_test: length mismatch (" + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 3) throw ArgumentError("pearson_correlation_test: need at least 3 observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return {};
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return {rho, correlation_pvalue(rho, x.size())};
}

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// D'Agostino-Pearson omnibus statistic K^2 = Z(skew)^2 + Z(kurtosis)^2.
///
/// Both moment statistics are mapped to approximate standard normals
/// (D'Agostino 1970; Anscombe & Glynn 1983). Requires n >= 8 and a
/// non-constant sample; returns NaN otherwise.
inline double omnibus_k2(std::span<const double> x) {
  const std::size_t count = x.size();
  if (count < 8) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(count);
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 1e-300) return std::numeric_limits<double>::quiet_NaN();

  const double skew = m3 / std::pow(m2, 1.5);
  const double y = skew * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double z_skew = delta * std::asinh(y / alpha);

  const double kurt = m4 / (m2 * m2);
  const double expected = 3.0 * (n - 1.0) / (n + 1.0);
  const double var_kurt =
      24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double xk = (kurt - expected) / std::sqrt(var_kurt);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 *
                             (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + xk * std::sqrt(2.0 / (a - 4.0));
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  const double z_kurt = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
  return z_skew * z_skew + z_kurt * z_kurt;
}

/// True iff the omnibus normality test does not reject at `alpha`.
/// Samples shorter than 8 or constant samples are never treated as normal.
inline bool normality_gate(std::span<const double> x, double alpha) {
  const double k2 = omnibus_k2(x);
  if (std::isnan(k2)) return false;
  if (std::isinf(k2)) return false;
  const boost::math::chi_squared chi2(2.0);
  const double p = boost::math::cdf(boost::math::complement(chi2, k2));
  return p > alpha;
}

/// Two-sided Welch (unequal variance) t-test.
inline double welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("welch_t_test: need two observations per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  const double diff = mean(a) - mean(b);
  const double se2 = va + vb;
  if (se2 <= 0.0) return diff == 0.0 ? 1.0 : 0.0;
  const double t = diff / std::sqrt(se2);
  const double dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

// Mid-ranks (1-based) of the pooled sample; ties share their average rank.
inline std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(pooled.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Groups larger than this use the normal approximation.
inline constexpr std::size_t kWilcoxonExactMax = 20;

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test.
///
/// When both groups have at most 20 members the null distribution of the
/// rank sum is counted exactly over all C(N, n_a) splits of the observed
/// mid-ranks (ties included). Larger groups use the tie-corrected normal
/// approximation with continuity correction.
inline double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("wilcoxon_rank_sum: empty group");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const std::size_t na = a.size();
  const std::size_t total = pooled.size();
  double w = 0.0;
  for (std::size_t i = 0; i < na; ++i) w += ranks[i];

  if (na <= kWilcoxonExactMax && b.size() <= kWilcoxonExactMax) {
    // Doubled mid-ranks are integers; count subsets of size na by their sum.
    std::vector<int> doubled(total);
    int max_sum = 0;
    for (std::size_t i = 0; i < total; ++i) {
      doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      max_sum += doubled[i];
    }
    std::vector<std::vector<double>> ways(na + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < total; ++i)
      for (std::size_t k = std::min(na, i + 1); k >= 1; --k)
        for (int s = max_sum; s >= doubled[i]; --s) ways[k][s] += ways[k - 1][s - doubled[i]];
    const int observed = static_cast<int>(std::lround(2.0 * w));
    double all = 0.0, lower = 0.0, upper = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
      const double c = ways[na][s];
      all += c;
      if (s <= observed) lower += c;
      if (s >= observed) upper += c;
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
  }

  const double n_a = static_cast<double>(na);
  const double n_b = static_cast<double>(b.size());
  const double n = static_cast<double>(total);
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }
  const double var = n_a * n_b / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double centred = w - n_a * (n + 1.0) / 2.0;
  const double corrected = std::max(0.0, std::abs(centred) - 0.5);
  const double z = corrected / std::sqrt(var);
  const boost::math::normal stdnorm;
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(stdnorm, z)), 0.0, 1.0);
}

}  // namespace derc::stats
