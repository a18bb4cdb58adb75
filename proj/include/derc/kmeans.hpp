#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "derc/dataset.hpp"
#include "derc/error.hpp"

namespace derc {

struct KmeansOptions {
  std::size_t k = 2;
  std::size_t restarts = 80;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;
};

struct KmeansResult {
  Matrix centroids;  // k x dim
  std::vector<int> assignments;
  double inertia = 0.0;
  std::size_t restarts_run = 0;
  std::size_t best_restart = 0;
};

// SplitMix64 finaliser; turns (seed, index) into well-spread sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Nearest centroid per row; ties go to the lower cluster index.
inline std::vector<int> kmeans_assign(const Matrix& centroids, const Matrix& points) {
  if (centroids.cols() != points.cols())
    throw ArgumentError("kmeans_assign: centroid and point dimensions differ");
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = (points.row(i) - centroids.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    out[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

inline double kmeans_inertia(const Matrix& centroids, const Matrix& points,
                             const std::vector<int>& assignments) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

namespace detail {

// Every empty cluster takes over the point farthest from its current
// centroid, chosen among clusters that can spare a member.
inline void repair_empty_clusters(Matrix& centroids, const Matrix& points,
                                  std::vector<int>& assignments) {
  const auto k = static_cast<std::size_t>(centroids.rows());
  std::vector<std::size_t> counts(k, 0);
  for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    double far = -1.0;
    Eigen::Index arg = -1;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const auto owner = static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)]);
      if (counts[owner] < 2) continue;
      const double d = (points.row(i) - centroids.row(static_cast<Eigen::Index>(owner))).squaredNorm();
      if (d > far) {
        far = d;
        arg = i;
      }
    }
    if (arg < 0) throw NumericError("kmeans: cannot repair empty cluster");
    --counts[static_cast<std::size_t>(assignments[static_cast<std::size_t>(arg)])];
    assignments[static_cast<std::size_t>(arg)] = static_cast<int>(c);
    counts[c] = 1;
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(arg);
  }
}

inline Matrix cluster_means(const Matrix& points, const std::vector<int>& assignments,
                            Eigen::Index k) {
  Matrix sums = Matrix::Zero(k, points.cols());
  Vector counts = Vector::Zero(k);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int a = assignments[static_cast<std::size_t>(i)];
    sums.row(a) += points.row(i);
    counts(a) += 1.0;
  }
  for (Eigen::Index j = 0; j < k; ++j) sums.row(j) /= counts(j);
  return sums;
}

inline KmeansResult lloyd(const Matrix& points, std::size_t k, std::uint64_t seed,
                          std::size_t max_iter, double tol) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: k distinct rows, uniformly.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(idx[j], idx[pick(rng)]);
  }
  Matrix centroids(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t j = 0; j < k; ++j)
    centroids.row(static_cast<Eigen::Index>(j)) = points.row(static_cast<Eigen::Index>(idx[j]));

  std::vector<int> assignments;
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto next = kmeans_assign(centroids, points);
    repair_empty_clusters(centroids, points, next);
    const bool stable = next == assignments;
    assignments = std::move(next);
    if (stable) break;
    Matrix updated = cluster_means(points, assignments, centroids.rows());
    const double shift = (updated - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(updated);
    if (shift < tol) break;
  }
  // Returned assignments are always the nearest-centroid ones.
  assignments = kmeans_assign(centroids, points);
  repair_empty_clusters(centroids, points, assignments);

  KmeansResult out;
  out.inertia = kmeans_inertia(centroids, points, assignments);
  out.centroids = std::move(centroids);
  out.assignments = std::move(assignments);
  return out;
}

}  // namespace detail

/// Lloyd's algorithm with `restarts` independent Forgy initialisations.
///
/// Restart r is seeded with mix_seed(seed, r). The lowest inertia wins,
/// ties going to the earlier restart, so the result does not depend on the
/// order in which restarts are evaluated.
inline KmeansResult kmeans_fit(const Matrix& points, const KmeansOptions& opts) {
  if (opts.k == 0) throw ArgumentError("kmeans_fit: k must be >= 1");
  if (static_cast<std::size_t>(points.rows()) < opts.k)
    throw ArgumentError("kmeans_fit: " + std::to_string(points.rows()) +
                        " points cannot form " + std::to_string(opts.k) + " clusters");
  if (opts.restarts == 0) throw ArgumentError("kmeans_fit: restarts must be >= 1");
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    auto candidate = detail::lloyd(points, opts.k, mix_seed(opts.seed, r), opts.max_iter, opts.tol);
    if (candidate.inertia < best.inertia) {
      best = std::move(candidate);
      best.best_restart = r;
    }
  }
  best.restarts_run = opts.restarts;
  return best;
}

}  // namespace derc
