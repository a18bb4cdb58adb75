#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "derc/dataset.hpp"
#include "derc/error.hpp"

// Clustering layer: Student's t soft assignment (one degree of freedom),
// sharpened target distribution and the KL clustering loss.
namespace derc {

// Kernel matrix K(i,j) = 1 / (1 + ||z_i - mu_j||^2).
inline Matrix student_kernel(const Matrix& latent, const Matrix& centroids) {
  if (latent.cols() != centroids.cols())
    throw ArgumentError("soft_assign: latent width " + std::to_string(latent.cols()) +
                        " does not match centroid width " + std::to_string(centroids.cols()));
  if (centroids.rows() < 1) throw ArgumentError("soft_assign: need at least one centroid");
  Matrix kernel(latent.rows(), centroids.rows());
  for (Eigen::Index i = 0; i < latent.rows(); ++i)
    for (Eigen::Index j = 0; j < centroids.rows(); ++j)
      kernel(i, j) = 1.0 / (1.0 + (latent.row(i) - centroids.row(j)).squaredNorm());
  return kernel;
}

/// q_ij = K(i,j) / sum_j' K(i,j').
inline Matrix soft_assign(const Matrix& latent, const Matrix& centroids) {
  Matrix q = student_kernel(latent, centroids);
  for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) /= q.row(i).sum();
  return q;
}

/// p_ij = (q_ij^2 / f_j) / sum_j' (q_ij'^2 / f_j'), with f_j = sum_i q_ij.
inline Matrix target_distribution(const Matrix& q) {
  const Eigen::RowVectorXd freq = q.colwise().sum();
  for (Eigen::Index j = 0; j < freq.size(); ++j)
    if (!(freq(j) > 0.0) || !std::isfinite(freq(j)))
      throw NumericError("target_distribution: cluster " + std::to_string(j) +
                         " has zero soft frequency (degenerate cluster)");
  Matrix p = q.array().square().rowwise() / freq.array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double s = p.row(i).sum();
    if (!(s > 0.0)) throw NumericError("target_distribution: sample " + std::to_string(i) +
                                       " has an all-zero assignment row");
    p.row(i) /= s;
  }
  return p;
}

/// sum_ij p_ij log(p_ij / q_ij), with 0 log(0 / q) = 0; never negative.
inline double kl_divergence(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw ArgumentError("kl_divergence: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (pij == 0.0) continue;
      if (!(q(i, j) > 0.0))
        throw NumericError("kl_divergence: q is zero where p is positive");
      total += pij * std::log(pij / q(i, j));
    }
  return std::max(total, 0.0);
}

struct ClusterLoss {
  double value = 0.0;
  Matrix q;
  Matrix latent_grad;    // n x latent
  Matrix centroid_grad;  // k x latent
};

/// KL clustering loss of the batch against fixed targets `p`, with
///   dL/dz_i  =  2 sum_j K(i,j) (p_ij - q_ij) (z_i - mu_j)
///   dL/dmu_j = -2 sum_i K(i,j) (p_ij - q_ij) (z_i - mu_j).
/// Values are sums over the batch (no 1/bs scaling).
inline ClusterLoss cluster_kl_loss(const Matrix& p, const Matrix& latent, const Matrix& centroids) {
  const Matrix kernel = student_kernel(latent, centroids);
  ClusterLoss out;
  out.q = kernel;
  for (Eigen::Index i = 0; i < out.q.rows(); ++i) out.q.row(i) /= out.q.row(i).sum();
  out.value = kl_divergence(p, out.q);

  const Matrix weight = 2.0 * kernel.array() * (p - out.q).array();
  out.latent_grad = Matrix::Zero(latent.rows(), latent.cols());
  out.centroid_grad = Matrix::Zero(centroids.rows(), centroids.cols());
  for (Eigen::Index i = 0; i < latent.rows(); ++i)
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const Eigen::RowVectorXd diff = weight(i, j) * (latent.row(i) - centroids.row(j));
      out.latent_grad.row(i) += diff;
      out.centroid_grad.row(j) -= diff;
    }
  return out;
}

// Row-wise argmax; ties go to the lower column.
inline std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j)
      if (m(i, j) > m(i, arg)) arg = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace derc
