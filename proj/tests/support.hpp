#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "greedysel/model.hpp"

namespace testing_support {

using greedysel::Index;
using greedysel::IndexSet;

inline Eigen::MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline Eigen::VectorXd gaussian_vec(Index n, std::mt19937_64& rng) { return gaussian(n, 1, rng).col(0); }

/// Columns satisfy Z^T Z = n I.
inline Eigen::MatrixXd orthonormal_design(Index n, Index p, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, p, rng));
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  return q * std::sqrt(static_cast<double>(n));
}

/// Columns scaled to unit root mean square.
inline Eigen::MatrixXd unit_rms(Eigen::MatrixXd x) {
  const double n = static_cast<double>(x.rows());
  for (Index j = 0; j < x.cols(); ++j) x.col(j) /= std::sqrt(x.col(j).squaredNorm() / n);
  return x;
}

/// Design whose columns share a common factor of the given strength.
inline Eigen::MatrixXd correlated_design(Index n, Index p, double factor, std::mt19937_64& rng) {
  Eigen::MatrixXd x = gaussian(n, p, rng);
  const Eigen::VectorXd f = gaussian_vec(n, rng);
  for (Index j = 0; j < p; ++j) x.col(j) += factor * f;
  return unit_rms(x);
}

/// ‖(I − H_J) y‖² via a fresh least-squares solve.
inline double dense_rss(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const IndexSet& J) {
  if (J.empty()) return y.squaredNorm();
  Eigen::MatrixXd zj(z.rows(), static_cast<Index>(J.size()));
  for (std::size_t k = 0; k < J.size(); ++k) zj.col(static_cast<Index>(k)) = z.col(J[k]);
  const Eigen::VectorXd b = zj.colPivHouseholderQr().solve(y);
  return (y - zj * b).squaredNorm();
}

/// Residual of `v` after projecting on the columns J, via explicit inversion of Z_J^T Z_J.
inline Eigen::VectorXd dense_residual(const Eigen::MatrixXd& z, const Eigen::VectorXd& v, const IndexSet& J) {
  if (J.empty()) return v;
  Eigen::MatrixXd zj(z.rows(), static_cast<Index>(J.size()));
  for (std::size_t k = 0; k < J.size(); ++k) zj.col(static_cast<Index>(k)) = z.col(J[k]);
  const Eigen::MatrixXd gram_inv = (zj.transpose() * zj).inverse();
  return v - zj * (gram_inv * (zj.transpose() * v));
}

/// Random correlation matrix with smallest eigenvalue at least `floor`.
inline Eigen::MatrixXd random_correlation(Index p, double floor, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = gaussian(p, p, rng);
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(p);
  // Mix toward the identity until the bound holds after rescaling to unit diagonal.
  for (double w = 0.0;; w += 0.05) {
    Eigen::MatrixXd m = (1.0 - w) * s + w * Eigen::MatrixXd::Identity(p, p);
    const Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
    m = d.asDiagonal() * m * d.asDiagonal();
    m = 0.5 * (m + m.transpose());
    m.diagonal().setOnes();
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() >= floor) return m;
  }
}

/// ρ_kl = rho^{|k−l|}.
inline Eigen::MatrixXd toeplitz(Index p, double rho) {
  Eigen::MatrixXd m(p, p);
  for (Index k = 0; k < p; ++k) {
    for (Index l = 0; l < p; ++l) m(k, l) = std::pow(rho, static_cast<double>(std::abs(k - l)));
  }
  return m;
}

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace testing_support
