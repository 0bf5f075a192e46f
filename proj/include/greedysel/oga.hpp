#pragma once

// Sample orthogonal greedy algorithm (orthogonal matching pursuit) over a
// standardized design.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "greedysel/model.hpp"

namespace greedysel {

enum class StopReason {
  budget,       ///< ran the requested number of steps
  exact_fit,    ///< residual norm fell below 1e-12·‖Y‖
  exhausted,    ///< every remaining column lies numerically in the selected span
};

struct SelectionPath {
  IndexSet indices;                    ///< ĵ_1..ĵ_K, 0-based
  std::vector<double> rss;             ///< rss[m] = ‖(I - H_{Ĵ_m})Y‖², rss[0] = ‖Y‖²
  std::vector<Eigen::VectorXd> coeffs; ///< coeffs[m-1] = β̂*(Ĵ_m), aligned with indices
  Index n = 0;
  Index p = 0;
  StopReason stop = StopReason::budget;

  Index steps() const noexcept { return static_cast<Index>(indices.size()); }
  /// Ĵ_m as an index set.
  IndexSet prefix(Index m) const { return {indices.begin(), indices.begin() + m}; }
};

/// Incrementally built orthonormal basis of a set of design columns
/// (modified Gram-Schmidt with one reorthogonalization pass).
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Index n, Index capacity = 0);

  /// Appends `column`; returns false (leaving the basis unchanged) when its
  /// component orthogonal to the basis is below 1e-10·‖column‖.
  bool append(const Eigen::Ref<const Eigen::VectorXd>& column);

  Index size() const noexcept { return size_; }
  auto q() const { return q_.leftCols(size_); }
  /// Upper-triangular factor with columns = Q·R.
  auto r() const { return r_.topLeftCorner(size_, size_); }
  /// (I - H) v
  Eigen::VectorXd residual(const Eigen::VectorXd& v) const;

 private:
  Index size_ = 0;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd r_;
};

/// μ̂_{J,i} = Z_i^T (I - H_J) Y / (n^{1/2} ‖Z_i‖).
double mu_hat(const StandardizedDesign& design, const Eigen::VectorXd& y,
              std::span<const Index> J, Index i);

/// Runs up to `max_steps` OGA iterations (capped at min(p, n-1)).
SelectionPath fit_path(const StandardizedDesign& design, const Eigen::VectorXd& y,
                       Index max_steps);

/// Least-squares coefficients of Y on the J columns.
Eigen::VectorXd ls_coefficients(const StandardizedDesign& design, const Eigen::VectorXd& y,
                                std::span<const Index> J);

}  // namespace greedysel
