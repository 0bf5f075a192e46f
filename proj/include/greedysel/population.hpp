#pragma once

// Population-level counterparts of OGA: the (weak) greedy algorithm on an exact
// covariance, the exhaustive best m-term approximation and the uniform Baxter
// inequality diagnostics.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "greedysel/model.hpp"

namespace greedysel {

struct PopulationPath {
  double xi = 1.0;
  IndexSet indices;
  /// errors[m] = E(u_m²); errors[0] = β*^T Γ β*.
  std::vector<double> errors;
};

/// μ_{J,i} = g_{y,i} - g_i(J)^T Γ(J)^{-1} g_y(J) with g_y = Γβ*.
double population_mu(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                     std::span<const Index> J, Index i);

/// E(y(x) - y_J(x))² = β*^T Γ β* - g_y(J)^T Γ(J)^{-1} g_y(J).
double approximation_error(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                           std::span<const Index> J);

/// β*(J) = Γ(J)^{-1} g_y(J).
Eigen::VectorXd population_coefficients(const CovarianceModel& cov,
                                        const Eigen::VectorXd& beta_star,
                                        std::span<const Index> J);

/// True when |μ_l| ≥ ξ·max_j |μ_j|.
bool satisfies_weak_rule(const Eigen::VectorXd& mu, Index l, double xi);

/// Population OGA for up to m_max steps. Always picks the maximizer (smallest
/// index on ties), which satisfies the ξ-weak rule for every ξ ∈ (0, 1].
PopulationPath population_oga(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                              double xi, Index m_max);

struct BestSubset {
  IndexSet indices;
  double error = 0.0;
};

/// Exhaustive minimizer of the population approximation error over subsets of
/// size m. Requires p ≤ 24 and m ≤ 12.
BestSubset best_m_term(const CovarianceModel& cov, const Eigen::VectorXd& beta_star, Index m);

/// ‖β* - β*(J)‖₁ / Σ_{j∉J} |β*_j|.
double baxter_ratio(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                    std::span<const Index> J);

/// Empirical max of ‖Γ(J)^{-1} g_i(J)‖₁ over 1 ≤ ♯J ≤ max_card, i ∉ J.
/// Exhaustive for each cardinality with C(p, ♯J)·p ≤ 1e6, otherwise 1e4
/// uniformly sampled (J, i) pairs drawn from `seed`.
double a5_bound(const CovarianceModel& cov, Index max_card, std::uint64_t seed = 0);

/// C(n, k) as a double (exact for the sizes used here).
double binomial(Index n, Index k);

}  // namespace greedysel
