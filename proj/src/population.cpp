#include "greedysel/population.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace greedysel {

namespace {

constexpr double kPivotFloor = 1e-10;
constexpr Index kMaxExhaustiveP = 24;
constexpr Index kMaxExhaustiveM = 12;
constexpr double kExhaustiveBudget = 1e6;
constexpr int kSampledPairs = 10000;

void check_beta(const CovarianceModel& cov, const Eigen::VectorXd& beta_star) {
  if (beta_star.size() != cov.dim()) {
    throw DimensionMismatch("coefficient length " + std::to_string(beta_star.size()) +
                            " does not match covariance dimension " +
                            std::to_string(cov.dim()));
  }
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const Index> J) {
  Eigen::VectorXd out(static_cast<Index>(J.size()));
  for (std::size_t a = 0; a < J.size(); ++a) out(static_cast<Index>(a)) = v(J[a]);
  return out;
}

/// Calls `visit` for every k-subset of {0..p-1} in lexicographic order.
void for_each_combination(Index p, Index k, const std::function<void(const IndexSet&)>& visit) {
  if (k > p || k < 0) return;
  IndexSet idx(static_cast<std::size_t>(k));
  for (Index a = 0; a < k; ++a) idx[a] = a;
  while (true) {
    visit(idx);
    Index pos = k - 1;
    while (pos >= 0 && idx[pos] == p - k + pos) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (Index a = pos + 1; a < k; ++a) idx[a] = idx[a - 1] + 1;
  }
}

}  // namespace

double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (Index a = 1; a <= k; ++a) {
    out = out * static_cast<double>(n - k + a) / static_cast<double>(a);
  }
  return std::round(out);
}

Eigen::VectorXd population_coefficients(const CovarianceModel& cov,
                                        const Eigen::VectorXd& beta_star,
                                        std::span<const Index> J) {
  check_beta(cov, beta_star);
  if (J.empty()) return Eigen::VectorXd();
  const Eigen::VectorXd g = cov.apply(beta_star);
  return spd_solve(cov.submatrix(J), gather(g, J));
}

double approximation_error(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                           std::span<const Index> J) {
  check_beta(cov, beta_star);
  const Eigen::VectorXd g = cov.apply(beta_star);
  const double total = beta_star.dot(g);
  if (J.empty()) return total;
  const Eigen::VectorXd gJ = gather(g, J);
  return std::max(0.0, total - gJ.dot(spd_solve(cov.submatrix(J), gJ)));
}

double population_mu(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                     std::span<const Index> J, Index i) {
  check_beta(cov, beta_star);
  if (i < 0 || i >= cov.dim()) throw IndexOutOfRange("index " + std::to_string(i + 1));
  const Eigen::VectorXd g = cov.apply(beta_star);
  if (J.empty()) return g(i);
  const Index single[] = {i};
  const Eigen::VectorXd gi = cov.submatrix(J, single).col(0);
  const Eigen::VectorXd coef = spd_solve(cov.submatrix(J), gather(g, J));
  return g(i) - gi.dot(coef);
}

bool satisfies_weak_rule(const Eigen::VectorXd& mu, Index l, double xi) {
  return std::abs(mu(l)) >= xi * mu.cwiseAbs().maxCoeff();
}

PopulationPath population_oga(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                              double xi, Index m_max) {
  check_beta(cov, beta_star);
  if (!(xi > 0.0 && xi <= 1.0)) throw InvalidArgument("xi must lie in (0, 1]");
  const Index p = cov.dim();
  if (m_max < 0 || m_max > p) throw InvalidArgument("m_max must lie in [0, p]");

  PopulationPath path;
  path.xi = xi;
  Eigen::VectorXd mu = cov.apply(beta_star);  // E(u_0 z_j) = g_{y,j}
  double error = beta_star.dot(mu);
  path.errors.push_back(error);

  std::vector<bool> selected(static_cast<std::size_t>(p), false);
  // Normalized partial covariances E(v_k z_j) of the orthogonalized selections.
  std::vector<Eigen::VectorXd> partial;
  for (Index m = 0; m < m_max; ++m) {
    Index l = -1;
    double best = -1.0;
    for (Index j = 0; j < p; ++j) {
      if (selected[j]) continue;
      if (std::abs(mu(j)) > best) {
        best = std::abs(mu(j));
        l = j;
      }
    }
    Eigen::VectorXd c;
    if (cov.is_identity()) {
      c = Eigen::VectorXd::Unit(p, l);
    } else {
      c = cov.column(l);
      for (const auto& w : partial) c -= w(l) * w;
    }
    const double cl = c(l);
    if (!(cl > kPivotFloor)) {
      throw SingularSubcovariance("selected predictor " + std::to_string(l + 1) +
                                  " is numerically in the span of earlier selections");
    }
    const double root = std::sqrt(cl);
    const double step = mu(l) / root;
    if (!cov.is_identity()) {
      c /= root;
      mu -= step * c;
      partial.push_back(std::move(c));
    }
    mu(l) = 0.0;
    selected[l] = true;
    error = std::max(0.0, error - step * step);
    path.indices.push_back(l);
    path.errors.push_back(error);
  }
  return path;
}

BestSubset best_m_term(const CovarianceModel& cov, const Eigen::VectorXd& beta_star, Index m) {
  check_beta(cov, beta_star);
  const Index p = cov.dim();
  if (m < 0 || m > p) throw InvalidArgument("m must lie in [0, p]");
  if (p > kMaxExhaustiveP || m > kMaxExhaustiveM) {
    throw TooLargeForExhaustive("best m-term search over C(" + std::to_string(p) + ", " +
                                std::to_string(m) + ") = " +
                                std::to_string(static_cast<long long>(binomial(p, m))) +
                                " subsets exceeds the exhaustive limit (p <= 24, m <= 12)");
  }

  const Eigen::MatrixXd gamma = cov.dense();
  const Eigen::VectorXd g = gamma * beta_star;
  const double total = beta_star.dot(g);
  BestSubset best;
  best.error = total;
  if (m == 0) return best;

  const double tie_tol = 1e-13 * std::max(1.0, std::abs(total));
  bool found = false;
  IndexSet current;
  // Incremental Cholesky of Γ(J) along the lexicographic depth-first walk;
  // h = L^{-1} g_y(J) so the explained variance is ‖h‖².
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(m);

  std::function<void(Index, Index, double)> descend = [&](Index depth, Index start,
                                                          double explained) {
    for (Index idx = start; idx <= p - (m - depth); ++idx) {
      double diag = gamma(idx, idx);
      for (Index a = 0; a < depth; ++a) {
        double v = gamma(current[a], idx);
        for (Index b = 0; b < a; ++b) v -= chol(a, b) * chol(depth, b);
        chol(depth, a) = v / chol(a, a);
        diag -= chol(depth, a) * chol(depth, a);
      }
      if (!(diag > kPivotFloor)) {
        throw SingularSubcovariance("sub-covariance pivot below 1e-10 in best m-term search");
      }
      chol(depth, depth) = std::sqrt(diag);
      double hv = g(idx);
      for (Index a = 0; a < depth; ++a) hv -= chol(depth, a) * h(a);
      h(depth) = hv / chol(depth, depth);
      const double next = explained + h(depth) * h(depth);
      current.push_back(idx);
      if (depth + 1 == m) {
        const double err = std::max(0.0, total - next);
        if (!found || err < best.error - tie_tol) {
          found = true;
          best.error = err;
          best.indices = current;
        }
      } else {
        descend(depth + 1, idx + 1, next);
      }
      current.pop_back();
    }
  };
  descend(0, 0, 0.0);
  return best;
}

double baxter_ratio(const CovarianceModel& cov, const Eigen::VectorXd& beta_star,
                    std::span<const Index> J) {
  check_beta(cov, beta_star);
  const Index p = cov.dim();
  std::vector<bool> in_j(static_cast<std::size_t>(p), false);
  for (Index j : J) {
    if (j < 0 || j >= p) throw IndexOutOfRange("index " + std::to_string(j + 1));
    in_j[j] = true;
  }
  double tail = 0.0;
  for (Index j = 0; j < p; ++j) {
    if (!in_j[j]) tail += std::abs(beta_star(j));
  }
  if (tail == 0.0) throw DivisionByZeroTail("no coefficient mass outside J");
  const Eigen::VectorXd full =
      J.empty() ? Eigen::VectorXd::Zero(p)
                : embed(J, population_coefficients(cov, beta_star, J), p);
  return (beta_star - full).lpNorm<1>() / tail;
}

double a5_bound(const CovarianceModel& cov, Index max_card, std::uint64_t seed) {
  const Index p = cov.dim();
  if (max_card < 0 || max_card > p - 1) throw InvalidArgument("max_card must lie in [0, p-1]");
  if (cov.is_identity()) return 0.0;
  double bound = 0.0;

  const auto evaluate = [&](const IndexSet& J, std::span<const Index> others) {
    const Eigen::MatrixXd gJ = cov.submatrix(J);
    const Eigen::MatrixXd rhs = cov.submatrix(J, others);
    const Eigen::MatrixXd coef = spd_solve(gJ, rhs);
    bound = std::max(bound, coef.cwiseAbs().colwise().sum().maxCoeff());
  };

  std::mt19937_64 rng(seed);
  for (Index card = 1; card <= max_card; ++card) {
    if (binomial(p, card) * static_cast<double>(p) <= kExhaustiveBudget) {
      IndexSet others;
      for_each_combination(p, card, [&](const IndexSet& J) {
        others.clear();
        Index a = 0;
        for (Index j = 0; j < p; ++j) {
          if (a < card && J[a] == j) {
            ++a;
          } else {
            others.push_back(j);
          }
        }
        evaluate(J, others);
      });
    } else {
      IndexSet all(static_cast<std::size_t>(p));
      for (Index j = 0; j < p; ++j) all[j] = j;
      for (int s = 0; s < kSampledPairs; ++s) {
        // Partial Fisher-Yates: the first card+1 entries are a uniform draw.
        for (Index a = 0; a <= card; ++a) {
          std::uniform_int_distribution<Index> pick(a, p - 1);
          std::swap(all[a], all[pick(rng)]);
        }
        const IndexSet J(all.begin(), all.begin() + card);
        const Index i[] = {all[card]};
        evaluate(J, i);
      }
    }
  }
  return bound;
}

}  // namespace greedysel
