#pragma once

// High-dimensional AIC stopping rule along an OGA path.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "greedysel/model.hpp"
#include "greedysel/oga.hpp"

namespace greedysel {

struct PenaltyConfig {
  enum class Source { fixed, calibrated };

  double s_a = 2.0;
  double delta_bar = 5.0;
  Source source = Source::fixed;

  void validate() const;
};

struct SelectionResult {
  Index k_hat = 0;                      ///< 1-based step count
  std::vector<double> criterion_values; ///< HDAIC(Ĵ_k), k = 1..K_n
  Index K_n = 0;
  double s_a = 0.0;

  double minimum() const { return criterion_values.at(k_hat - 1); }
};

/// (1 + s_a·card·ln p / n)·σ̂².
double hdaic(Index card, double sigma_hat_sq, Index n, Index p, double s_a);

/// max(1, floor(δ̄·(n / ln p)^{1/2})), capped at min(p, n - 1).
Index horizon(Index n, Index p, double delta_bar);

/// k̂_n = argmin over 1..K_n of HDAIC(Ĵ_k), ties to the smallest k.
SelectionResult select(const SelectionPath& path, const PenaltyConfig& config);

struct CalibrationResult {
  PenaltyConfig config;
  std::vector<double> grid;    ///< candidates in ascending order
  std::vector<double> scores;  ///< mean held-out squared error per candidate
};

/// Chooses s_a from `grid` by forward-chaining time-ordered validation: fold k
/// (k = 1..folds-1) trains on the first ceil(n·k/folds) observations and scores
/// one-step prediction error on the next block. Ties go to the smallest s_a.
CalibrationResult calibrate_sa(const StandardizedDesign& design, const Eigen::VectorXd& y,
                               std::span<const double> grid, Index folds,
                               double delta_bar = 5.0);

}  // namespace greedysel
