#pragma once

// Exact conditional prediction error against a known population covariance,
// Monte Carlo experiments over (n, p) grids and rate-slope fitting.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "greedysel/datagen.hpp"
#include "greedysel/hdaic.hpp"
#include "greedysel/model.hpp"

namespace greedysel {

/// d^T Γ d with d = β* - embed(J, β̂*(J)).
double cmspe(const Eigen::VectorXd& beta_star_true, std::span<const Index> J,
             const Eigen::VectorXd& beta_hat_on_J, const CovarianceModel& cov);

struct CmspeDecomposition {
  double bias = 0.0;           ///< E(y(x) - y_J(x))²
  double variance_term = 0.0;  ///< (β̂*(J) - β*(J))^T Γ(J) (β̂*(J) - β*(J))
};

CmspeDecomposition cmspe_decomposition(const Eigen::VectorXd& beta_star_true,
                                       std::span<const Index> J,
                                       const Eigen::VectorXd& beta_hat_on_J,
                                       const CovarianceModel& cov);

// --- process templates ------------------------------------------------------------

/// x_tl = δ_{t,l} + theta·δ_{t-1,l} + factor·f_t with a shared factor
/// f_t = δ_{t,common}; ε_t = noise_sd·(η_t + noise_theta·η_{t-1}).
/// theta = factor = noise_theta = 0 gives i.i.d. Gaussian rows.
struct MovingAverageTemplate {
  double theta = 0.0;
  double factor = 0.0;
  double noise_sd = 1.0;
  double noise_theta = 0.0;
  bool uniform_innovations = false;
};

/// ARX with fixed AR coefficients; the p - q0 exogenous columns come in
/// series of `lags_per_series` lags of an MA process with weights `exog_ma`.
/// Their standardized coefficients are drawn from the coefficient spec.
struct ArxTemplate {
  std::vector<double> ar{0.4};
  Index lags_per_series = 2;
  std::vector<double> exog_ma{0.5};
  double noise_sd = 1.0;
  Index burn_in = 500;
};

using ProcessTemplate = std::variant<MovingAverageTemplate, ArxTemplate>;

/// A fully specified data-generating process at a fixed p.
struct ProcessInstance {
  std::variant<LinearProcessSpec, ArxSpec> process;
  PopulationCovariance population;
  CoefficientVector coefficients;  ///< β* in population-standardized units

  Index p() const { return coefficients.beta.size(); }
  /// Simulated sample with the response attached.
  Sample simulate(Index n, std::uint64_t seed) const;
};

/// Builds the process for `p` predictors; the coefficient spec's p is overridden.
ProcessInstance instantiate(const ProcessTemplate& process, CoefficientSpec coefficients, Index p,
                            std::uint64_t coefficient_seed);

// --- experiments ---------------------------------------------------------------------

struct PRule {
  enum class Kind { fixed, equal, multiple, power };
  Kind kind = Kind::equal;
  double value = 1.0;  ///< p for fixed, factor for multiple, exponent for power

  Index apply(Index n) const;
};

struct ExperimentConfig {
  ProcessTemplate process = MovingAverageTemplate{};
  CoefficientSpec coefficients;
  std::vector<Index> n_grid;
  PRule p_rule;
  Index replications = 1;
  PenaltyConfig penalty;
  std::uint64_t root_seed = 0;

  void validate() const;
};

struct ReplicationOutcome {
  bool ok = false;
  std::string error;
  double cmspe = 0.0;         ///< at k̂_n
  Index k_hat = 0;
  Index K_n = 0;
  double oracle_cmspe = 0.0;  ///< min over 1..K_n of the exact CMSPE along the path
  Index oracle_k = 0;
  bool support_covered = false;  ///< N_n ⊆ Ĵ_{k̂}
  bool support_exact = false;    ///< N_n = Ĵ_{k̂}
};

struct CellResult {
  Index n = 0;
  Index p = 0;
  double mean_cmspe = 0.0;
  double se_cmspe = 0.0;
  double mean_k_hat = 0.0;
  std::optional<double> support_recovery;  ///< strong regime only
  std::optional<double> exact_recovery;    ///< strong regime only
  double median_oracle_ratio = 0.0;
  double mean_oracle_cmspe = 0.0;
  Index failures = 0;
  double rate_x = 0.0;  ///< log of the regime's rate driver
  std::vector<ReplicationOutcome> outcomes;
};

struct RateFit {
  double slope = 0.0;
  double half_width = 0.0;
  double intercept = 0.0;
  Index cells = 0;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::optional<RateFit> fit;
  std::string driver;  ///< which rate the slope refers to
  Index failures = 0;
};

/// Log of the theoretical rate driver for the coefficient regime:
/// polynomial ln(ln p / n), exponential ln(ln n·ln p / n), strong ln(k0·ln p / n).
double rate_driver(const SparsityRegime& regime, Index n, Index p);
std::string rate_driver_name(const SparsityRegime& regime);

/// Runs every (n, p) cell; results do not depend on `threads`.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

/// OLS slope of ln(mean_cmspe) on x with a 95% half-width.
RateFit rate_slope(std::span<const std::pair<double, double>> cells);

struct ConcentrationDiagnostics {
  double r1p = 0.0;  ///< max_{k,l} |n^{-1} Σ z_tk z_tl - ρ_kl|
  double r2p = 0.0;  ///< max_j |n^{-1} Σ z_tj ε_t|
  double scaled_r1 = 0.0;
  double scaled_r2 = 0.0;
};

/// `z` must be standardized by the population σ.
ConcentrationDiagnostics concentration_diagnostics(const Eigen::MatrixXd& z,
                                                   const CovarianceModel& cov,
                                                   const Eigen::VectorXd& epsilon);

/// Neumaier-compensated sum in the given order.
double compensated_sum(std::span<const double> values);

}  // namespace greedysel
