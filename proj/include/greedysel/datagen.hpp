#pragma once

// Coefficient generators and simulators for stationary dependent predictor
// processes (linear processes and ARX models) with exact population
// covariances.

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

#include "greedysel/model.hpp"

namespace greedysel {

/// Draws β* for `spec`. Sorted magnitudes always respect the regime envelope:
/// the k-th largest of values each inside [lower(j), upper(j)] for a
/// decreasing envelope stays inside [lower(k), upper(k)].
Eigen::VectorXd gen_coefficients(const CoefficientSpec& spec, std::uint64_t seed);

// --- linear processes ----------------------------------------------------------

/// Contribution of one innovation component to a channel:
/// Σ_j lag_weights[j]·δ_{t-j, innovation}.
struct ChannelTerm {
  Index innovation = 0;
  std::vector<double> lag_weights;
};

/// One observed series: the sum of its terms.
struct Channel {
  std::vector<ChannelTerm> terms;

  double l1_mass() const;
  std::size_t length() const;  ///< longest lag window
};

struct GaussianInnovations {
  /// q×q covariance of δ_t; empty means identity.
  Eigen::MatrixXd covariance;
};

/// Independent components uniform on [-√3·scale, √3·scale] (variance scale²).
struct UniformInnovations {
  double scale = 1.0;
};

using InnovationLaw = std::variant<GaussianInnovations, UniformInnovations>;

/// x_tl = Σ_j w_j(l)^T δ_{t-j}, ε_t = Σ_j w_j(0)^T δ_{t-j}, with the weights
/// stored sparsely per innovation component.
struct LinearProcessSpec {
  Index q = 1;
  Channel noise;
  std::vector<Channel> predictors;
  Index truncation_lag = -1;  ///< weights beyond this lag are dropped (mass < 1e-10 checked); -1 keeps all
  InnovationLaw innovation = GaussianInnovations{};
  double weight_bound = 1e3;  ///< M₂

  Index p() const noexcept { return static_cast<Index>(predictors.size()); }
  /// Checks the bounds and truncates every channel at `truncation_lag`.
  void validate_and_truncate();
};

/// A simulated regression sample and the noise that produced it.
struct Sample {
  Eigen::MatrixXd x;
  Eigen::VectorXd noise;
  Eigen::VectorXd y;  ///< empty until a response is attached
};

/// Simulates n observations of the predictors and the noise channel.
Sample simulate_linear_process(const LinearProcessSpec& spec, Index n, std::uint64_t seed);

/// y_t = x_t^T β + ε_t.
void attach_response(Sample& sample, const Eigen::VectorXd& beta);

// --- ARX -------------------------------------------------------------------------

/// x_t^{(l)} = e_t + Σ_j ma[j-1]·e_{t-j}, entering y_t with coefficients
/// beta[j-1] on x_{t-j+1}^{(l)}, j = 1..r_l.
struct ExogenousSeries {
  std::vector<double> ma;
  std::vector<double> beta;
};

struct ArxSpec {
  std::vector<double> ar;  ///< a_1..a_{q0}
  std::vector<ExogenousSeries> exogenous;
  double noise_sd = 1.0;
  Index burn_in = 500;
  double stability_margin = 0.05;  ///< ι
  double coefficient_bound = 1e3;  ///< M₅
  double ma_bound = 1e3;           ///< M₆

  Index q0() const noexcept { return static_cast<Index>(ar.size()); }
  Index p() const noexcept;
  /// Throws UnstableAR or InvalidSpec.
  void validate() const;
  /// Raw regression coefficients in design-column order: (a, β^{(1)}, β^{(2)}, ...).
  Eigen::VectorXd design_coefficients() const;
};

/// Largest modulus among the reciprocal roots of 1 - Σ a_j z^j.
double ar_spectral_radius(const std::vector<double>& ar);

/// MA(∞) weights ψ of 1 / (1 - Σ a_j z^j), truncated once the remaining ℓ₁
/// mass is below 1e-10 of the total.
std::vector<double> ar_to_ma(const std::vector<double>& ar);

/// Simulates y with burn-in and packs the design as (y_{t-1}..y_{t-q0},
/// x_t^{(1)}..x_{t-r_1+1}^{(1)}, ...).
Sample simulate_arx(const ArxSpec& spec, Index n, std::uint64_t seed);

/// Linear-process representation of the ARX design columns and noise, with
/// one innovation per exogenous series plus the noise innovation.
LinearProcessSpec to_linear_process(const ArxSpec& spec);

// --- population covariance ----------------------------------------------------------

struct PopulationCovariance {
  CovarianceModel gamma;
  Eigen::VectorXd sigma;  ///< σ_j = (E x_tj²)^{1/2}
  double noise_variance = 0.0;
};

PopulationCovariance population_covariance(const LinearProcessSpec& spec);
PopulationCovariance population_covariance(const ArxSpec& spec);

/// E(x_tk x_tl) from the MA weights, before normalization.
double channel_covariance(const Channel& a, const Channel& b, const InnovationLaw& law);

}  // namespace greedysel
