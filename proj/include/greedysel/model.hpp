#pragma once

// Shared domain types: observed samples, standardized designs, coefficient
// regimes and population covariance models.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "greedysel/errors.hpp"

namespace greedysel {

using Index = Eigen::Index;
/// Ordered set of 0-based predictor indices.
using IndexSet = std::vector<Index>;

/// Observed response vector and n×p predictor matrix.
class Dataset {
 public:
  /// Throws DimensionMismatch on inconsistent shapes or n < 2, p < 1, and
  /// ZeroVarianceColumn for an identically zero predictor column.
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x);

  const Eigen::VectorXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  Index n() const noexcept { return x_.rows(); }
  Index p() const noexcept { return x_.cols(); }

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
};

enum class ScaleMode { sample_rms, population_sigma };

struct StandardizedDesign {
  Eigen::MatrixXd z;
  Eigen::VectorXd scale;
  ScaleMode mode = ScaleMode::sample_rms;

  Index n() const noexcept { return z.rows(); }
  Index p() const noexcept { return z.cols(); }
};

/// Divides each column by its root mean square (sample-rms) or by the supplied
/// population standard deviation (population-sigma).
StandardizedDesign standardize(const Eigen::MatrixXd& x, ScaleMode mode = ScaleMode::sample_rms,
                               const std::optional<Eigen::VectorXd>& sigma = std::nullopt);
StandardizedDesign standardize(const Dataset& data, ScaleMode mode = ScaleMode::sample_rms,
                               const std::optional<Eigen::VectorXd>& sigma = std::nullopt);

// --- coefficient regimes -----------------------------------------------------

/// |β*_(j)| ∈ [lower·j^{-gamma}, upper·j^{-gamma}] for the sorted magnitudes.
struct PolynomialDecay {
  double gamma = 2.0;
  double lower = 1.0;
  double upper = 1.0;
};

/// |β*_(j)| ∈ [lower·exp(-rate·j), upper·exp(-rate·j)].
struct ExponentialDecay {
  double rate = 0.5;
  double lower = 1.0;
  double upper = 1.0;
};

/// Exactly k0 nonzero entries with magnitudes in [theta_min, theta_max].
struct StrongSparsity {
  Index k0 = 5;
  double theta_min = 1.0;
  double theta_max = 1.0;
};

using SparsityRegime = std::variant<PolynomialDecay, ExponentialDecay, StrongSparsity>;

enum class Ordering { identity, random };
enum class SignPattern { positive, random };

struct CoefficientSpec {
  SparsityRegime regime = PolynomialDecay{};
  Index p = 1;
  Ordering ordering = Ordering::identity;
  SignPattern signs = SignPattern::positive;

  /// Throws InvalidSpec naming the first offending field.
  void validate() const;

  /// Magnitude envelope for the rank-th largest coefficient (1-based rank).
  /// Both bounds are zero beyond k0 in the strong regime.
  double lower_envelope(Index rank) const;
  double upper_envelope(Index rank) const;
};

/// Standardized coefficients β*_j = σ_j β_j alongside the raw β_j.
struct CoefficientVector {
  Eigen::VectorXd beta_star;
  Eigen::VectorXd beta;

  static CoefficientVector from_standardized(Eigen::VectorXd beta_star,
                                             const Eigen::VectorXd& scale);
  static CoefficientVector from_raw(Eigen::VectorXd beta, const Eigen::VectorXd& scale);
};

// --- population covariance ---------------------------------------------------

/// Correlation matrix Γ of the population-standardized predictors.
class CovarianceModel {
 public:
  enum class Form { explicit_matrix, identity, derived_from_process };

  static CovarianceModel identity(Index p);
  /// Validates symmetry and unit diagonal to 1e-10.
  static CovarianceModel from_matrix(Eigen::MatrixXd gamma, Form form = Form::explicit_matrix);

  Form form() const noexcept { return form_; }
  Index dim() const noexcept { return p_; }
  bool is_identity() const noexcept { return form_ == Form::identity; }

  double operator()(Index k, Index l) const;
  Eigen::VectorXd column(Index l) const;
  /// Γ(J); throws IndexOutOfRange.
  Eigen::MatrixXd submatrix(std::span<const Index> rows, std::span<const Index> cols) const;
  Eigen::MatrixXd submatrix(std::span<const Index> idx) const { return submatrix(idx, idx); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  double quadratic_form(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd dense() const;

 private:
  CovarianceModel(Form form, Index p, Eigen::MatrixXd gamma)
      : form_(form), p_(p), gamma_(std::move(gamma)) {}

  void check_index(Index k) const;

  Form form_;
  Index p_;
  Eigen::MatrixXd gamma_;  // empty for identity
};

/// Γ(J) = E{z_t(J) z_t(J)^T}.
Eigen::MatrixXd submatrix_cov(const CovarianceModel& model, std::span<const Index> J);

/// Solves A x = b for symmetric positive-definite A with an LDLT pivot floor
/// of 1e-10; throws SingularSubcovariance below the floor.
Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);
Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Embeds a |J|-vector into p dimensions with zeros off J.
Eigen::VectorXd embed(std::span<const Index> J, const Eigen::VectorXd& values, Index p);

}  // namespace greedysel
