#include "greedysel/model.hpp"

#include <cmath>
#include <string>

namespace greedysel {

namespace {

constexpr double kZeroRms = 1e-12;
constexpr double kUnitDiagonalTol = 1e-10;
constexpr double kPivotFloor = 1e-10;

bool is_zero_column(const Eigen::MatrixXd& x, Index j) {
  return (x.col(j).array() == 0.0).all();
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x) : y_(std::move(y)), x_(std::move(x)) {
  if (x_.rows() < 2) throw DimensionMismatch("dataset needs n >= 2 observations");
  if (x_.cols() < 1) throw DimensionMismatch("dataset needs p >= 1 predictors");
  if (y_.size() != x_.rows()) {
    throw DimensionMismatch("response length " + std::to_string(y_.size()) +
                            " does not match " + std::to_string(x_.rows()) + " rows");
  }
  for (Index j = 0; j < x_.cols(); ++j) {
    if (is_zero_column(x_, j)) throw ZeroVarianceColumn(j);
  }
}

StandardizedDesign standardize(const Eigen::MatrixXd& x, ScaleMode mode,
                               const std::optional<Eigen::VectorXd>& sigma) {
  const Index n = x.rows();
  const Index p = x.cols();
  StandardizedDesign out;
  out.mode = mode;
  out.scale.resize(p);
  if (mode == ScaleMode::sample_rms) {
    for (Index j = 0; j < p; ++j) {
      const double rms = x.col(j).norm() / std::sqrt(static_cast<double>(n));
      if (!(rms >= kZeroRms)) throw ZeroVarianceColumn(j);
      out.scale(j) = rms;
    }
  } else {
    if (!sigma) throw InvalidArgument("population-sigma standardization needs sigma");
    if (sigma->size() != p) {
      throw DimensionMismatch("sigma has length " + std::to_string(sigma->size()) +
                              ", expected " + std::to_string(p));
    }
    for (Index j = 0; j < p; ++j) {
      if (!((*sigma)(j) > 0.0)) throw InvalidArgument("sigma entries must be positive");
    }
    out.scale = *sigma;
  }
  out.z = x * out.scale.cwiseInverse().asDiagonal();
  return out;
}

StandardizedDesign standardize(const Dataset& data, ScaleMode mode,
                               const std::optional<Eigen::VectorXd>& sigma) {
  return standardize(data.x(), mode, sigma);
}

// --- coefficient regimes -----------------------------------------------------

void CoefficientSpec::validate() const {
  if (p < 1) throw InvalidSpec("p", "must be at least 1");
  std::visit(
      [this](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PolynomialDecay>) {
          if (!(r.gamma >= 1.0)) throw InvalidSpec("gamma", "must be >= 1");
          if (!(r.lower > 0.0)) throw InvalidSpec("L", "must be positive");
          if (!(r.upper >= r.lower)) throw InvalidSpec("U", "must be >= L");
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          if (!(r.rate > 0.0)) throw InvalidSpec("rate", "must be positive");
          if (!(r.lower > 0.0)) throw InvalidSpec("L1", "must be positive");
          if (!(r.upper >= r.lower)) throw InvalidSpec("U1", "must be >= L1");
        } else {
          if (r.k0 < 0 || r.k0 > p) throw InvalidSpec("k0", "must lie in [0, p]");
          if (!(r.theta_min > 0.0)) throw InvalidSpec("theta_min", "must be positive");
          if (!(r.theta_max >= r.theta_min)) throw InvalidSpec("theta_max", "must be >= theta_min");
        }
      },
      regime);
}

double CoefficientSpec::lower_envelope(Index rank) const {
  return std::visit(
      [rank](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        const double j = static_cast<double>(rank);
        if constexpr (std::is_same_v<T, PolynomialDecay>) {
          return r.lower * std::pow(j, -r.gamma);
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return r.lower * std::exp(-r.rate * j);
        } else {
          return rank <= r.k0 ? r.theta_min : 0.0;
        }
      },
      regime);
}

double CoefficientSpec::upper_envelope(Index rank) const {
  return std::visit(
      [rank](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        const double j = static_cast<double>(rank);
        if constexpr (std::is_same_v<T, PolynomialDecay>) {
          return r.upper * std::pow(j, -r.gamma);
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return r.upper * std::exp(-r.rate * j);
        } else {
          return rank <= r.k0 ? r.theta_max : 0.0;
        }
      },
      regime);
}

CoefficientVector CoefficientVector::from_standardized(Eigen::VectorXd beta_star,
                                                       const Eigen::VectorXd& scale) {
  if (scale.size() != beta_star.size()) throw DimensionMismatch("scale length mismatch");
  CoefficientVector out;
  out.beta = beta_star.cwiseQuotient(scale);
  out.beta_star = std::move(beta_star);
  return out;
}

CoefficientVector CoefficientVector::from_raw(Eigen::VectorXd beta, const Eigen::VectorXd& scale) {
  if (scale.size() != beta.size()) throw DimensionMismatch("scale length mismatch");
  CoefficientVector out;
  out.beta_star = beta.cwiseProduct(scale);
  out.beta = std::move(beta);
  return out;
}

// --- covariance --------------------------------------------------------------

CovarianceModel CovarianceModel::identity(Index p) {
  if (p < 1) throw DimensionMismatch("covariance dimension must be positive");
  return CovarianceModel(Form::identity, p, Eigen::MatrixXd());
}

CovarianceModel CovarianceModel::from_matrix(Eigen::MatrixXd gamma, Form form) {
  if (gamma.rows() != gamma.cols() || gamma.rows() < 1) {
    throw DimensionMismatch("covariance matrix must be square and nonempty");
  }
  const Index p = gamma.rows();
  for (Index k = 0; k < p; ++k) {
    if (std::abs(gamma(k, k) - 1.0) > kUnitDiagonalTol) {
      throw InvalidArgument("covariance diagonal entry " + std::to_string(k + 1) +
                            " differs from 1");
    }
    for (Index l = 0; l < k; ++l) {
      if (std::abs(gamma(k, l) - gamma(l, k)) > kUnitDiagonalTol) {
        throw InvalidArgument("covariance matrix is not symmetric");
      }
    }
  }
  if (form == Form::identity) form = Form::explicit_matrix;
  return CovarianceModel(form, p, std::move(gamma));
}

void CovarianceModel::check_index(Index k) const {
  if (k < 0 || k >= p_) {
    throw IndexOutOfRange("index " + std::to_string(k + 1) + " outside 1.." + std::to_string(p_));
  }
}

double CovarianceModel::operator()(Index k, Index l) const {
  check_index(k);
  check_index(l);
  if (is_identity()) return k == l ? 1.0 : 0.0;
  return gamma_(k, l);
}

Eigen::VectorXd CovarianceModel::column(Index l) const {
  check_index(l);
  if (is_identity()) return Eigen::VectorXd::Unit(p_, l);
  return gamma_.col(l);
}

Eigen::MatrixXd CovarianceModel::submatrix(std::span<const Index> rows,
                                           std::span<const Index> cols) const {
  for (Index k : rows) check_index(k);
  for (Index k : cols) check_index(k);
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(cols.size());
  Eigen::MatrixXd out(r, c);
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < c; ++b) {
      out(a, b) = is_identity() ? (rows[a] == cols[b] ? 1.0 : 0.0) : gamma_(rows[a], cols[b]);
    }
  }
  return out;
}

Eigen::VectorXd CovarianceModel::apply(const Eigen::VectorXd& v) const {
  if (v.size() != p_) throw DimensionMismatch("vector length does not match covariance");
  if (is_identity()) return v;
  return gamma_.selfadjointView<Eigen::Lower>() * v;
}

double CovarianceModel::quadratic_form(const Eigen::VectorXd& v) const {
  if (v.size() != p_) throw DimensionMismatch("vector length does not match covariance");
  if (is_identity()) return v.squaredNorm();
  // Restrict to the support: coefficient differences are usually sparse.
  IndexSet support;
  for (Index k = 0; k < p_; ++k) {
    if (v(k) != 0.0) support.push_back(k);
  }
  if (2 * static_cast<Index>(support.size()) > p_) return v.dot(apply(v));
  double total = 0.0;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const Index k = support[a];
    double row = 0.0;
    for (std::size_t b = 0; b < support.size(); ++b) row += gamma_(k, support[b]) * v(support[b]);
    total += v(k) * row;
  }
  return total;
}

Eigen::MatrixXd CovarianceModel::dense() const {
  if (is_identity()) return Eigen::MatrixXd::Identity(p_, p_);
  return gamma_;
}

Eigen::MatrixXd submatrix_cov(const CovarianceModel& model, std::span<const Index> J) {
  if (J.empty()) throw InvalidArgument("index set must be nonempty");
  return model.submatrix(J);
}

namespace {

Eigen::LDLT<Eigen::MatrixXd> checked_ldlt(const Eigen::MatrixXd& a) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > kPivotFloor)) {
    throw SingularSubcovariance("sub-covariance pivot below 1e-10");
  }
  return ldlt;
}

}  // namespace

Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() == 0) return Eigen::VectorXd();
  return checked_ldlt(a).solve(b);
}

Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0) return Eigen::MatrixXd(0, b.cols());
  return checked_ldlt(a).solve(b);
}

Eigen::VectorXd embed(std::span<const Index> J, const Eigen::VectorXd& values, Index p) {
  if (static_cast<Index>(J.size()) != values.size()) {
    throw DimensionMismatch("coefficient count does not match index set");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (std::size_t a = 0; a < J.size(); ++a) {
    if (J[a] < 0 || J[a] >= p) throw IndexOutOfRange("index outside predictor range");
    out(J[a]) = values(static_cast<Index>(a));
  }
  return out;
}

}  // namespace greedysel
