#include "greedysel/oga.hpp"

#include <cmath>
#include <string>

namespace greedysel {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kExactFitTol = 1e-12;

OrthonormalBasis basis_for(const StandardizedDesign& design, std::span<const Index> J) {
  OrthonormalBasis basis(design.n(), static_cast<Index>(J.size()));
  for (Index j : J) {
    if (j < 0 || j >= design.p()) throw IndexOutOfRange("index " + std::to_string(j + 1));
    if (!basis.append(design.z.col(j))) {
      throw SingularProjection("column " + std::to_string(j + 1) +
                               " is numerically in the span of the preceding columns");
    }
  }
  return basis;
}

Eigen::VectorXd back_substitute(const Eigen::MatrixXd& r, const Eigen::VectorXd& rhs) {
  return r.triangularView<Eigen::Upper>().solve(rhs);
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(Index n, Index capacity)
    : q_(n, std::max<Index>(capacity, 1)), r_(std::max<Index>(capacity, 1), std::max<Index>(capacity, 1)) {}

bool OrthonormalBasis::append(const Eigen::Ref<const Eigen::VectorXd>& column) {
  const double original = column.norm();
  if (!(original > 0.0)) return false;
  Eigen::VectorXd v = column;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(size_);
  if (size_ > 0) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Index k = 0; k < size_; ++k) {
        const double c = q_.col(k).dot(v);
        v -= c * q_.col(k);
        h(k) += c;
      }
    }
  }
  const double rest = v.norm();
  if (rest < kRankTol * original) return false;

  if (size_ == q_.cols()) {
    const Index grow = 2 * q_.cols();
    q_.conservativeResize(Eigen::NoChange, grow);
    Eigen::MatrixXd bigger = Eigen::MatrixXd::Zero(grow, grow);
    bigger.topLeftCorner(size_, size_) = r_.topLeftCorner(size_, size_);
    r_ = std::move(bigger);
  }
  q_.col(size_) = v / rest;
  r_.col(size_).head(size_) = h;
  r_.col(size_).tail(r_.rows() - size_).setZero();
  r_(size_, size_) = rest;
  ++size_;
  return true;
}

Eigen::VectorXd OrthonormalBasis::residual(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = v;
  for (int pass = 0; pass < 2; ++pass) {
    for (Index k = 0; k < size_; ++k) out -= q_.col(k).dot(out) * q_.col(k);
  }
  return out;
}

double mu_hat(const StandardizedDesign& design, const Eigen::VectorXd& y,
              std::span<const Index> J, Index i) {
  if (y.size() != design.n()) throw DimensionMismatch("response length does not match design");
  if (i < 0 || i >= design.p()) throw IndexOutOfRange("index " + std::to_string(i + 1));
  for (Index j : J) {
    if (j == i) throw InvalidArgument("candidate index is already in J");
  }
  const OrthonormalBasis basis = basis_for(design, J);
  const double zi_norm = design.z.col(i).norm();
  if (!(zi_norm > 0.0)) throw ZeroVarianceColumn(i);
  const Eigen::VectorXd resid = basis.residual(y);
  return design.z.col(i).dot(resid) /
         (std::sqrt(static_cast<double>(design.n())) * zi_norm);
}

SelectionPath fit_path(const StandardizedDesign& design, const Eigen::VectorXd& y,
                       Index max_steps) {
  const Index n = design.n();
  const Index p = design.p();
  if (y.size() != n) throw DimensionMismatch("response length does not match design");
  if (max_steps < 1) throw InvalidArgument("OGA needs at least one step");
  const Index budget = std::min({max_steps, p, n - 1});

  const Eigen::MatrixXd& z = design.z;
  const Eigen::VectorXd col_norm = z.colwise().norm().transpose();
  std::vector<bool> available(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) available[j] = col_norm(j) > 0.0;

  SelectionPath path;
  path.n = n;
  path.p = p;
  path.rss.push_back(y.squaredNorm());
  path.indices.reserve(budget);

  OrthonormalBasis basis(n, budget);
  Eigen::VectorXd resid = y;
  Eigen::VectorXd corr = z.transpose() * y;  // Z^T (I - H) Y
  Eigen::VectorXd qty(budget);
  const double y_norm = y.norm();

  for (Index m = 0; m < budget; ++m) {
    if (resid.norm() <= kExactFitTol * y_norm) {
      path.stop = StopReason::exact_fit;
      break;
    }
    Index chosen = -1;
    while (true) {
      double best = -1.0;
      chosen = -1;
      for (Index j = 0; j < p; ++j) {
        if (!available[j]) continue;
        const double score = std::abs(corr(j)) / col_norm(j);
        if (score > best) {
          best = score;
          chosen = j;
        }
      }
      if (chosen < 0) break;
      // Once a column falls in the selected span it stays there.
      available[chosen] = false;
      if (basis.append(z.col(chosen))) break;
    }
    if (chosen < 0) {
      path.stop = StopReason::exhausted;
      break;
    }

    const auto q = basis.q().col(m);
    const double proj = q.dot(resid);
    qty(m) = proj;
    resid -= proj * q;
    corr.noalias() -= proj * (z.transpose() * q);

    path.indices.push_back(chosen);
    path.rss.push_back(std::min(resid.squaredNorm(), path.rss.back()));
    path.coeffs.push_back(back_substitute(basis.r(), qty.head(m + 1)));
  }
  return path;
}

Eigen::VectorXd ls_coefficients(const StandardizedDesign& design, const Eigen::VectorXd& y,
                                std::span<const Index> J) {
  if (y.size() != design.n()) throw DimensionMismatch("response length does not match design");
  const OrthonormalBasis basis = basis_for(design, J);
  const Eigen::VectorXd qty = basis.q().transpose() * y;
  return back_substitute(basis.r(), qty);
}

}  // namespace greedysel
