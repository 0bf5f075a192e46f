#include "greedysel/hdaic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace greedysel {

void PenaltyConfig::validate() const {
  if (!(s_a > 0.0)) throw InvalidPenalty("s_a must be positive");
  if (!(delta_bar > 0.0)) throw InvalidPenalty("delta_bar must be positive");
}

double hdaic(Index card, double sigma_hat_sq, Index n, Index p, double s_a) {
  if (!(s_a > 0.0)) throw InvalidPenalty("s_a must be positive");
  if (p < 2) throw InvalidArgument("HDAIC needs p >= 2");
  if (n < 1) throw InvalidArgument("HDAIC needs n >= 1");
  const double factor = 1.0 + s_a * static_cast<double>(card) * std::log(static_cast<double>(p)) /
                                  static_cast<double>(n);
  return factor * sigma_hat_sq;
}

Index horizon(Index n, Index p, double delta_bar) {
  if (n < 2 || p < 2) throw InvalidArgument("horizon needs n >= 2 and p >= 2");
  const double raw =
      delta_bar * std::sqrt(static_cast<double>(n) / std::log(static_cast<double>(p)));
  const auto steps = std::max<Index>(1, static_cast<Index>(std::floor(raw)));
  return std::min({steps, p, n - 1});
}

SelectionResult select(const SelectionPath& path, const PenaltyConfig& config) {
  config.validate();
  if (path.steps() < 1) throw InvalidArgument("selection needs a path with at least one step");
  SelectionResult out;
  out.s_a = config.s_a;
  out.K_n = std::min(horizon(path.n, path.p, config.delta_bar), path.steps());
  out.criterion_values.reserve(out.K_n);
  const double n = static_cast<double>(path.n);
  double best = 0.0;
  for (Index k = 1; k <= out.K_n; ++k) {
    const double value = hdaic(k, path.rss[k] / n, path.n, path.p, config.s_a);
    out.criterion_values.push_back(value);
    if (k == 1 || value < best) {
      best = value;
      out.k_hat = k;
    }
  }
  return out;
}

CalibrationResult calibrate_sa(const StandardizedDesign& design, const Eigen::VectorXd& y,
                               std::span<const double> grid, Index folds, double delta_bar) {
  if (grid.empty()) throw InvalidArgument("calibration grid is empty");
  for (double s : grid) {
    if (!(s > 0.0)) throw InvalidPenalty("calibration grid entries must be positive");
  }
  if (folds < 2) throw InvalidArgument("calibration needs at least two folds");
  const Index n = design.n();
  const Index p = design.p();
  if (y.size() != n) throw DimensionMismatch("response length does not match design");
  if (n < 2 * folds) {
    throw InsufficientData("calibration needs n >= 2·folds (n = " + std::to_string(n) + ")");
  }

  CalibrationResult out;
  out.grid.assign(grid.begin(), grid.end());
  std::sort(out.grid.begin(), out.grid.end());
  out.grid.erase(std::unique(out.grid.begin(), out.grid.end()), out.grid.end());
  out.scores.assign(out.grid.size(), 0.0);

  const auto block_end = [&](Index k) {
    return static_cast<Index>((n * k + folds - 1) / folds);  // ceil(n·k / folds)
  };
  Index evaluated = 0;
  for (Index k = 1; k < folds; ++k) {
    const Index train_n = block_end(k);
    const Index test_end = block_end(k + 1);
    if (train_n < 2) throw InsufficientData("training block has fewer than 2 observations");
    if (test_end <= train_n) continue;

    StandardizedDesign train;
    train.z = design.z.topRows(train_n);
    train.scale = design.scale;
    train.mode = design.mode;
    const Eigen::VectorXd train_y = y.head(train_n);
    const Index budget = horizon(train_n, std::max<Index>(p, 2), delta_bar);
    const SelectionPath path = fit_path(train, train_y, budget);
    if (path.steps() < 1) throw InsufficientData("training block admits no OGA step");

    const auto test_rows = design.z.middleRows(train_n, test_end - train_n);
    const auto test_y = y.segment(train_n, test_end - train_n);
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
      PenaltyConfig cfg{out.grid[g], delta_bar, PenaltyConfig::Source::fixed};
      const SelectionResult sel = select(path, cfg);
      const IndexSet J = path.prefix(sel.k_hat);
      const Eigen::VectorXd& b = path.coeffs[sel.k_hat - 1];
      Eigen::VectorXd pred = Eigen::VectorXd::Zero(test_rows.rows());
      for (std::size_t a = 0; a < J.size(); ++a) pred += b(static_cast<Index>(a)) * test_rows.col(J[a]);
      out.scores[g] += (test_y - pred).squaredNorm() / static_cast<double>(test_rows.rows());
    }
    ++evaluated;
  }
  if (evaluated == 0) throw InsufficientData("no held-out block available");

  std::size_t best = 0;
  for (std::size_t g = 0; g < out.grid.size(); ++g) {
    out.scores[g] /= static_cast<double>(evaluated);
    if (out.scores[g] < out.scores[best]) best = g;
  }
  out.config = PenaltyConfig{out.grid[best], delta_bar, PenaltyConfig::Source::calibrated};
  return out;
}

}  // namespace greedysel
