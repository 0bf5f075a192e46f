#include <doctest.h>

#include <algorithm>

#include "greedysel/eval.hpp"
#include "greedysel/population.hpp"
#include "support.hpp"

using namespace greedysel;
using namespace testing_support;

namespace {

CovarianceModel rho12(Index p, double rho) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(p, p);
  g(0, 1) = g(1, 0) = rho;
  return CovarianceModel::from_matrix(g);
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.process = MovingAverageTemplate{0.4, 0.3, 1.0, 0.0, false};
  c.coefficients.regime = PolynomialDecay{2.0, 1.0, 1.0};
  c.n_grid = {40, 80};
  c.p_rule = PRule{PRule::Kind::equal, 1.0};
  c.replications = 6;
  c.root_seed = 17;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("cmspe examples") {
  const auto id = CovarianceModel::identity(5);
  Eigen::VectorXd b(5);
  b << 1, 2, 0, 0, 3;
  const IndexSet J{0, 1, 4};
  Eigen::VectorXd exact(3);
  exact << 1, 2, 3;
  CHECK(cmspe(b, J, exact, id) == 0.0);

  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(5);
  b2(0) = 0.3;
  b2(1) = -0.4;
  CHECK(cmspe(b2, IndexSet{}, Eigen::VectorXd(), id) == doctest::Approx(0.25));

  Eigen::VectorXd b3 = Eigen::VectorXd::Zero(4);
  b3(0) = 1;
  b3(1) = 1;
  CHECK(cmspe(b3, IndexSet{2}, Eigen::VectorXd::Zero(1), rho12(4, 0.5)) == doctest::Approx(3.0));

  CHECK_THROWS_AS(cmspe(b3, IndexSet{2}, Eigen::VectorXd::Zero(2), rho12(4, 0.5)), DimensionMismatch);
  CHECK_THROWS_AS(cmspe(b, IndexSet{0}, Eigen::VectorXd::Zero(1), rho12(4, 0.5)), DimensionMismatch);
}

TEST_CASE("cmspe decomposition examples") {
  std::mt19937_64 rng(51);
  const Eigen::MatrixXd g = random_correlation(8, 0.2, rng);
  const auto cov = CovarianceModel::from_matrix(g);
  const Eigen::VectorXd b = gaussian_vec(8, rng);
  const IndexSet J{1, 5, 6};
  const Eigen::VectorXd pop = population_coefficients(cov, b, J);
  const auto d = cmspe_decomposition(b, J, pop, cov);
  CHECK(std::abs(d.variance_term) < 1e-14);
  CHECK(d.bias == doctest::Approx(cmspe(b, J, pop, cov)).epsilon(1e-12));

  const auto id = CovarianceModel::identity(6);
  Eigen::VectorXd sparse = Eigen::VectorXd::Zero(6);
  sparse(2) = 1.5;
  sparse(4) = -0.5;
  const auto d2 = cmspe_decomposition(sparse, IndexSet{2, 3, 4}, gaussian_vec(3, rng), id);
  CHECK(std::abs(d2.bias) < 1e-14);
}

TEST_CASE("cmspe decomposition sums to cmspe") {
  std::mt19937_64 rng(52);
  for (int rep = 0; rep < 100; ++rep) {
    const Index p = 3 + rep % 8;
    const auto cov = CovarianceModel::from_matrix(random_correlation(p, 0.1, rng));
    const Eigen::VectorXd b = gaussian_vec(p, rng);
    IndexSet J;
    for (Index j = 0; j < p; ++j) {
      if ((rep + j) % 3 != 0) J.push_back(j);
    }
    const Eigen::VectorXd est = gaussian_vec(static_cast<Index>(J.size()), rng);
    const auto d = cmspe_decomposition(b, J, est, cov);
    const double total = cmspe(b, J, est, cov);
    CHECK(total >= 0.0);
    CHECK(std::abs(d.bias + d.variance_term - total) <= 1e-10 * total);
  }
}

TEST_CASE("p rules") {
  CHECK(PRule{PRule::Kind::equal, 1.0}.apply(300) == 300);
  CHECK(PRule{PRule::Kind::fixed, 50.0}.apply(300) == 50);
  CHECK(PRule{PRule::Kind::multiple, 2.0}.apply(300) == 600);
  CHECK(PRule{PRule::Kind::power, 0.5}.apply(400) == 20);
}

TEST_CASE("experiment config validation") {
  auto c = small_config();
  c.n_grid = {80, 40};
  CHECK_THROWS_AS(c.validate(), InvalidSpec);
  c = small_config();
  c.replications = 0;
  CHECK_THROWS_AS(c.validate(), InvalidSpec);
  CHECK_NOTHROW(small_config().validate());
}

TEST_CASE("instantiate builds consistent processes") {
  CoefficientSpec coef{PolynomialDecay{2.0, 1.0, 1.0}, 1};
  const auto ma = instantiate(MovingAverageTemplate{0.5, 0.5}, coef, 12, 3);
  CHECK(ma.p() == 12);
  const auto s = ma.simulate(30, 1);
  CHECK(s.x.cols() == 12);
  CHECK(s.y.size() == 30);
  CHECK(ma.coefficients.beta_star(0) == doctest::Approx(1.0));

  const auto arx = instantiate(ArxTemplate{}, coef, 9, 3);
  CHECK(arx.p() == 9);
  const auto sa = arx.simulate(40, 2);
  CHECK(sa.x.cols() == 9);
  CHECK(sa.y.isApprox(sa.x * arx.coefficients.beta + sa.noise, 1e-12));
  CHECK_THROWS_AS(instantiate(ArxTemplate{}, coef, 1, 3), InvalidSpec);
}

TEST_CASE("run_experiment is deterministic and thread independent") {
  const auto c = small_config();
  const auto a = run_experiment(c, 1);
  const auto b = run_experiment(c, 1);
  const auto t = run_experiment(c, 4);
  REQUIRE(a.cells.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.cells[i].mean_cmspe == b.cells[i].mean_cmspe);
    CHECK(a.cells[i].mean_cmspe == t.cells[i].mean_cmspe);
    CHECK(a.cells[i].se_cmspe == t.cells[i].se_cmspe);
    CHECK(a.cells[i].mean_k_hat == t.cells[i].mean_k_hat);
    CHECK(a.cells[i].mean_cmspe >= 0.0);
    CHECK(a.cells[i].outcomes.size() == 6);
    CHECK_FALSE(a.cells[i].support_recovery.has_value());
  }
  CHECK(a.cells[0].p == 40);
  CHECK(a.cells[1].rate_x == doctest::Approx(std::log(std::log(80.0) / 80.0)));
  CHECK_FALSE(a.fit.has_value());
}

TEST_CASE("run_experiment: replication outcomes are internally consistent") {
  auto c = small_config();
  c.coefficients.regime = StrongSparsity{3, 1.0, 1.0};
  c.replications = 8;
  const auto r = run_experiment(c, 2);
  for (const auto& cell : r.cells) {
    REQUIRE(cell.support_recovery.has_value());
    CHECK(*cell.support_recovery >= 0.0);
    CHECK(*cell.support_recovery <= 1.0);
    for (const auto& o : cell.outcomes) {
      REQUIRE(o.ok);
      CHECK(o.k_hat >= 1);
      CHECK(o.k_hat <= o.K_n);
      CHECK(o.oracle_cmspe <= o.cmspe + 1e-12);
      CHECK(o.oracle_k >= 1);
      CHECK(o.oracle_k <= o.K_n);
      if (o.support_exact) CHECK(o.support_covered);
    }
  }
}

TEST_CASE("run_experiment under the null stops at the first step") {
  ExperimentConfig c;
  c.process = MovingAverageTemplate{};
  c.coefficients.regime = StrongSparsity{0, 1.0, 1.0};
  c.n_grid = {400};
  c.replications = 200;
  c.root_seed = 3;
  const auto r = run_experiment(c, 4);
  const auto& cell = r.cells.front();
  const auto ones = std::count_if(cell.outcomes.begin(), cell.outcomes.end(),
                                  [](const ReplicationOutcome& o) { return o.k_hat == 1; });
  MESSAGE("k_hat = 1 in " << ones << " of 200");
  CHECK(ones >= 140);
  CHECK(cell.mean_cmspe <= 4.0 * cell.mean_k_hat * std::log(400.0) / 400.0);
}

TEST_CASE("run_experiment: mean cmspe decreases in n and tracks the oracle stopping point") {
  ExperimentConfig c;
  c.process = MovingAverageTemplate{0.5, 0.0, 1.0, 0.0, false};
  c.coefficients.regime = PolynomialDecay{2.0, 1.0, 1.0};
  c.n_grid = {100, 200, 400, 800};
  c.replications = 200;
  c.root_seed = 99;
  const auto r = run_experiment(c, 4);
  int inversions = 0;
  for (std::size_t i = 1; i < r.cells.size(); ++i) {
    if (r.cells[i].mean_cmspe > r.cells[i - 1].mean_cmspe) ++inversions;
  }
  CHECK(inversions <= 1);
  for (const auto& cell : r.cells) {
    MESSAGE("n=" << cell.n << " median oracle ratio " << cell.median_oracle_ratio);
    CHECK(cell.median_oracle_ratio <= 3.0);
  }
  REQUIRE(r.fit.has_value());
  CHECK(r.fit->cells == 4);
}

TEST_CASE("rate_slope: exact power law") {
  std::vector<std::pair<double, double>> cells;
  for (double n : {100.0, 200.0, 400.0, 800.0}) {
    const double x = std::log(std::log(n) / n);
    cells.emplace_back(x, std::exp(0.75 * x));
  }
  const auto fit = rate_slope(cells);
  CHECK(fit.slope == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(fit.half_width < 1e-10);
  CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  CHECK(fit.cells == 4);
}

TEST_CASE("rate_slope: two distinct x values") {
  const std::vector<std::pair<double, double>> cells{{-3.0, 0.1}, {-3.0, 0.12}, {-2.0, 0.3}};
  const auto fit = rate_slope(cells);
  CHECK(std::isfinite(fit.slope));
  CHECK(std::isfinite(fit.half_width));
  CHECK(fit.slope == doctest::Approx(std::log(0.3) - 0.5 * (std::log(0.1) + std::log(0.12))));
}

TEST_CASE("rate_slope: errors") {
  const std::vector<std::pair<double, double>> two{{1.0, 1.0}, {2.0, 2.0}};
  CHECK_THROWS_AS(rate_slope(two), InvalidArgument);
  const std::vector<std::pair<double, double>> flat{{1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}};
  CHECK_THROWS_AS(rate_slope(flat), DegenerateDesign);
}

TEST_CASE("rate_slope: noisy power law") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> noise(0.0, 0.1);
  int inside = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::vector<std::pair<double, double>> cells;
    for (double n : {200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0}) {
      const double x = std::log(std::log(n) / n);
      cells.emplace_back(x, std::exp(0.75 * x + noise(rng)));
    }
    if (std::abs(rate_slope(cells).slope - 0.75) <= 0.1) ++inside;
  }
  CHECK(inside >= 95);
}

TEST_CASE("concentration diagnostics: exact case") {
  std::mt19937_64 rng(54);
  const Index n = 50, p = 6;
  const Eigen::MatrixXd q = orthonormal_design(n, p + 1, rng);
  const Eigen::MatrixXd z = q.leftCols(p);
  const Eigen::VectorXd eps = q.col(p);
  const auto d = concentration_diagnostics(z, CovarianceModel::identity(p), eps);
  CHECK(d.r1p < 1e-12);
  CHECK(d.r2p < 1e-12);
  CHECK_THROWS_AS(concentration_diagnostics(z, CovarianceModel::identity(p + 1), eps), DimensionMismatch);
}

TEST_CASE("concentration diagnostics: white noise envelope and stability") {
  std::vector<double> medians;
  for (Index n : {200, 400}) {
    std::vector<double> r2;
    for (int seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(1000 * n + seed);
      const Eigen::MatrixXd z = gaussian(n, 200, rng);
      const Eigen::VectorXd eps = gaussian_vec(n, rng);
      const auto d = concentration_diagnostics(z, CovarianceModel::identity(200), eps);
      CHECK(std::isfinite(d.scaled_r2));
      CHECK(d.scaled_r2 < 20.0);
      CHECK(d.scaled_r1 == doctest::Approx(d.r1p * std::sqrt(n / std::log(200.0))));
      r2.push_back(d.scaled_r2);
    }
    medians.push_back(median(r2));
  }
  CHECK(medians[1] / medians[0] < 2.0);
  CHECK(medians[0] / medians[1] < 2.0);
}

TEST_CASE("compensated sum") {
  const std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(v) == 2.0);
  CHECK(compensated_sum(std::vector<double>{}) == 0.0);
}
