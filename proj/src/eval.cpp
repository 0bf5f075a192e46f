#include "greedysel/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "greedysel/oga.hpp"
#include "greedysel/population.hpp"
#include "greedysel/random.hpp"

namespace greedysel {

namespace {

void check_lengths(const Eigen::VectorXd& beta_star, std::span<const Index> J,
                   const Eigen::VectorXd& beta_hat, const CovarianceModel& cov) {
  if (beta_star.size() != cov.dim()) throw DimensionMismatch("true coefficients do not match Γ");
  if (static_cast<Index>(J.size()) != beta_hat.size()) {
    throw DimensionMismatch("estimated coefficients do not match the index set");
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

double cmspe(const Eigen::VectorXd& beta_star_true, std::span<const Index> J,
             const Eigen::VectorXd& beta_hat_on_J, const CovarianceModel& cov) {
  check_lengths(beta_star_true, J, beta_hat_on_J, cov);
  const Eigen::VectorXd d = beta_star_true - embed(J, beta_hat_on_J, cov.dim());
  return std::max(0.0, cov.quadratic_form(d));
}

CmspeDecomposition cmspe_decomposition(const Eigen::VectorXd& beta_star_true,
                                       std::span<const Index> J,
                                       const Eigen::VectorXd& beta_hat_on_J,
                                       const CovarianceModel& cov) {
  check_lengths(beta_star_true, J, beta_hat_on_J, cov);
  CmspeDecomposition out;
  if (J.empty()) {
    out.bias = cov.quadratic_form(beta_star_true);
    return out;
  }
  const Eigen::VectorXd best = population_coefficients(cov, beta_star_true, J);
  out.bias = std::max(0.0, cov.quadratic_form(beta_star_true - embed(J, best, cov.dim())));
  const Eigen::VectorXd diff = beta_hat_on_J - best;
  out.variance_term = std::max(0.0, diff.dot(cov.submatrix(J) * diff));
  return out;
}

// --- process templates ------------------------------------------------------------

Sample ProcessInstance::simulate(Index n, std::uint64_t seed) const {
  if (const auto* lp = std::get_if<LinearProcessSpec>(&process)) {
    Sample s = simulate_linear_process(*lp, n, seed);
    attach_response(s, coefficients.beta);
    return s;
  }
  return simulate_arx(std::get<ArxSpec>(process), n, seed);
}

ProcessInstance instantiate(const ProcessTemplate& process, CoefficientSpec coefficients, Index p,
                            std::uint64_t coefficient_seed) {
  if (p < 1) throw InvalidArgument("process needs at least one predictor");
  if (const auto* ma = std::get_if<MovingAverageTemplate>(&process)) {
    LinearProcessSpec spec;
    const Index common = p;
    const Index noise = p + 1;
    spec.q = p + 2;
    if (ma->uniform_innovations) spec.innovation = UniformInnovations{1.0};
    spec.predictors.resize(static_cast<std::size_t>(p));
    for (Index l = 0; l < p; ++l) {
      auto& ch = spec.predictors[l];
      ch.terms.push_back({l, ma->theta != 0.0 ? std::vector<double>{1.0, ma->theta}
                                              : std::vector<double>{1.0}});
      if (ma->factor != 0.0) ch.terms.push_back({common, {ma->factor}});
    }
    spec.noise.terms.push_back(
        {noise, ma->noise_theta != 0.0 ? std::vector<double>{ma->noise_sd, ma->noise_sd * ma->noise_theta}
                                       : std::vector<double>{ma->noise_sd}});
    spec.validate_and_truncate();
    PopulationCovariance pop = population_covariance(spec);
    coefficients.p = p;
    CoefficientVector coef =
        CoefficientVector::from_standardized(gen_coefficients(coefficients, coefficient_seed), pop.sigma);
    return ProcessInstance{std::move(spec), std::move(pop), std::move(coef)};
  }

  const auto& arx = std::get<ArxTemplate>(process);
  const auto q0 = static_cast<Index>(arx.ar.size());
  const Index exog = p - q0;
  if (exog < 1) throw InvalidSpec("p", "ARX template needs p > number of AR lags");
  if (arx.lags_per_series < 1) throw InvalidSpec("lags_per_series", "must be positive");
  coefficients.p = exog;
  const Eigen::VectorXd exog_star = gen_coefficients(coefficients, coefficient_seed);
  double ma_var = 1.0;
  for (double b : arx.exog_ma) ma_var += b * b;
  const double exog_sigma = std::sqrt(ma_var);

  ArxSpec spec;
  spec.ar = arx.ar;
  spec.noise_sd = arx.noise_sd;
  spec.burn_in = arx.burn_in;
  for (Index start = 0; start < exog; start += arx.lags_per_series) {
    ExogenousSeries s;
    s.ma = arx.exog_ma;
    const Index count = std::min(arx.lags_per_series, exog - start);
    for (Index j = 0; j < count; ++j) s.beta.push_back(exog_star(start + j) / exog_sigma);
    spec.exogenous.push_back(std::move(s));
  }
  spec.validate();
  PopulationCovariance pop = population_covariance(spec);
  CoefficientVector coef = CoefficientVector::from_raw(spec.design_coefficients(), pop.sigma);
  return ProcessInstance{std::move(spec), std::move(pop), std::move(coef)};
}

// --- experiments ---------------------------------------------------------------------

Index PRule::apply(Index n) const {
  double p = 0.0;
  switch (kind) {
    case Kind::fixed: p = value; break;
    case Kind::equal: p = static_cast<double>(n); break;
    case Kind::multiple: p = value * static_cast<double>(n); break;
    case Kind::power: p = std::pow(static_cast<double>(n), value); break;
  }
  return std::max<Index>(2, static_cast<Index>(std::llround(p)));
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw InvalidSpec("n_grid", "must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 4) throw InvalidSpec("n_grid", "sample sizes must be at least 4");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw InvalidSpec("n_grid", "must be strictly increasing");
  }
  if (replications < 1) throw InvalidSpec("replications", "must be at least 1");
  if (!(penalty.s_a > 0.0)) throw InvalidSpec("s_a", "must be positive");
  if (!(penalty.delta_bar > 0.0)) throw InvalidSpec("delta_bar", "must be positive");
  if (p_rule.kind != PRule::Kind::equal && !(p_rule.value > 0.0)) {
    throw InvalidSpec("p_rule", "parameter must be positive");
  }
}

double rate_driver(const SparsityRegime& regime, Index n, Index p) {
  const double nn = static_cast<double>(n);
  const double lp = std::log(static_cast<double>(p));
  return std::visit(
      [&](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PolynomialDecay>) {
          return std::log(lp / nn);
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return std::log(std::log(nn) * lp / nn);
        } else {
          return std::log(static_cast<double>(std::max<Index>(r.k0, 1)) * lp / nn);
        }
      },
      regime);
}

std::string rate_driver_name(const SparsityRegime& regime) {
  return std::visit(
      [](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PolynomialDecay>) {
          return "ln(ln p / n)";
        } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
          return "ln(ln n ln p / n)";
        } else {
          return "ln(k0 ln p / n)";
        }
      },
      regime);
}

namespace {

struct CellContext {
  Index n = 0;
  Index p = 0;
  ProcessInstance instance;
  Eigen::VectorXd g;  // Γβ*
  double total = 0.0;
  IndexSet support;
};

ReplicationOutcome run_replication(const CellContext& cell, const ExperimentConfig& config,
                                   std::uint64_t seed) {
  ReplicationOutcome out;
  try {
    const Sample sample = cell.instance.simulate(cell.n, seed);
    const StandardizedDesign design = standardize(sample.x, ScaleMode::sample_rms);
    const Index budget = horizon(cell.n, cell.p, config.penalty.delta_bar);
    const SelectionPath path = fit_path(design, sample.y, budget);
    const SelectionResult sel = select(path, config.penalty);
    out.k_hat = sel.k_hat;
    out.K_n = sel.K_n;

    const CovarianceModel& gamma = cell.instance.population.gamma;
    const Eigen::VectorXd& sigma = cell.instance.population.sigma;
    const Eigen::VectorXd& beta_star = cell.instance.coefficients.beta_star;
    // Sample-rms coefficients map to population-standardized ones by σ_j / s_j.
    const auto to_population = [&](Index k) {
      Eigen::VectorXd b = path.coeffs[k - 1];
      for (Index a = 0; a < k; ++a) {
        const Index j = path.indices[a];
        b(a) *= sigma(j) / design.scale(j);
      }
      return b;
    };

    const IndexSet full = path.prefix(sel.K_n);
    const Eigen::MatrixXd gamma_full = gamma.submatrix(full);
    out.oracle_cmspe = std::numeric_limits<double>::infinity();
    for (Index k = 1; k <= sel.K_n; ++k) {
      const Eigen::VectorXd b = to_population(k);
      double cross = 0.0;
      for (Index a = 0; a < k; ++a) cross += b(a) * cell.g(full[a]);
      const double quad = b.dot(gamma_full.topLeftCorner(k, k) * b);
      const double value = std::max(0.0, cell.total - 2.0 * cross + quad);
      if (value < out.oracle_cmspe) {
        out.oracle_cmspe = value;
        out.oracle_k = k;
      }
    }
    const IndexSet chosen = path.prefix(sel.k_hat);
    out.cmspe = cmspe(beta_star, chosen, to_population(sel.k_hat), gamma);
    out.oracle_cmspe = std::min(out.oracle_cmspe, out.cmspe);

    if (!cell.support.empty()) {
      out.support_covered = std::all_of(cell.support.begin(), cell.support.end(), [&](Index j) {
        return std::find(chosen.begin(), chosen.end(), j) != chosen.end();
      });
      out.support_exact = out.support_covered && chosen.size() == cell.support.size();
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  const bool strong = std::holds_alternative<StrongSparsity>(config.coefficients.regime);

  std::vector<CellContext> cells;
  cells.reserve(config.n_grid.size());
  for (std::size_t c = 0; c < config.n_grid.size(); ++c) {
    const Index n = config.n_grid[c];
    const Index p = config.p_rule.apply(n);
    CellContext ctx{n, p,
                    instantiate(config.process, config.coefficients, p,
                                derive_seed(config.root_seed, {0xC0EFFULL, c})),
                    {}, 0.0, {}};
    ctx.g = ctx.instance.population.gamma.apply(ctx.instance.coefficients.beta_star);
    ctx.total = ctx.instance.coefficients.beta_star.dot(ctx.g);
    if (strong) {
      for (Index j = 0; j < p; ++j) {
        if (ctx.instance.coefficients.beta_star(j) != 0.0) ctx.support.push_back(j);
      }
    }
    cells.push_back(std::move(ctx));
  }

  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<std::vector<ReplicationOutcome>> outcomes(cells.size(),
                                                        std::vector<ReplicationOutcome>(reps));
  const std::size_t tasks = cells.size() * reps;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t c = t / reps;
      const std::size_t r = t % reps;
      outcomes[c][r] = run_replication(cells[c], config, derive_seed(config.root_seed, {c, r}));
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ExperimentResult result;
  result.driver = rate_driver_name(config.coefficients.regime);
  std::vector<std::pair<double, double>> points;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellResult cell;
    cell.n = cells[c].n;
    cell.p = cells[c].p;
    cell.rate_x = rate_driver(config.coefficients.regime, cell.n, cell.p);
    std::vector<double> errs;
    std::vector<double> oracle;
    std::vector<double> khat;
    std::vector<double> ratios;
    Index covered = 0;
    Index exact = 0;
    for (const auto& o : outcomes[c]) {
      if (!o.ok) {
        ++cell.failures;
        continue;
      }
      errs.push_back(o.cmspe);
      oracle.push_back(o.oracle_cmspe);
      khat.push_back(static_cast<double>(o.k_hat));
      ratios.push_back(o.oracle_cmspe > 0.0 ? o.cmspe / o.oracle_cmspe : 1.0);
      covered += o.support_covered ? 1 : 0;
      exact += o.support_exact ? 1 : 0;
    }
    const auto ok = static_cast<double>(errs.size());
    if (!errs.empty()) {
      cell.mean_cmspe = compensated_sum(errs) / ok;
      cell.mean_oracle_cmspe = compensated_sum(oracle) / ok;
      cell.mean_k_hat = compensated_sum(khat) / ok;
      if (errs.size() > 1) {
        std::vector<double> sq;
        sq.reserve(errs.size());
        for (double e : errs) sq.push_back((e - cell.mean_cmspe) * (e - cell.mean_cmspe));
        cell.se_cmspe = std::sqrt(compensated_sum(sq) / (ok - 1.0) / ok);
      }
      cell.median_oracle_ratio = median(ratios);
      if (strong) {
        cell.support_recovery = static_cast<double>(covered) / ok;
        cell.exact_recovery = static_cast<double>(exact) / ok;
      }
      if (cell.mean_cmspe > 0.0) points.emplace_back(cell.rate_x, cell.mean_cmspe);
    }
    result.failures += cell.failures;
    cell.outcomes = std::move(outcomes[c]);
    result.cells.push_back(std::move(cell));
  }
  if (points.size() >= 3) {
    try {
      result.fit = rate_slope(points);
    } catch (const DegenerateDesign&) {
      result.fit.reset();
    }
  }
  return result;
}

RateFit rate_slope(std::span<const std::pair<double, double>> cells) {
  if (cells.size() < 3) throw InvalidArgument("rate fit needs at least 3 cells");
  const auto k = static_cast<double>(cells.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, v] : cells) {
    if (!(v > 0.0)) throw InvalidArgument("rate fit needs positive CMSPE values");
    mx += x;
    my += std::log(v);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, v] : cells) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (std::log(v) - my);
  }
  if (!(sxx > 0.0)) throw DegenerateDesign("all rate regressors are equal");
  RateFit fit;
  fit.cells = static_cast<Index>(cells.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [x, v] : cells) {
    const double r = std::log(v) - fit.intercept - fit.slope * x;
    sse += r * r;
  }
  const double dof = k - 2.0;
  const boost::math::students_t dist(dof);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.half_width = t * std::sqrt(sse / dof / sxx);
  return fit;
}

ConcentrationDiagnostics concentration_diagnostics(const Eigen::MatrixXd& z,
                                                   const CovarianceModel& cov,
                                                   const Eigen::VectorXd& epsilon) {
  const Index n = z.rows();
  const Index p = z.cols();
  if (cov.dim() != p) throw DimensionMismatch("design width does not match Γ");
  if (epsilon.size() != n) throw DimensionMismatch("noise length does not match design");
  if (p < 2) throw InvalidArgument("diagnostics need p >= 2");
  const double nn = static_cast<double>(n);

  ConcentrationDiagnostics out;
  out.r2p = (z.transpose() * epsilon).cwiseAbs().maxCoeff() / nn;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(), 1.0 / nn);
  for (Index l = 0; l < p; ++l) {
    for (Index k = l; k < p; ++k) {
      const double rho = cov.is_identity() ? (k == l ? 1.0 : 0.0) : cov(k, l);
      out.r1p = std::max(out.r1p, std::abs(gram(k, l) - rho));
    }
  }
  const double scale = std::sqrt(nn / std::log(static_cast<double>(p)));
  out.scaled_r1 = scale * out.r1p;
  out.scaled_r2 = scale * out.r2p;
  return out;
}

}  // namespace greedysel
