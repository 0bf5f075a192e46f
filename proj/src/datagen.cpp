#include "greedysel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace greedysel {

namespace {

constexpr double kTailMass = 1e-10;

double draw_between(std::mt19937_64& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Drops trailing weights whose ℓ₁ mass is below kTailMass of the total.
void trim_tail(std::vector<double>& w) {
  double total = 0.0;
  for (double v : w) total += std::abs(v);
  if (total == 0.0) {
    w.clear();
    return;
  }
  double tail = 0.0;
  std::size_t keep = w.size();
  while (keep > 1 && tail + std::abs(w[keep - 1]) < kTailMass * total) {
    tail += std::abs(w[keep - 1]);
    --keep;
  }
  w.resize(keep);
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<double> shifted(const std::vector<double>& w, std::size_t lag) {
  std::vector<double> out(lag, 0.0);
  out.insert(out.end(), w.begin(), w.end());
  return out;
}

double lag_dot(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t len = std::min(a.size(), b.size());
  double s = 0.0;
  for (std::size_t j = 0; j < len; ++j) s += a[j] * b[j];
  return s;
}

void sort_terms(Channel& ch) {
  std::stable_sort(ch.terms.begin(), ch.terms.end(),
                   [](const ChannelTerm& a, const ChannelTerm& b) { return a.innovation < b.innovation; });
}

}  // namespace

Eigen::VectorXd gen_coefficients(const CoefficientSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const Index p = spec.p;
  Eigen::VectorXd magnitude(p);
  for (Index r = 1; r <= p; ++r) {
    magnitude(r - 1) = draw_between(rng, spec.lower_envelope(r), spec.upper_envelope(r));
  }
  std::vector<Index> position(static_cast<std::size_t>(p));
  std::iota(position.begin(), position.end(), Index{0});
  if (spec.ordering == Ordering::random) std::shuffle(position.begin(), position.end(), rng);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  std::bernoulli_distribution coin(0.5);
  for (Index r = 0; r < p; ++r) {
    double sign = 1.0;
    if (spec.signs == SignPattern::random) sign = coin(rng) ? 1.0 : -1.0;
    beta(position[r]) = sign * magnitude(r);
  }
  return beta;
}

// --- linear processes ----------------------------------------------------------

double Channel::l1_mass() const {
  double total = 0.0;
  for (const auto& t : terms) {
    for (double w : t.lag_weights) total += std::abs(w);
  }
  return total;
}

std::size_t Channel::length() const {
  std::size_t len = 0;
  for (const auto& t : terms) len = std::max(len, t.lag_weights.size());
  return len;
}

void LinearProcessSpec::validate_and_truncate() {
  if (q < 1) throw InvalidSpec("q", "innovation dimension must be positive");
  if (predictors.empty()) throw InvalidSpec("predictors", "at least one predictor is required");
  if (const auto* g = std::get_if<GaussianInnovations>(&innovation)) {
    if (g->covariance.size() != 0 && (g->covariance.rows() != q || g->covariance.cols() != q)) {
      throw InvalidSpec("innovation.covariance", "must be q x q");
    }
  } else if (!(std::get<UniformInnovations>(innovation).scale > 0.0)) {
    throw InvalidSpec("innovation.scale", "must be positive");
  }

  std::size_t longest = 0;
  const auto check = [&](Channel& ch, const std::string& name) {
    for (const auto& t : ch.terms) {
      if (t.innovation < 0 || t.innovation >= q) {
        throw InvalidSpec(name, "innovation index outside 1..q");
      }
    }
    const double mass = ch.l1_mass();
    if (!(mass > 0.0)) throw InvalidSpec(name, "channel has no nonzero weight");
    if (!(mass <= weight_bound)) throw InvalidSpec(name, "weight mass exceeds weight_bound");
    if (truncation_lag >= 0) {
      double beyond = 0.0;
      for (auto& t : ch.terms) {
        for (std::size_t j = static_cast<std::size_t>(truncation_lag) + 1; j < t.lag_weights.size(); ++j) {
          beyond += std::abs(t.lag_weights[j]);
        }
      }
      if (beyond >= kTailMass * mass) {
        throw InvalidSpec("truncation_lag", name + " keeps weight mass beyond the truncation lag");
      }
      for (auto& t : ch.terms) {
        if (t.lag_weights.size() > static_cast<std::size_t>(truncation_lag) + 1) {
          t.lag_weights.resize(static_cast<std::size_t>(truncation_lag) + 1);
        }
      }
    }
    sort_terms(ch);
    longest = std::max(longest, ch.length());
  };
  check(noise, "noise");
  for (std::size_t l = 0; l < predictors.size(); ++l) {
    check(predictors[l], "predictors[" + std::to_string(l + 1) + "]");
  }
  if (truncation_lag < 0) truncation_lag = static_cast<Index>(longest) - 1;
}

Sample simulate_linear_process(const LinearProcessSpec& spec_in, Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("simulation length must be positive");
  LinearProcessSpec spec = spec_in;
  spec.validate_and_truncate();
  const Index q = spec.q;
  const Index window = spec.truncation_lag + 1;
  const Index total = n + window - 1;

  std::mt19937_64 rng(seed);
  // Innovations are drawn time-major: column t of `draws` is δ_t.
  Eigen::MatrixXd draws(q, total);
  if (const auto* g = std::get_if<GaussianInnovations>(&spec.innovation)) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index t = 0; t < total; ++t) {
      for (Index k = 0; k < q; ++k) draws(k, t) = normal(rng);
    }
    if (g->covariance.size() != 0) {
      const Eigen::MatrixXd& cov = g->covariance;
      const bool diagonal = (cov - Eigen::MatrixXd(cov.diagonal().asDiagonal())).isZero(0.0);
      if (diagonal) {
        draws = cov.diagonal().cwiseSqrt().asDiagonal() * draws;
      } else {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
          throw InvalidSpec("innovation.covariance", "must be positive definite");
        }
        draws = llt.matrixL() * draws;
      }
    }
  } else {
    const double half = std::sqrt(3.0) * std::get<UniformInnovations>(spec.innovation).scale;
    std::uniform_real_distribution<double> uniform(-half, half);
    for (Index t = 0; t < total; ++t) {
      for (Index k = 0; k < q; ++k) draws(k, t) = uniform(rng);
    }
  }
  const Eigen::MatrixXd delta = draws.transpose();  // row = time

  const auto realize = [&](const Channel& ch) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (const auto& term : ch.terms) {
      for (std::size_t j = 0; j < term.lag_weights.size(); ++j) {
        const double w = term.lag_weights[j];
        if (w == 0.0) continue;
        out += w * delta.col(term.innovation).segment(window - 1 - static_cast<Index>(j), n);
      }
    }
    return out;
  };

  Sample sample;
  sample.x.resize(n, spec.p());
  for (Index l = 0; l < spec.p(); ++l) sample.x.col(l) = realize(spec.predictors[l]);
  sample.noise = realize(spec.noise);
  return sample;
}

void attach_response(Sample& sample, const Eigen::VectorXd& beta) {
  if (beta.size() != sample.x.cols()) throw DimensionMismatch("coefficient length mismatch");
  sample.y = sample.x * beta + sample.noise;
}

// --- ARX -------------------------------------------------------------------------

Index ArxSpec::p() const noexcept {
  Index total = q0();
  for (const auto& s : exogenous) total += static_cast<Index>(s.beta.size());
  return total;
}

double ar_spectral_radius(const std::vector<double>& ar) {
  const auto q0 = static_cast<Index>(ar.size());
  if (q0 == 0) return 0.0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(q0, q0);
  for (Index j = 0; j < q0; ++j) companion(0, j) = ar[j];
  for (Index j = 1; j < q0; ++j) companion(j, j - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void ArxSpec::validate() const {
  if (p() < 1) throw InvalidSpec("p", "ARX design needs at least one column");
  if (!(noise_sd > 0.0)) throw InvalidSpec("noise_sd", "must be positive");
  if (burn_in < 0) throw InvalidSpec("burn_in", "must be nonnegative");
  if (!(stability_margin >= 0.0)) throw InvalidSpec("stability_margin", "must be nonnegative");
  const double radius = ar_spectral_radius(ar);
  // Roots of 1 - Σ a_j z^j are reciprocals of the companion eigenvalues.
  if (!(radius * (1.0 + stability_margin) < 1.0)) {
    throw UnstableAR("AR polynomial has a root inside |z| <= 1 + iota (largest reciprocal root " +
                     std::to_string(radius) + ")");
  }
  double mass = 0.0;
  for (double a : ar) mass += std::abs(a);
  for (std::size_t l = 0; l < exogenous.size(); ++l) {
    const auto& s = exogenous[l];
    const std::string name = "exogenous[" + std::to_string(l + 1) + "]";
    if (s.beta.empty()) throw InvalidSpec(name + ".beta", "each series needs at least one lag");
    double ma_mass = 0.0;
    for (double b : s.ma) ma_mass += std::abs(b);
    if (!(ma_mass < ma_bound)) throw InvalidSpec(name + ".ma", "MA weight mass exceeds ma_bound");
    for (double b : s.beta) mass += std::abs(b);
  }
  if (!(mass < coefficient_bound)) {
    throw InvalidSpec("coefficient_bound", "coefficient mass exceeds the configured bound");
  }
}

Eigen::VectorXd ArxSpec::design_coefficients() const {
  Eigen::VectorXd out(p());
  Index c = 0;
  for (double a : ar) out(c++) = a;
  for (const auto& s : exogenous) {
    for (double b : s.beta) out(c++) = b;
  }
  return out;
}

std::vector<double> ar_to_ma(const std::vector<double>& ar) {
  const double radius = ar_spectral_radius(ar);
  if (radius == 0.0) return {1.0};
  if (!(radius < 1.0)) throw UnstableAR("AR recursion has no MA(inf) representation");
  const auto q0 = ar.size();
  // Overshoot the point where ρ^k reaches 1e-12 so repeated roots are covered,
  // then trim back to the 1e-10 tail-mass criterion.
  const double lags = 2.0 * std::log(1e-12 * (1.0 - radius)) / std::log(radius) + 20.0 * q0;
  const auto count = static_cast<std::size_t>(std::min(1e6, std::ceil(lags)));
  std::vector<double> psi(count + 1, 0.0);
  psi[0] = 1.0;
  for (std::size_t k = 1; k <= count; ++k) {
    double v = 0.0;
    for (std::size_t j = 1; j <= std::min(k, q0); ++j) v += ar[j - 1] * psi[k - j];
    psi[k] = v;
  }
  trim_tail(psi);
  return psi;
}

Sample simulate_arx(const ArxSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidArgument("simulation length must be positive");
  const Index q0 = spec.q0();
  const auto p1 = static_cast<Index>(spec.exogenous.size());
  Index max_r = 0;
  Index max_ma = 0;
  for (const auto& s : spec.exogenous) {
    max_r = std::max<Index>(max_r, static_cast<Index>(s.beta.size()));
    max_ma = std::max<Index>(max_ma, static_cast<Index>(s.ma.size()));
  }
  const Index offset = std::max<Index>(q0, max_r - 1);
  const Index steps = spec.burn_in + offset + n;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd exo(steps, p1);
  for (Index l = 0; l < p1; ++l) {
    const auto& ma = spec.exogenous[l].ma;
    Eigen::VectorXd e(steps + max_ma);
    for (Index t = 0; t < e.size(); ++t) e(t) = normal(rng);
    for (Index t = 0; t < steps; ++t) {
      double v = e(t + max_ma);
      for (std::size_t j = 1; j <= ma.size(); ++j) v += ma[j - 1] * e(t + max_ma - static_cast<Index>(j));
      exo(t, l) = v;
    }
  }
  Eigen::VectorXd eps(steps);
  for (Index t = 0; t < steps; ++t) eps(t) = spec.noise_sd * normal(rng);

  Eigen::VectorXd y = Eigen::VectorXd::Zero(steps);
  for (Index t = 0; t < steps; ++t) {
    double v = eps(t);
    for (Index j = 1; j <= q0 && j <= t; ++j) v += spec.ar[j - 1] * y(t - j);
    for (Index l = 0; l < p1; ++l) {
      const auto& beta = spec.exogenous[l].beta;
      for (std::size_t j = 1; j <= beta.size(); ++j) {
        const Index s = t - static_cast<Index>(j) + 1;
        if (s >= 0) v += beta[j - 1] * exo(s, l);
      }
    }
    y(t) = v;
  }

  const Index first = steps - n;
  Sample sample;
  sample.x.resize(n, spec.p());
  Index c = 0;
  for (Index j = 1; j <= q0; ++j) sample.x.col(c++) = y.segment(first - j, n);
  for (Index l = 0; l < p1; ++l) {
    for (std::size_t j = 1; j <= spec.exogenous[l].beta.size(); ++j) {
      sample.x.col(c++) = exo.col(l).segment(first - static_cast<Index>(j) + 1, n);
    }
  }
  sample.y = y.segment(first, n);
  sample.noise = eps.segment(first, n);
  return sample;
}

LinearProcessSpec to_linear_process(const ArxSpec& spec) {
  spec.validate();
  const auto p1 = static_cast<Index>(spec.exogenous.size());
  const Index noise_inn = p1;
  const std::vector<double> psi = ar_to_ma(spec.ar);

  LinearProcessSpec out;
  out.q = p1 + 1;
  out.innovation = GaussianInnovations{};
  out.weight_bound = std::numeric_limits<double>::infinity();
  out.noise.terms.push_back({noise_inn, {spec.noise_sd}});

  // Response filters: y_t = Σ_l Σ_k f^{(l)}_k e^{(l)}_{t-k} + Σ_k f^ε_k ε_{t-k}.
  std::vector<ChannelTerm> response;
  std::vector<std::vector<double>> exo_filters(static_cast<std::size_t>(p1));
  for (Index l = 0; l < p1; ++l) {
    const auto& s = spec.exogenous[l];
    std::vector<double> btilde{1.0};
    btilde.insert(btilde.end(), s.ma.begin(), s.ma.end());
    exo_filters[l] = btilde;
    std::vector<double> f = convolve(convolve(psi, s.beta), btilde);
    trim_tail(f);
    if (!f.empty()) response.push_back({l, std::move(f)});
  }
  {
    std::vector<double> f = psi;
    for (double& v : f) v *= spec.noise_sd;
    response.push_back({noise_inn, std::move(f)});
  }

  for (Index i = 1; i <= spec.q0(); ++i) {
    Channel ch;
    for (const auto& term : response) {
      ch.terms.push_back({term.innovation, shifted(term.lag_weights, static_cast<std::size_t>(i))});
    }
    out.predictors.push_back(std::move(ch));
  }
  for (Index l = 0; l < p1; ++l) {
    for (std::size_t j = 1; j <= spec.exogenous[l].beta.size(); ++j) {
      Channel ch;
      ch.terms.push_back({l, shifted(exo_filters[l], j - 1)});
      out.predictors.push_back(std::move(ch));
    }
  }
  out.validate_and_truncate();
  return out;
}

// --- population covariance ----------------------------------------------------------

double channel_covariance(const Channel& a, const Channel& b, const InnovationLaw& law) {
  const Eigen::MatrixXd* full = nullptr;
  double scale_sq = 1.0;
  if (const auto* g = std::get_if<GaussianInnovations>(&law)) {
    if (g->covariance.size() != 0) full = &g->covariance;
  } else {
    const double s = std::get<UniformInnovations>(law).scale;
    scale_sq = s * s;
  }

  if (full != nullptr && !(*full - Eigen::MatrixXd(full->diagonal().asDiagonal())).isZero(0.0)) {
    double total = 0.0;
    for (const auto& s : a.terms) {
      for (const auto& t : b.terms) {
        const double c = (*full)(s.innovation, t.innovation);
        if (c != 0.0) total += c * lag_dot(s.lag_weights, t.lag_weights);
      }
    }
    return total;
  }

  // Independent components: merge terms on the innovation index.
  double total = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.terms.size() && j < b.terms.size()) {
    const Index ia = a.terms[i].innovation;
    const Index ib = b.terms[j].innovation;
    if (ia < ib) {
      ++i;
    } else if (ib < ia) {
      ++j;
    } else {
      const double var = full != nullptr ? (*full)(ia, ia) : scale_sq;
      // Duplicate terms on one innovation are summed pairwise.
      std::size_t i_end = i;
      while (i_end < a.terms.size() && a.terms[i_end].innovation == ia) ++i_end;
      std::size_t j_end = j;
      while (j_end < b.terms.size() && b.terms[j_end].innovation == ib) ++j_end;
      for (std::size_t u = i; u < i_end; ++u) {
        for (std::size_t v = j; v < j_end; ++v) {
          total += var * lag_dot(a.terms[u].lag_weights, b.terms[v].lag_weights);
        }
      }
      i = i_end;
      j = j_end;
    }
  }
  return total;
}

PopulationCovariance population_covariance(const LinearProcessSpec& spec_in) {
  LinearProcessSpec spec = spec_in;
  spec.validate_and_truncate();
  const Index p = spec.p();
  Eigen::MatrixXd raw(p, p);
  for (Index k = 0; k < p; ++k) {
    for (Index l = 0; l <= k; ++l) {
      raw(k, l) = channel_covariance(spec.predictors[k], spec.predictors[l], spec.innovation);
      raw(l, k) = raw(k, l);
    }
  }
  PopulationCovariance out{CovarianceModel::identity(p), raw.diagonal().cwiseSqrt(), 0.0};
  out.noise_variance = channel_covariance(spec.noise, spec.noise, spec.innovation);
  for (Index k = 0; k < p; ++k) {
    if (!(out.sigma(k) > 0.0)) throw InvalidSpec("predictors", "channel has zero variance");
  }
  Eigen::MatrixXd gamma = out.sigma.cwiseInverse().asDiagonal() * raw * out.sigma.cwiseInverse().asDiagonal();
  gamma.diagonal().setOnes();
  const bool identity = (gamma - Eigen::MatrixXd::Identity(p, p)).isZero(0.0);
  out.gamma = identity ? CovarianceModel::identity(p)
                       : CovarianceModel::from_matrix(std::move(gamma),
                                                      CovarianceModel::Form::derived_from_process);
  return out;
}

PopulationCovariance population_covariance(const ArxSpec& spec) {
  return population_covariance(to_linear_process(spec));
}

}  // namespace greedysel
