#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "greedysel/cli.hpp"
#include "greedysel/datagen.hpp"
#include "greedysel/io.hpp"
#include "greedysel/oga.hpp"
#include "greedysel/population.hpp"
#include "greedysel/random.hpp"

namespace greedysel::cli {

namespace {

constexpr std::uint64_t kCoefficientStream = 0xC0EFF;
constexpr std::uint64_t kSampleStream = 1;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> s_a;
  std::optional<double> delta_bar;
  std::optional<unsigned> threads;
  std::optional<std::string> data;
  bool plot_data = false;
  bool calibrate = false;
  bool quiet = false;
};

/// Config document with command-line overrides folded in.
Config resolve(const Options& opt) {
  nlohmann::json doc = opt.config.empty() ? nlohmann::json::object() : load_document(opt.config);
  if (!doc.is_object()) throw ConfigError("config", "top level must be a table");
  const auto section = [&](const char* key) -> nlohmann::json& {
    if (!doc.contains(key)) doc[key] = nlohmann::json::object();
    return doc[key];
  };
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.data) doc["data"] = *opt.data;
  if (opt.s_a) section("penalty")["s_a"] = *opt.s_a;
  if (opt.delta_bar) section("penalty")["delta_bar"] = *opt.delta_bar;
  if (opt.calibrate) section("penalty")["calibrate"] = true;
  return parse_config(doc);
}

std::string spec_hash(const Config& cfg) {
  nlohmann::json spec = cfg.source;
  spec.erase("seed");
  return io::fnv1a_hex(spec.dump());
}

nlohmann::json manifest(const std::string& command, const Config& cfg) {
  return {{"command", command},
          {"seed", cfg.seed},
          {"spec_hash", spec_hash(cfg)},
          {"penalty",
           {{"s_a", cfg.penalty.s_a},
            {"delta_bar", cfg.penalty.delta_bar},
            {"source", cfg.penalty.source == PenaltyConfig::Source::calibrated ? "calibrated" : "fixed"}}}};
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

template <class F>
std::string render(F&& f) {
  std::ostringstream ss;
  f(ss);
  return ss.str();
}

unsigned thread_count(const Options& opt) {
  if (opt.threads) return std::max(1u, *opt.threads);
  if (const char* env = std::getenv("GREEDYSEL_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    throw ConfigError("GREEDYSEL_THREADS", "expected a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Dataset load_dataset(const Config& cfg) {
  if (!cfg.data) throw ConfigError("data", "no dataset given (use --data or the data key)");
  std::ifstream in(*cfg.data, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + *cfg.data);
  return io::read_dataset_csv(in);
}

std::string regime_name(const SparsityRegime& r) {
  switch (r.index()) {
    case 0: return "polynomial";
    case 1: return "exponential";
    default: return "strong";
  }
}

std::optional<CalibrationResult> maybe_calibrate(Config& cfg, const StandardizedDesign& design,
                                                 const Eigen::VectorXd& y) {
  if (!cfg.calibrate) return std::nullopt;
  CalibrationResult cal = calibrate_sa(design, y, cfg.calibration_grid, cfg.folds, cfg.penalty.delta_bar);
  cfg.penalty = cal.config;
  return cal;
}

nlohmann::json calibration_json(const CalibrationResult& cal) {
  return {{"s_a", cal.config.s_a}, {"grid", cal.grid}, {"scores", cal.scores}};
}

int cmd_generate(const Options& opt) {
  const Config cfg = resolve(opt);
  const ProcessInstance inst =
      instantiate(cfg.process, cfg.coefficients, cfg.p, derive_seed(cfg.seed, {kCoefficientStream, 0}));
  const Sample sample = inst.simulate(cfg.n, derive_seed(cfg.seed, {kSampleStream}));

  io::AtomicOutputs out(opt.out);
  out.add("dataset.csv", render([&](std::ostream& s) { io::write_dataset_csv(s, sample.y, sample.x); }));
  out.add("coefficients.csv", render([&](std::ostream& s) {
            io::write_coefficients_csv(s, inst.coefficients, inst.population.sigma);
          }));
  out.add("covariance.csv",
          render([&](std::ostream& s) { io::write_matrix_csv(s, inst.population.gamma.dense()); }));
  nlohmann::json m = manifest("generate", cfg);
  m["n"] = cfg.n;
  m["p"] = inst.p();
  m["noise_variance"] = inst.population.noise_variance;
  m["outputs"] = {"dataset.csv", "coefficients.csv", "covariance.csv"};
  out.add("manifest.json", dump(m));
  out.commit();
  if (!opt.quiet) std::cout << "wrote n=" << cfg.n << " p=" << inst.p() << " to " << opt.out << "\n";
  return 0;
}

int cmd_fit(const Options& opt) {
  Config cfg = resolve(opt);
  const Dataset data = load_dataset(cfg);
  const StandardizedDesign design = standardize(data);
  const auto cal = maybe_calibrate(cfg, design, data.y());
  const SelectionPath path = fit_path(design, data.y(), horizon(data.n(), data.p(), cfg.penalty.delta_bar));
  const SelectionResult sel = select(path, cfg.penalty);

  io::AtomicOutputs out(opt.out);
  out.add("path.json", dump(io::to_json(path)));
  nlohmann::json selection = io::to_json(sel);
  selection["selected"] = nlohmann::json::array();
  for (Index k = 0; k < sel.k_hat; ++k) selection["selected"].push_back(path.indices[k] + 1);
  selection["hdaic_min"] = sel.minimum();
  if (cal) selection["calibration"] = calibration_json(*cal);
  out.add("selection.json", dump(selection));
  nlohmann::json m = manifest("fit", cfg);
  m["data"] = *cfg.data;
  m["n"] = data.n();
  m["p"] = data.p();
  m["outputs"] = {"path.json", "selection.json"};
  out.add("manifest.json", dump(m));
  out.commit();
  std::cout << "k_hat " << sel.k_hat << "\n"
            << "hdaic_min " << io::format_double(sel.minimum()) << "\n";
  return 0;
}

int cmd_calibrate(const Options& opt) {
  Config cfg = resolve(opt);
  cfg.calibrate = true;
  const Dataset data = load_dataset(cfg);
  const StandardizedDesign design = standardize(data);
  const auto cal = maybe_calibrate(cfg, design, data.y());

  io::AtomicOutputs out(opt.out);
  out.add("calibration.json", dump(calibration_json(*cal)));
  nlohmann::json m = manifest("calibrate", cfg);
  m["data"] = *cfg.data;
  m["folds"] = cfg.folds;
  m["outputs"] = {"calibration.json"};
  out.add("manifest.json", dump(m));
  out.commit();
  std::cout << "s_a " << io::format_double(cal->config.s_a) << "\n";
  return 0;
}

int cmd_oracle(const Options& opt) {
  const Config cfg = resolve(opt);
  std::optional<CovarianceModel> cov;
  Eigen::VectorXd beta_star;
  if (cfg.oracle.covariance_file || cfg.oracle.coefficients_file) {
    if (!cfg.oracle.covariance_file || !cfg.oracle.coefficients_file) {
      throw ConfigError("oracle", "covariance and coefficients files must be given together");
    }
    std::ifstream cin(*cfg.oracle.covariance_file, std::ios::binary);
    if (!cin) throw Error("cannot open covariance file " + *cfg.oracle.covariance_file);
    std::ifstream bin(*cfg.oracle.coefficients_file, std::ios::binary);
    if (!bin) throw Error("cannot open coefficients file " + *cfg.oracle.coefficients_file);
    cov = CovarianceModel::from_matrix(io::read_matrix_csv(cin));
    beta_star = io::read_coefficients_csv(bin);
    if (beta_star.size() != cov->dim()) {
      throw DimensionMismatch("coefficients length does not match covariance dimension");
    }
  } else {
    ProcessInstance inst =
        instantiate(cfg.process, cfg.coefficients, cfg.p, derive_seed(cfg.seed, {kCoefficientStream, 0}));
    cov = std::move(inst.population.gamma);
    beta_star = std::move(inst.coefficients.beta_star);
  }
  const Index p = cov->dim();
  const Index m_max = std::min(p, cfg.oracle.m_max.value_or(20));
  const Index best_m = cfg.oracle.best_m.value_or(p <= 24 ? std::min<Index>(m_max, 6) : 0);

  const PopulationPath ppath = population_oga(*cov, beta_star, cfg.oracle.xi, m_max);

  // Largest m first so a guard violation names the requested size.
  std::vector<BestSubset> best;
  for (Index m = best_m; m >= 1; --m) best.push_back(best_m_term(*cov, beta_star, m));
  std::reverse(best.begin(), best.end());

  std::string a5;
  if (cfg.oracle.a5_max_card > 0 && p >= 2) {
    a5 = io::format_double(a5_bound(*cov, std::min(cfg.oracle.a5_max_card, p - 1), cfg.oracle.a5_seed));
  }

  std::ostringstream best_csv;
  best_csv << "m,error,greedy_error,indices\n";
  for (std::size_t i = 0; i < best.size(); ++i) {
    const auto m = static_cast<Index>(i + 1);
    best_csv << m << ',' << io::format_double(best[i].error) << ',';
    if (m <= static_cast<Index>(ppath.indices.size())) best_csv << io::format_double(ppath.errors[m]);
    best_csv << ',';
    for (std::size_t k = 0; k < best[i].indices.size(); ++k) best_csv << (k ? " " : "") << best[i].indices[k] + 1;
    best_csv << '\n';
  }

  std::ostringstream diag;
  diag << "m,index,error,baxter_ratio,max_baxter_ratio,a5_bound\n";
  double running = 0.0;
  bool any = false;
  for (std::size_t m = 1; m <= ppath.indices.size(); ++m) {
    const std::span<const Index> J(ppath.indices.data(), m);
    std::string ratio;
    try {
      const double r = baxter_ratio(*cov, beta_star, J);
      running = any ? std::max(running, r) : r;
      any = true;
      ratio = io::format_double(r);
    } catch (const DivisionByZeroTail&) {
    }
    diag << m << ',' << ppath.indices[m - 1] + 1 << ',' << io::format_double(ppath.errors[m]) << ','
         << ratio << ',' << (any ? io::format_double(running) : std::string()) << ','
         << a5 << '\n';
  }

  io::AtomicOutputs out(opt.out);
  out.add("population_path.json", dump(io::to_json(ppath)));
  out.add("best_m_term.csv", best_csv.str());
  out.add("diagnostics.csv", diag.str());
  nlohmann::json m = manifest("oracle", cfg);
  m["p"] = p;
  m["m_max"] = m_max;
  m["best_m"] = best_m;
  m["outputs"] = {"population_path.json", "best_m_term.csv", "diagnostics.csv"};
  out.add("manifest.json", dump(m));
  out.commit();
  if (!opt.quiet) {
    std::cout << "population path of " << ppath.indices.size() << " steps, final error "
              << io::format_double(ppath.errors.back()) << "\n";
  }
  return 0;
}

int cmd_experiment(const Options& opt) {
  const Config cfg = resolve(opt);
  ExperimentConfig ec;
  ec.process = cfg.process;
  ec.coefficients = cfg.coefficients;
  ec.n_grid = cfg.n_grid;
  ec.p_rule = cfg.p_rule;
  ec.replications = cfg.replications;
  ec.penalty = cfg.penalty;
  ec.root_seed = cfg.seed;
  try {
    ec.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError("experiment." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
  const unsigned threads = thread_count(opt);
  const ExperimentResult result = run_experiment(ec, threads);

  io::AtomicOutputs out(opt.out);
  out.add("results.csv", render([&](std::ostream& s) { io::write_experiment_csv(s, result); }));
  out.add("results.json", dump(io::to_json(result)));
  nlohmann::json outputs = {"results.csv", "results.json"};
  if (opt.plot_data) {
    const std::string name = "plot_" + regime_name(cfg.coefficients.regime) + ".dat";
    out.add(name, render([&](std::ostream& s) { io::write_plot_data(s, result); }));
    outputs.push_back(name);
  }
  nlohmann::json m = manifest("experiment", cfg);
  m["cells"] = result.cells.size();
  m["replications"] = cfg.replications;
  m["failures"] = result.failures;
  m["outputs"] = outputs;
  out.add("manifest.json", dump(m));
  out.commit();
  if (!opt.quiet) {
    for (const auto& c : result.cells) {
      std::cout << "n=" << c.n << " p=" << c.p << " mean_cmspe=" << io::format_double(c.mean_cmspe)
                << " mean_k_hat=" << io::format_double(c.mean_k_hat) << "\n";
    }
    if (result.fit) {
      std::cout << "slope " << io::format_double(result.fit->slope) << " +/- "
                << io::format_double(result.fit->half_width) << " (" << result.driver << ")\n";
    }
    if (result.failures > 0) std::cout << "failed replications: " << result.failures << "\n";
  }
  return 0;
}

bool is_config_error(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidSpec*>(&e) ||
         dynamic_cast<const InvalidPenalty*>(&e) || dynamic_cast<const UnstableAR*>(&e);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Orthogonal greedy selection with HDAIC stopping"};
  app.require_subcommand(1);
  Options opt;

  const auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "Spec file (TOML, or JSON by .json extension)");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Root seed (unsigned 64-bit)");
    sub->add_option("--s-a", opt.s_a, "Penalty scale s_a");
    sub->add_option("--delta-bar", opt.delta_bar, "Horizon constant");
    sub->add_flag("--quiet", opt.quiet, "Suppress progress output");
  };

  auto* gen = app.add_subcommand("generate", "Simulate a dataset from a process spec");
  common(gen, true);
  auto* fit = app.add_subcommand("fit", "Run the greedy path and select by HDAIC");
  common(fit, false);
  fit->add_option("--data", opt.data, "Dataset CSV (first column y)");
  fit->add_flag("--calibrate", opt.calibrate, "Calibrate s_a by time-ordered cross-validation first");
  auto* cal = app.add_subcommand("calibrate", "Choose s_a by time-ordered cross-validation");
  common(cal, false);
  cal->add_option("--data", opt.data, "Dataset CSV (first column y)");
  auto* orc = app.add_subcommand("oracle", "Population greedy path and best m-term diagnostics");
  common(orc, true);
  auto* exp = app.add_subcommand("experiment", "Monte Carlo experiment over an (n, p) grid");
  common(exp, true);
  exp->add_option("--threads", opt.threads, "Worker threads (default: GREEDYSEL_THREADS or all cores)");
  exp->add_flag("--plot-data", opt.plot_data, "Also write (x, ln mean CMSPE) plot data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (cal->parsed()) return cmd_calibrate(opt);
    if (orc->parsed()) return cmd_oracle(opt);
    if (exp->parsed()) return cmd_experiment(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace greedysel::cli
