#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "greedysel/cli.hpp"

namespace greedysel::cli {

namespace {

nlohmann::json node_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, value] : *t) out[std::string(key.str())] = node_to_json(value);
    return out;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& value : *a) out.push_back(node_to_json(value));
    return out;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  std::ostringstream ss;
  node.visit([&](const auto& v) { ss << v; });
  return ss.str();
}

/// Typed access to one config section; every error names the dotted key.
class Section {
 public:
  Section(const nlohmann::json& doc, std::string prefix, std::set<std::string> allowed)
      : doc_(doc), prefix_(std::move(prefix)) {
    if (!doc_.is_object()) throw ConfigError(prefix_.empty() ? "config" : prefix_, "expected a table");
    for (const auto& [key, value] : doc_.items()) {
      if (!allowed.count(key)) throw ConfigError(name(key), "unknown key");
    }
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  bool has(const std::string& key) const { return doc_.contains(key); }
  const nlohmann::json& raw(const std::string& key) const { return doc_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return as_number(doc_.at(key), name(key));
  }

  Index integer(const std::string& key, Index fallback) const {
    if (!has(key)) return fallback;
    return as_integer(doc_.at(key), name(key));
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(name(key), "must be non-negative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_string()) return parse_seed(v.get<std::string>(), name(key));
    throw ConfigError(name(key), "expected an unsigned integer");
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!doc_.at(key).is_boolean()) throw ConfigError(name(key), "expected true or false");
    return doc_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!doc_.at(key).is_string()) throw ConfigError(name(key), "expected a string");
    return doc_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_.at(key);
    if (!v.is_array()) throw ConfigError(name(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], name(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  std::vector<Index> integers(const std::string& key) const {
    if (!has(key)) return {};
    const auto& v = doc_.at(key);
    if (!v.is_array()) throw ConfigError(name(key), "expected an array of integers");
    std::vector<Index> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_integer(v[i], name(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

 private:
  static double as_number(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
  }

  static Index as_integer(const nlohmann::json& v, const std::string& field) {
    if (v.is_number_integer()) return v.get<Index>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<Index>(d);
    }
    throw ConfigError(field, "expected an integer");
  }

  static std::uint64_t parse_seed(const std::string& s, const std::string& field) {
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
      if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
      out = std::stoull(s, &pos, 0);
    } catch (const std::exception&) {
      throw ConfigError(field, "expected an unsigned 64-bit integer");
    }
    if (pos != s.size()) throw ConfigError(field, "expected an unsigned 64-bit integer");
    return out;
  }

  const nlohmann::json& doc_;
  std::string prefix_;
};

const nlohmann::json& subtable(const nlohmann::json& doc, const std::string& key) {
  static const nlohmann::json empty = nlohmann::json::object();
  return doc.contains(key) ? doc.at(key) : empty;
}

ProcessTemplate parse_process(const nlohmann::json& doc) {
  const auto& t = subtable(doc, "process");
  const std::string kind = t.is_object() && t.contains("kind") && t.at("kind").is_string()
                               ? t.at("kind").get<std::string>()
                               : "moving_average";
  if (kind == "moving_average" || kind == "ma" || kind == "iid") {
    Section s(t, "process",
              {"kind", "theta", "factor", "noise_sd", "noise_theta", "innovations"});
    MovingAverageTemplate out;
    out.theta = s.number("theta", out.theta);
    out.factor = s.number("factor", out.factor);
    out.noise_sd = s.number("noise_sd", out.noise_sd);
    out.noise_theta = s.number("noise_theta", out.noise_theta);
    const std::string innov = s.string("innovations", "gaussian");
    if (innov == "uniform") {
      out.uniform_innovations = true;
    } else if (innov != "gaussian") {
      throw ConfigError("process.innovations", "expected \"gaussian\" or \"uniform\"");
    }
    if (!(out.noise_sd >= 0.0)) throw ConfigError("process.noise_sd", "must be non-negative");
    return out;
  }
  if (kind == "arx") {
    Section s(t, "process", {"kind", "ar", "lags_per_series", "exog_ma", "noise_sd", "burn_in"});
    ArxTemplate out;
    out.ar = s.numbers("ar", out.ar);
    out.lags_per_series = s.integer("lags_per_series", out.lags_per_series);
    out.exog_ma = s.numbers("exog_ma", out.exog_ma);
    out.noise_sd = s.number("noise_sd", out.noise_sd);
    out.burn_in = s.integer("burn_in", out.burn_in);
    if (out.lags_per_series < 1) throw ConfigError("process.lags_per_series", "must be positive");
    if (out.burn_in < 0) throw ConfigError("process.burn_in", "must be non-negative");
    if (!(out.noise_sd >= 0.0)) throw ConfigError("process.noise_sd", "must be non-negative");
    if (!out.ar.empty() && ar_spectral_radius(out.ar) >= 1.0) {
      throw ConfigError("process.ar", "AR polynomial is not stable");
    }
    return out;
  }
  throw ConfigError("process.kind", "expected \"moving_average\" or \"arx\", got \"" + kind + "\"");
}

CoefficientSpec parse_coefficients(const nlohmann::json& doc) {
  const auto& t = subtable(doc, "coefficients");
  Section s(t, "coefficients",
            {"regime", "gamma", "L", "U", "rate", "L1", "U1", "k0", "theta_min", "theta_max",
             "ordering", "signs"});
  CoefficientSpec spec;
  const std::string regime = s.string("regime", "polynomial");
  const auto reject = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (s.has(k)) throw ConfigError(s.name(k), "not used by the " + regime + " regime");
    }
  };
  if (regime == "polynomial") {
    reject({"rate", "L1", "U1", "k0", "theta_min", "theta_max"});
    PolynomialDecay r;
    r.gamma = s.number("gamma", r.gamma);
    r.lower = s.number("L", r.lower);
    r.upper = s.number("U", r.upper);
    spec.regime = r;
  } else if (regime == "exponential") {
    reject({"gamma", "L", "U", "k0", "theta_min", "theta_max"});
    ExponentialDecay r;
    r.rate = s.number("rate", r.rate);
    r.lower = s.number("L1", r.lower);
    r.upper = s.number("U1", r.upper);
    spec.regime = r;
  } else if (regime == "strong") {
    reject({"gamma", "L", "U", "rate", "L1", "U1"});
    StrongSparsity r;
    r.k0 = s.integer("k0", r.k0);
    r.theta_min = s.number("theta_min", r.theta_min);
    r.theta_max = s.number("theta_max", r.theta_max);
    spec.regime = r;
  } else {
    throw ConfigError("coefficients.regime",
                      "expected \"polynomial\", \"exponential\" or \"strong\", got \"" + regime + "\"");
  }
  const std::string ordering = s.string("ordering", "identity");
  if (ordering == "identity") {
    spec.ordering = Ordering::identity;
  } else if (ordering == "random") {
    spec.ordering = Ordering::random;
  } else {
    throw ConfigError("coefficients.ordering", "expected \"identity\" or \"random\"");
  }
  const std::string signs = s.string("signs", "positive");
  if (signs == "positive") {
    spec.signs = SignPattern::positive;
  } else if (signs == "random") {
    spec.signs = SignPattern::random;
  } else {
    throw ConfigError("coefficients.signs", "expected \"positive\" or \"random\"");
  }
  return spec;
}

PRule parse_p_rule(const Section& s) {
  PRule rule;
  const std::string kind = s.string("p_rule", "equal");
  if (kind == "equal") {
    rule.kind = PRule::Kind::equal;
  } else if (kind == "fixed") {
    rule.kind = PRule::Kind::fixed;
  } else if (kind == "multiple") {
    rule.kind = PRule::Kind::multiple;
  } else if (kind == "power") {
    rule.kind = PRule::Kind::power;
  } else {
    throw ConfigError("experiment.p_rule", "expected \"equal\", \"fixed\", \"multiple\" or \"power\"");
  }
  rule.value = s.number("p_value", rule.kind == PRule::Kind::multiple ? 2.0 : 1.0);
  if (rule.kind != PRule::Kind::equal && !s.has("p_value") && rule.kind != PRule::Kind::multiple) {
    throw ConfigError("experiment.p_value", "required for p_rule \"" + kind + "\"");
  }
  return rule;
}

}  // namespace

nlohmann::json toml_to_json(const std::string& text, const std::string& origin) {
  try {
    const toml::table table = toml::parse(text, origin);
    return node_to_json(table);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw ConfigError("", origin + ":" + std::to_string(where.line) + ":" +
                              std::to_string(where.column) + ": " + std::string(e.description()));
  }
}

nlohmann::json load_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (path.extension() == ".json") {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("", path.string() + ": " + e.what());
    }
  }
  return toml_to_json(text, path.string());
}

Config parse_config(const nlohmann::json& doc) {
  Section top(doc, "",
              {"seed", "n", "p", "data", "process", "coefficients", "penalty", "experiment", "oracle"});
  Config cfg;
  cfg.source = doc;
  cfg.seed = top.seed("seed", cfg.seed);
  cfg.n = top.integer("n", cfg.n);
  cfg.p = top.integer("p", cfg.p);
  if (top.has("data")) cfg.data = top.string("data", "");
  if (cfg.n < 2) throw ConfigError("n", "must be at least 2");
  if (cfg.p < 1) throw ConfigError("p", "must be at least 1");

  cfg.process = parse_process(doc);
  cfg.coefficients = parse_coefficients(doc);
  cfg.coefficients.p = cfg.p;
  try {
    cfg.coefficients.validate();
  } catch (const InvalidSpec& e) {
    const std::string field = e.field() == "p" ? "p" : "coefficients." + e.field();
    throw ConfigError(field, std::string(e.what()).substr(e.field().size() + 2));
  }

  Section pen(subtable(doc, "penalty"), "penalty", {"s_a", "delta_bar", "calibrate", "grid", "folds"});
  cfg.penalty.s_a = pen.number("s_a", cfg.penalty.s_a);
  cfg.penalty.delta_bar = pen.number("delta_bar", cfg.penalty.delta_bar);
  cfg.calibrate = pen.boolean("calibrate", cfg.calibrate);
  cfg.calibration_grid = pen.numbers("grid", cfg.calibration_grid);
  cfg.folds = pen.integer("folds", cfg.folds);
  if (!(cfg.penalty.s_a > 0.0)) throw ConfigError("penalty.s_a", "must be positive");
  if (!(cfg.penalty.delta_bar > 0.0)) throw ConfigError("penalty.delta_bar", "must be positive");
  if (cfg.calibration_grid.empty()) throw ConfigError("penalty.grid", "must be nonempty");
  for (double g : cfg.calibration_grid) {
    if (!(g > 0.0)) throw ConfigError("penalty.grid", "candidates must be positive");
  }
  if (cfg.folds < 2) throw ConfigError("penalty.folds", "must be at least 2");

  Section exp(subtable(doc, "experiment"), "experiment",
              {"n_grid", "p_rule", "p_value", "replications"});
  cfg.n_grid = exp.integers("n_grid");
  cfg.p_rule = parse_p_rule(exp);
  cfg.replications = exp.integer("replications", cfg.replications);
  if (cfg.replications < 1) throw ConfigError("experiment.replications", "must be at least 1");

  Section orc(subtable(doc, "oracle"), "oracle",
              {"xi", "m_max", "best_m", "a5_max_card", "a5_seed", "covariance", "coefficients"});
  cfg.oracle.xi = orc.number("xi", cfg.oracle.xi);
  if (orc.has("m_max")) cfg.oracle.m_max = orc.integer("m_max", 0);
  if (orc.has("best_m")) cfg.oracle.best_m = orc.integer("best_m", 0);
  cfg.oracle.a5_max_card = orc.integer("a5_max_card", cfg.oracle.a5_max_card);
  cfg.oracle.a5_seed = orc.seed("a5_seed", cfg.oracle.a5_seed);
  if (orc.has("covariance")) cfg.oracle.covariance_file = orc.string("covariance", "");
  if (orc.has("coefficients")) cfg.oracle.coefficients_file = orc.string("coefficients", "");
  if (!(cfg.oracle.xi > 0.0 && cfg.oracle.xi <= 1.0)) throw ConfigError("oracle.xi", "must lie in (0, 1]");
  if (cfg.oracle.m_max && *cfg.oracle.m_max < 1) throw ConfigError("oracle.m_max", "must be positive");
  if (cfg.oracle.best_m && *cfg.oracle.best_m < 0) throw ConfigError("oracle.best_m", "must be non-negative");
  if (cfg.oracle.a5_max_card < 0) throw ConfigError("oracle.a5_max_card", "must be non-negative");
  return cfg;
}

}  // namespace greedysel::cli
