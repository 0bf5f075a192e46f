#pragma once

// Config-file parsing and subcommand entry points of the greedysel tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "greedysel/errors.hpp"
#include "greedysel/eval.hpp"
#include "greedysel/hdaic.hpp"
#include "greedysel/model.hpp"

namespace greedysel::cli {

/// Malformed or inconsistent configuration; exit code 1.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct OracleOptions {
  double xi = 1.0;
  std::optional<Index> m_max;   ///< defaults to min(p, 20)
  std::optional<Index> best_m;  ///< largest m for the exhaustive table; 0 disables
  Index a5_max_card = 2;
  std::uint64_t a5_seed = 0;
  std::optional<std::string> covariance_file;
  std::optional<std::string> coefficients_file;
};

struct Config {
  nlohmann::json source;  ///< normalized config document
  std::uint64_t seed = 0;
  Index n = 200;
  Index p = 50;
  ProcessTemplate process = MovingAverageTemplate{};
  CoefficientSpec coefficients;
  PenaltyConfig penalty;
  bool calibrate = false;
  std::vector<double> calibration_grid{0.5, 1.0, 2.0, 4.0, 8.0};
  Index folds = 5;
  std::optional<std::string> data;
  std::vector<Index> n_grid;
  PRule p_rule;
  Index replications = 1;
  OracleOptions oracle;
};

/// Parses a TOML document into its JSON equivalent. Syntax errors carry the
/// line and column.
nlohmann::json toml_to_json(const std::string& text, const std::string& origin = "config");

/// Reads a config file; `.json` files are parsed as JSON, anything else as TOML.
nlohmann::json load_document(const std::filesystem::path& path);

/// Throws ConfigError naming the offending field.
Config parse_config(const nlohmann::json& doc);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace greedysel::cli
