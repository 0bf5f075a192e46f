#pragma once

// CSV and JSON serialization. Indices are written 1-based.

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "greedysel/eval.hpp"
#include "greedysel/hdaic.hpp"
#include "greedysel/model.hpp"
#include "greedysel/oga.hpp"
#include "greedysel/population.hpp"

namespace greedysel::io {

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Row-major CSV with a header row of 1-based column indices.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);

/// Header "y,x1,..,xp"; first column is the response.
void write_dataset_csv(std::ostream& out, const Eigen::VectorXd& y, const Eigen::MatrixXd& x);
Dataset read_dataset_csv(std::istream& in);

/// Columns index, beta_star, beta, sigma.
void write_coefficients_csv(std::ostream& out, const CoefficientVector& coef,
                            const Eigen::VectorXd& sigma);
/// Reads the beta_star column of a coefficients CSV (or a single-column file).
Eigen::VectorXd read_coefficients_csv(std::istream& in);

nlohmann::json to_json(const SelectionPath& path);
nlohmann::json to_json(const SelectionResult& result);
nlohmann::json to_json(const PopulationPath& path);
nlohmann::json to_json(const ExperimentResult& result, bool with_replications = true);

/// One row per (n, p) cell.
void write_experiment_csv(std::ostream& out, const ExperimentResult& result);
/// Two columns: rate regressor x and ln(mean CMSPE).
void write_plot_data(std::ostream& out, const ExperimentResult& result);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);

/// Writes each file to a temporary sibling first and renames them into place
/// only once all contents are staged.
class AtomicOutputs {
 public:
  explicit AtomicOutputs(std::filesystem::path dir);
  void add(const std::string& name, std::string contents);
  void commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace greedysel::io
