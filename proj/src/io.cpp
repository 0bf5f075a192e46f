#include "greedysel/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace greedysel::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    out.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DimensionMismatch("CSV row " + std::to_string(row) + ", column " + std::to_string(col) +
                            ": cannot parse '" + s + "' as a number");
  }
  return v;
}

/// Reads the header and the numeric body of a CSV table.
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DimensionMismatch("CSV input is empty");
  const std::vector<std::string> header = split_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DimensionMismatch("CSV row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(header.size()));
    }
    std::vector<double> values;
    values.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) values.push_back(parse_double(fields[c], row, c + 1));
    rows.push_back(std::move(values));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < header.size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return {header, m};
}

nlohmann::json one_based(const IndexSet& idx) {
  nlohmann::json out = nlohmann::json::array();
  for (Index j : idx) out.push_back(j + 1);
  return out;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

/// NaN / inf are not representable in JSON.
nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string stop_name(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::exact_fit: return "exact_fit";
    case StopReason::exhausted: return "exhausted";
  }
  return "unknown";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << c + 1;
  out << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) { return read_table(in).second; }

void write_dataset_csv(std::ostream& out, const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  if (y.size() != x.rows()) throw DimensionMismatch("response length does not match rows");
  out << 'y';
  for (Index c = 0; c < x.cols(); ++c) out << ",x" << c + 1;
  out << '\n';
  for (Index r = 0; r < x.rows(); ++r) {
    out << format_double(y(r));
    for (Index c = 0; c < x.cols(); ++c) out << ',' << format_double(x(r, c));
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  auto [header, m] = read_table(in);
  if (m.cols() < 2) throw DimensionMismatch("dataset CSV needs a response and at least one predictor");
  return Dataset(m.col(0), m.rightCols(m.cols() - 1));
}

void write_coefficients_csv(std::ostream& out, const CoefficientVector& coef,
                            const Eigen::VectorXd& sigma) {
  out << "index,beta_star,beta,sigma\n";
  for (Index j = 0; j < coef.beta_star.size(); ++j) {
    out << j + 1 << ',' << format_double(coef.beta_star(j)) << ',' << format_double(coef.beta(j))
        << ',' << format_double(sigma(j)) << '\n';
  }
}

Eigen::VectorXd read_coefficients_csv(std::istream& in) {
  auto [header, m] = read_table(in);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "beta_star") return m.col(static_cast<Index>(c));
  }
  if (m.cols() == 1) return m.col(0);
  throw DimensionMismatch("coefficient CSV has no beta_star column");
}

nlohmann::json to_json(const SelectionPath& path) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : path.coeffs) coeffs.push_back(vec_json(c));
  return {{"n", path.n},
          {"p", path.p},
          {"indices", one_based(path.indices)},
          {"rss", path.rss},
          {"coeffs_per_step", coeffs},
          {"stop", stop_name(path.stop)}};
}

nlohmann::json to_json(const SelectionResult& result) {
  return {{"k_hat", result.k_hat},
          {"K_n", result.K_n},
          {"s_a", result.s_a},
          {"criterion_values", result.criterion_values}};
}

nlohmann::json to_json(const PopulationPath& path) {
  return {{"xi", path.xi}, {"indices", one_based(path.indices)}, {"errors", path.errors}};
}

nlohmann::json to_json(const ExperimentResult& result, bool with_replications) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json cell = {{"n", c.n},
                           {"p", c.p},
                           {"mean_cmspe", c.mean_cmspe},
                           {"se_cmspe", c.se_cmspe},
                           {"mean_k_hat", c.mean_k_hat},
                           {"median_oracle_ratio", number_or_null(c.median_oracle_ratio)},
                           {"mean_oracle_cmspe", c.mean_oracle_cmspe},
                           {"failures", c.failures},
                           {"rate_x", c.rate_x}};
    cell["support_recovery"] = c.support_recovery ? nlohmann::json(*c.support_recovery) : nlohmann::json(nullptr);
    cell["exact_recovery"] = c.exact_recovery ? nlohmann::json(*c.exact_recovery) : nlohmann::json(nullptr);
    if (with_replications) {
      nlohmann::json reps = nlohmann::json::array();
      for (const auto& o : c.outcomes) {
        nlohmann::json r = {{"ok", o.ok}};
        if (o.ok) {
          r["cmspe"] = o.cmspe;
          r["k_hat"] = o.k_hat;
          r["K_n"] = o.K_n;
          r["oracle_cmspe"] = o.oracle_cmspe;
          r["oracle_k"] = o.oracle_k;
          r["support_covered"] = o.support_covered;
        } else {
          r["error"] = o.error;
        }
        reps.push_back(std::move(r));
      }
      cell["replications"] = std::move(reps);
    }
    cells.push_back(std::move(cell));
  }
  nlohmann::json out = {{"driver", result.driver}, {"failures", result.failures}, {"cells", cells}};
  if (result.fit) {
    out["slope_fit"] = {{"slope", result.fit->slope},
                        {"half_width", number_or_null(result.fit->half_width)},
                        {"intercept", result.fit->intercept},
                        {"cells", result.fit->cells}};
  } else {
    out["slope_fit"] = nullptr;
  }
  return out;
}

void write_experiment_csv(std::ostream& out, const ExperimentResult& result) {
  out << "n,p,mean_cmspe,se_cmspe,mean_k_hat,support_recovery,median_oracle_ratio,failures,rate_x\n";
  for (const auto& c : result.cells) {
    out << c.n << ',' << c.p << ',' << format_double(c.mean_cmspe) << ',' << format_double(c.se_cmspe)
        << ',' << format_double(c.mean_k_hat) << ','
        << (c.support_recovery ? format_double(*c.support_recovery) : std::string()) << ','
        << format_double(c.median_oracle_ratio) << ',' << c.failures << ','
        << format_double(c.rate_x) << '\n';
  }
}

void write_plot_data(std::ostream& out, const ExperimentResult& result) {
  out << "# x = " << result.driver << ", y = ln(mean CMSPE)\n";
  for (const auto& c : result.cells) {
    if (c.mean_cmspe > 0.0) out << format_double(c.rate_x) << ' ' << format_double(std::log(c.mean_cmspe)) << '\n';
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AtomicOutputs::AtomicOutputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

void AtomicOutputs::add(const std::string& name, std::string contents) {
  files_.emplace_back(name, std::move(contents));
}

void AtomicOutputs::commit() {
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> staged;
  for (const auto& [name, contents] : files_) {
    const auto tmp = dir_ / (name + ".partial");
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << contents;
    f.close();
    if (!f) throw Error("cannot write " + tmp.string());
    staged.push_back(tmp);
  }
  for (std::size_t i = 0; i < files_.size(); ++i) {
    std::filesystem::rename(staged[i], dir_ / files_[i].first);
  }
  files_.clear();
}

}  // namespace greedysel::io
