/*
 Copyright 2026 The covsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include "covsteer/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "covsteer/chi2.hpp"
#include "covsteer/error.hpp"
#include "covsteer/problem.hpp"

namespace covsteer {

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kNewtonPerForceUnit = 1e3;  // 1 kg km/s^2 = 1000 N

[[noreturn]] void parse_error(const std::string& source, int line, const std::string& what) {
  throw Error(ErrorCategory::kParse, fmt::format("{}:{}: {}", source, line, what));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

// Names and physical units of the state components.
struct StateLabels {
  std::vector<std::string> names;
  std::vector<std::string> units;
};

StateLabels state_labels(int spatial, int dim) {
  static const char* axes = "xyz";
  StateLabels l;
  for (int i = 0; i < spatial; ++i) {
    l.names.push_back(std::string("r") + axes[i]);
    l.units.push_back("km");
  }
  for (int i = 0; i < spatial; ++i) {
    l.names.push_back(std::string("v") + axes[i]);
    l.units.push_back("km/s");
  }
  if (dim == 2 * spatial + 1) {
    l.names.push_back("m");
    l.units.push_back("kg");
  }
  return l;
}

std::string product_unit(const std::string& a, const std::string& b) {
  return a == b ? a + "^2" : a + "*" + b;
}

std::string per_unit(const std::string& u) {
  return u.find('/') == std::string::npos ? "N/" + u : "N/(" + u + ")";
}

double day(double t_scaled, const ScaleSet& s) { return t_scaled * s.time / kSecondsPerDay; }

void append(std::vector<double>& row, const Eigen::VectorXd& v) {
  row.insert(row.end(), v.data(), v.data() + v.size());
}

void append_lower(std::vector<double>& row, const Eigen::MatrixXd& P) {
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    for (Eigen::Index i = j; i < P.rows(); ++i) row.push_back(P(i, j));
  }
}

void lower_columns(Table& t, const StateLabels& l, const std::string& prefix) {
  for (std::size_t j = 0; j < l.names.size(); ++j) {
    for (std::size_t i = j; i < l.names.size(); ++i) {
      t.columns.push_back({prefix + l.names[i] + "_" + l.names[j], product_unit(l.units[i], l.units[j])});
    }
  }
}

Eigen::MatrixXd read_lower(const std::vector<double>& row, int first, int n) {
  Eigen::MatrixXd P(n, n);
  int c = first;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) P(i, j) = P(j, i) = row[c++];
  }
  return P;
}

Eigen::VectorXd read_vector(const std::vector<double>& row, int first, int n) {
  return Eigen::Map<const Eigen::VectorXd>(row.data() + first, n);
}

Eigen::MatrixXd physical_cov(const Eigen::MatrixXd& P, const ScaleSet& s) {
  const Eigen::VectorXd u = state_units(P.rows(), s);
  return u.asDiagonal() * P * u.asDiagonal();
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCategory::kIo, "cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCategory::kIo, "write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCategory::kIo, "cannot rename " + tmp + " to " + path);
  }
}

int Table::column(const std::string& col) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == col) return static_cast<int>(i);
  }
  throw Error(ErrorCategory::kInvalidArgument, "table " + name + " has no column " + col);
}

void Table::validate() const {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw Error(ErrorCategory::kInvalidArgument, "table name must be a single word");
  }
  if (columns.empty()) throw Error(ErrorCategory::kInvalidArgument, "table " + name + " has no columns");
  for (const Column& c : columns) {
    if (c.name.empty() || c.unit.empty() || (c.name + c.unit).find_first_of("\t\n") != std::string::npos) {
      throw Error(ErrorCategory::kInvalidArgument, "table " + name + ": bad column label");
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size()) {
      throw Error(ErrorCategory::kInvalidArgument,
                  fmt::format("table {}: row {} has {} values, expected {}", name, r,
                              rows[r].size(), columns.size()));
    }
  }
}

std::string format_table(const Table& t) {
  t.validate();
  std::string out = "# covsteer-table " + t.name + "\n# units";
  for (const Column& c : t.columns) out += "\t" + c.unit;
  out += "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    out += (i ? "\t" : "") + t.columns[i].name;
  }
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += fmt::format("{}{:.17g}", i ? "\t" : "", row[i]);
    }
    out += "\n";
  }
  return out;
}

Table parse_table(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto next = [&]() {
    if (!std::getline(in, line)) parse_error(source, lineno + 1, "unexpected end of table");
    ++lineno;
  };
  Table t;
  next();
  const std::string magic = "# covsteer-table ";
  if (line.rfind(magic, 0) != 0) parse_error(source, lineno, "missing table header");
  t.name = line.substr(magic.size());
  next();
  std::vector<std::string> units = split_tabs(line);
  if (units.empty() || units[0] != "# units") parse_error(source, lineno, "missing units line");
  units.erase(units.begin());
  next();
  const std::vector<std::string> names = split_tabs(line);
  if (names.size() != units.size()) {
    parse_error(source, lineno, fmt::format("{} column names for {} units", names.size(), units.size()));
  }
  for (std::size_t i = 0; i < names.size(); ++i) t.columns.push_back({names[i], units[i]});
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != t.columns.size()) {
      parse_error(source, lineno, fmt::format("{} values, expected {}", fields.size(), t.columns.size()));
    }
    std::vector<double> row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(fields[i].c_str(), &end);
      if (fields[i].empty() || *end != '\0') {
        parse_error(source, lineno, "column " + t.columns[i].name + ": not a number '" + fields[i] + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  try {
    t.validate();
  } catch (const Error& e) {
    parse_error(source, lineno, e.what());
  }
  return t;
}

std::vector<std::vector<Eigen::Vector2d>> emit_ellipses(const std::vector<Eigen::Matrix2d>& covs,
                                                        const std::vector<Eigen::Vector2d>& means,
                                                        double confidence, double scale,
                                                        int points) {
  if (covs.size() != means.size()) {
    throw Error(ErrorCategory::kInvalidArgument, "ellipses: covariance/mean count mismatch");
  }
  if (points < 3 || !(scale > 0.0)) {
    throw Error(ErrorCategory::kInvalidArgument, "ellipses: need >= 3 points and positive scale");
  }
  const double radius = std::sqrt(chi2_quantile(2, confidence));
  std::vector<std::vector<Eigen::Vector2d>> out;
  for (std::size_t k = 0; k < covs.size(); ++k) {
    const Eigen::Matrix2d C = 0.5 * (covs[k] + covs[k].transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(C);
    const Eigen::Vector2d d = eig.eigenvalues();
    if (!(d.minCoeff() > 1e-12 * d.maxCoeff())) {
      throw Error(ErrorCategory::kDomain, fmt::format("ellipses: singular block at node {}", k));
    }
    const Eigen::Matrix2d axes = eig.eigenvectors() * d.cwiseSqrt().asDiagonal();
    std::vector<Eigen::Vector2d> poly;
    for (int j = 0; j <= points; ++j) {
      const double th = 2.0 * std::numbers::pi * (j % points) / points;
      poly.push_back(means[k] + scale * radius * axes * Eigen::Vector2d(std::cos(th), std::sin(th)));
    }
    out.push_back(std::move(poly));
  }
  return out;
}

SolutionTables solution_tables(const ScaledSolution& solved) {
  const SteeringIterate& it = solved.solution.iterate;
  const ScaleSet& s = solved.scales;
  const int n = static_cast<int>(it.mean.front().size());
  const int nx = 2 * solved.spatial + 1;
  const int m = solved.spatial;
  const int N = it.segments();
  const StateLabels steered = state_labels(solved.spatial, n);
  const StateLabels full = state_labels(solved.spatial, nx);
  const Eigen::VectorXd su = state_units(n, s);
  const Eigen::VectorXd fu = state_units(nx, s);
  const double force = s.force() * kNewtonPerForceUnit;

  SolutionTables t;
  t.nodes.name = "nodes";
  t.nominal.name = "nominal";
  t.covariance.name = "covariance";
  t.feedforward.name = "feedforward";
  t.gains.name = "gains";
  for (Table* tab : {&t.nodes, &t.nominal, &t.covariance, &t.feedforward, &t.gains}) {
    tab->columns = {{"k", "-"}, {"t", "day"}};
  }
  for (int i = 0; i < n; ++i) t.nodes.columns.push_back({steered.names[i], steered.units[i]});
  for (int i = 0; i < nx; ++i) t.nominal.columns.push_back({full.names[i], full.units[i]});
  lower_columns(t.covariance, steered, "P_");
  static const char* axes = "xyz";
  for (int i = 0; i < m; ++i) t.feedforward.columns.push_back({std::string("F") + axes[i], "N"});
  t.feedforward.columns.push_back({"F_norm", "N"});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      t.gains.columns.push_back({std::string("K_u") + axes[i] + "_" + steered.names[j], per_unit(steered.units[j])});
    }
  }

  for (int k = 0; k <= N; ++k) {
    const double tk = day(solved.times[k], s);
    std::vector<double> row{static_cast<double>(k), tk};
    append(row, it.mean[k].cwiseProduct(su));
    t.nodes.rows.push_back(row);
    row = {static_cast<double>(k), tk};
    append(row, it.full_nodes[k].cwiseProduct(fu));
    t.nominal.rows.push_back(row);
    row = {static_cast<double>(k), tk};
    append_lower(row, physical_cov(it.P[k], s));
    t.covariance.rows.push_back(row);
  }
  for (int k = 0; k < N; ++k) {
    const double tk = day(solved.times[k], s);
    std::vector<double> row{static_cast<double>(k), tk};
    const Eigen::VectorXd F = it.feedforward[k] * force;
    append(row, F);
    row.push_back(F.norm());
    t.feedforward.rows.push_back(row);
    row = {static_cast<double>(k), tk};
    const Eigen::MatrixXd K = force * solved.solution.gains[k] * su.cwiseInverse().asDiagonal();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) row.push_back(K(i, j));
    }
    t.gains.rows.push_back(row);
  }
  return t;
}

ScaledSolution solution_from_tables(const SolutionTables& t, const Scenario& scenario) {
  const ScaledProblem p = scale_scenario(scenario);
  const ScaleSet& s = p.scales;
  const int spatial = scenario.spatial;
  const int nx = 2 * spatial + 1;
  const int n = static_cast<int>(t.nodes.columns.size()) - 2;
  const int N = static_cast<int>(t.feedforward.rows.size());
  const auto bad = [](const std::string& what) {
    throw Error(ErrorCategory::kInvalidArgument, "solution tables: " + what);
  };
  if (n != nx && n != nx - 1) bad("node table does not match the scenario dimension");
  if (N < 1 || static_cast<int>(t.nodes.rows.size()) != N + 1 ||
      static_cast<int>(t.nominal.rows.size()) != N + 1 ||
      static_cast<int>(t.covariance.rows.size()) != N + 1 ||
      static_cast<int>(t.gains.rows.size()) != N) {
    bad("row counts disagree");
  }
  if (static_cast<int>(t.nominal.columns.size()) != nx + 2 ||
      static_cast<int>(t.covariance.columns.size()) != 2 + n * (n + 1) / 2 ||
      static_cast<int>(t.feedforward.columns.size()) != 3 + spatial ||
      static_cast<int>(t.gains.columns.size()) != 2 + spatial * n) {
    bad("column counts disagree");
  }
  const Eigen::VectorXd su = state_units(n, s);
  const Eigen::VectorXd fu = state_units(nx, s);
  const double force = s.force() * kNewtonPerForceUnit;

  ScaledSolution out;
  out.scales = s;
  out.spatial = spatial;
  out.params = p.params;
  out.mass_stochastic = n == nx;
  out.initial_cov = p.initial_cov;
  SteeringIterate& it = out.solution.iterate;
  for (int k = 0; k <= N; ++k) {
    out.times.push_back(t.nodes.rows[k][1] * kSecondsPerDay / s.time);
    it.mean.push_back(read_vector(t.nodes.rows[k], 2, n).cwiseQuotient(su));
    it.full_nodes.push_back(read_vector(t.nominal.rows[k], 2, nx).cwiseQuotient(fu));
    const Eigen::VectorXd inv = su.cwiseInverse();
    it.P.push_back(inv.asDiagonal() * read_lower(t.covariance.rows[k], 2, n) * inv.asDiagonal());
  }
  for (int k = 0; k < N; ++k) {
    it.feedforward.push_back(read_vector(t.feedforward.rows[k], 2, spatial) / force);
    Eigen::MatrixXd K(spatial, n);
    for (int i = 0; i < spatial; ++i) {
      for (int j = 0; j < n; ++j) K(i, j) = t.gains.rows[k][2 + i * n + j];
    }
    out.solution.gains.push_back(K * su.asDiagonal() / force);
  }
  out.solution.converged = true;
  return out;
}

Table ellipse_table(const ScaledSolution& solved, const std::string& block, double confidence,
                    double scale) {
  int first = 0;
  std::string unit = "km";
  if (block == "velocity") {
    first = solved.spatial;
    unit = "km/s";
  } else if (block != "position") {
    throw Error(ErrorCategory::kInvalidArgument, "ellipses: block must be position or velocity");
  }
  const SteeringIterate& it = solved.solution.iterate;
  std::vector<Eigen::Matrix2d> covs;
  std::vector<Eigen::Vector2d> means;
  for (std::size_t k = 0; k < it.P.size(); ++k) {
    const Eigen::MatrixXd P = physical_cov(it.P[k], solved.scales);
    const Eigen::VectorXd x = it.mean[k].cwiseProduct(state_units(it.mean[k].size(), solved.scales));
    covs.push_back(P.block<2, 2>(first, first));
    means.push_back(x.segment<2>(first));
  }
  const auto polys = emit_ellipses(covs, means, confidence, scale);
  Table t;
  t.name = "ellipses-" + block;
  t.columns = {{"k", "-"}, {"point", "-"}, {"x", unit}, {"y", unit}};
  for (std::size_t k = 0; k < polys.size(); ++k) {
    for (std::size_t j = 0; j < polys[k].size(); ++j) {
      t.rows.push_back({static_cast<double>(k), static_cast<double>(j), polys[k][j](0), polys[k][j](1)});
    }
  }
  return t;
}

Table ensemble_summary(const ScaledSolution& solved, const Ensemble& ens, const EnsembleStats& st,
                       const Coverage& cov, const std::vector<double>& sat) {
  const int nx = 2 * solved.spatial + 1;
  const int nodes = ens.nodes();
  if (static_cast<int>(st.mean.size()) != nodes || static_cast<int>(cov.position.size()) != nodes ||
      static_cast<int>(sat.size()) != nodes - 1 || static_cast<int>(solved.times.size()) != nodes) {
    throw Error(ErrorCategory::kInvalidArgument, "ensemble summary: node counts disagree");
  }
  const StateLabels l = state_labels(solved.spatial, nx);
  const Eigen::VectorXd fu = state_units(nx, solved.scales);
  Table t;
  t.name = "ensemble";
  t.columns = {{"k", "-"}, {"t", "day"}};
  for (int i = 0; i < nx; ++i) t.columns.push_back({"mean_" + l.names[i], l.units[i]});
  lower_columns(t, l, "C_");
  t.columns.insert(t.columns.end(), {{"inside_position", "-"},
                                     {"inside_velocity", "-"},
                                     {"control_within_bound", "-"},
                                     {"mass_std", "kg"}});
  for (int k = 0; k < nodes; ++k) {
    std::vector<double> row{static_cast<double>(k), day(solved.times[k], solved.scales)};
    append(row, st.mean[k].cwiseProduct(fu));
    append_lower(row, physical_cov(st.cov[k], solved.scales));
    row.push_back(cov.position[k]);
    row.push_back(cov.velocity[k]);
    // The last node has no segment; report the terminal segment again.
    row.push_back(sat[std::min(k, nodes - 2)]);
    row.push_back(std::sqrt(std::max(0.0, st.cov[k](nx - 1, nx - 1))) * solved.scales.mass);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table sample_table(const ScaledSolution& solved, const Ensemble& ens) {
  const int nx = 2 * solved.spatial + 1;
  const StateLabels l = state_labels(solved.spatial, nx);
  const Eigen::VectorXd fu = state_units(nx, solved.scales);
  Table t;
  t.name = "samples";
  t.columns = {{"sample", "-"}, {"flagged", "-"}, {"k", "-"}, {"t", "day"}};
  for (int i = 0; i < nx; ++i) t.columns.push_back({l.names[i], l.units[i]});
  for (int i = 0; i < ens.samples; ++i) {
    for (int k = 0; k < ens.nodes(); ++k) {
      std::vector<double> row{static_cast<double>(i), ens.flagged[i] ? 1.0 : 0.0,
                              static_cast<double>(k), day(solved.times[k], solved.scales)};
      append(row, ens.states[i][k].cwiseProduct(fu));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

SolutionMetrics solution_metrics(const ScaledSolution& solved) {
  const SteeringIterate& it = solved.solution.iterate;
  const ScaleSet& s = solved.scales;
  const int d = solved.spatial;
  SolutionMetrics m;
  m.final_mass = it.full_nodes.back()(2 * d) * s.mass;
  if (it.P.back().rows() == 2 * d + 1) {
    m.final_mass_std = std::sqrt(std::max(0.0, it.P.back()(2 * d, 2 * d))) * s.mass;
  }
  for (const Eigen::MatrixXd& P : it.P) {
    m.peak_position_trace = std::max(m.peak_position_trace, P.topLeftCorner(d, d).trace());
  }
  m.peak_position_trace *= s.length * s.length;
  for (const Eigen::VectorXd& F : it.feedforward) m.peak_thrust = std::max(m.peak_thrust, F.norm());
  m.peak_thrust *= s.force() * kNewtonPerForceUnit;
  m.iterations = static_cast<int>(solved.solution.history.size());
  return m;
}

}  // namespace covsteer
