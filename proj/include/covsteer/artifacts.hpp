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


#ifndef COVSTEER_ARTIFACTS_HPP
#define COVSTEER_ARTIFACTS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/monte_carlo.hpp"
#include "covsteer/scenario.hpp"
#include "covsteer/steering.hpp"

namespace covsteer {

/// Reads a whole file; kIo on failure.
std::string read_text_file(const std::string& path);
/// Writes to path.tmp and renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

struct Column {
  std::string name;
  std::string unit;  // "-" for dimensionless
};

/// A numeric table. Text layout:
///   # covsteer-table <name>
///   # units<TAB>unit_1<TAB>...
///   name_1<TAB>...
///   one row per line, 17 significant digits
struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // throws if absent
  void validate() const;
};

std::string format_table(const Table& table);
Table parse_table(const std::string& text, const std::string& source = "<text>");

/// 2D confidence ellipses: for each node the closed polyline
/// (x - mean)^T cov^-1 (x - mean) = Q_chi2_2(confidence), with offsets from
/// the mean multiplied by `scale`. The last point repeats the first.
std::vector<std::vector<Eigen::Vector2d>> emit_ellipses(
    const std::vector<Eigen::Matrix2d>& covs, const std::vector<Eigen::Vector2d>& means,
    double confidence, double scale, int points = 64);

/// Physical units used in emitted tables: km, km/s, kg, N, day.
struct SolutionTables {
  Table nodes;        // solved mean of the steered state
  Table nominal;      // nonlinear full state along the feedforward
  Table covariance;   // lower triangle of the steered covariance
  Table feedforward;  // N and norm
  Table gains;        // row-major K, N per state unit
};

SolutionTables solution_tables(const ScaledSolution& solved);
/// Rebuilds a solution for simulation from its tables and the scenario it
/// was solved for.
ScaledSolution solution_from_tables(const SolutionTables& tables, const Scenario& scenario);

/// Position and velocity ellipses (first two axes of each block).
Table ellipse_table(const ScaledSolution& solved, const std::string& block, double confidence,
                    double scale);

/// Per-node ensemble summary: time, mean, covariance lower triangle, inside
/// fractions and mass spread, in physical units.
Table ensemble_summary(const ScaledSolution& solved, const Ensemble& ensemble,
                       const EnsembleStats& stats, const Coverage& coverage,
                       const std::vector<double>& control_satisfaction);
/// Raw sample states, one row per (sample, node).
Table sample_table(const ScaledSolution& solved, const Ensemble& ensemble);

/// Headline numbers of a solution in physical units.
struct SolutionMetrics {
  double final_mass = 0.0;           // kg, nominal state at the last node
  double final_mass_std = 0.0;       // kg, zero when mass is not steered
  double peak_position_trace = 0.0;  // km^2, max over nodes
  double peak_thrust = 0.0;          // N, max feedforward norm
  int iterations = 0;
};
SolutionMetrics solution_metrics(const ScaledSolution& solved);

}  // namespace covsteer

#endif  // COVSTEER_ARTIFACTS_HPP
