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

#ifndef COVSTEER_SCENARIO_HPP
#define COVSTEER_SCENARIO_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/dynamics.hpp"
#include "covsteer/solver_config.hpp"

namespace covsteer {

/// A transfer problem in physical units: km, km/s, kg, s. Forces are in
/// kg km/s^2 (1 N = 1e-3 kg km/s^2) and g0 in km/s^2.
struct Scenario {
  std::string name;
  int spatial = 2;
  Eigen::VectorXd initial_mean;  // [r; v; m]
  Eigen::VectorXd final_mean;    // [r; v]; final mass is free
  Eigen::MatrixXd initial_cov;   // n_x x n_x
  Eigen::MatrixXd final_cov;     // n_x x n_x, bound or target per solver mode
  PhysicalParams params;
  double time_of_flight = 0.0;  // s
  int segments = 0;
  SolverConfig solver;

  int state_dim() const { return 2 * spatial + 1; }
  std::vector<double> grid() const;  // N+1 uniform epochs starting at 0
  /// Checks dimensions, positivity and PSD covariances; errors name the field.
  void validate() const;
};

/// Parses the key = value scenario format (see README). Errors carry the
/// line number and field name.
Scenario parse_scenario(const std::string& text, const std::string& source = "<text>");
Scenario load_scenario(const std::string& path);
/// Writes a scenario so that parse_scenario reproduces it exactly.
std::string write_scenario(const Scenario& scenario);

/// Bundled presets: earth-mars-2d, earth-mars-3d, earth-mars-3d-sigma40.
std::vector<std::string> preset_names();
Scenario preset(const std::string& name);
std::string preset_text(const std::string& name);

}  // namespace covsteer

#endif  // COVSTEER_SCENARIO_HPP
