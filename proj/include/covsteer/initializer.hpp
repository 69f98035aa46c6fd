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

#ifndef COVSTEER_INITIALIZER_HPP
#define COVSTEER_INITIALIZER_HPP

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/conic.hpp"
#include "covsteer/discretize.hpp"
#include "covsteer/scenario.hpp"

namespace covsteer {

struct InitializerOptions {
  int segments = 0;  // 0: use the scenario's N
  int max_iterations = 200;
  double virtual_control_weight = 1e3;
  double initial_radius = 1.0;  // trust region, infinity norm on states
  double min_radius = 1e-9;
  double max_radius = 10.0;
  // Stop when the predicted decrease falls below this (relative to the cost,
  // floored at 1). Must sit above the conic solver's objective accuracy.
  double tolerance = 1e-7;
  // Defect (infinity norm, scaled) accepted at convergence.
  double defect_tolerance = 1e-9;
  double final_mass_fraction = 0.8;  // of the initial mass, for the guess
  IntegratorConfig integrator;
  SolverSettings conic;
  std::ostream* log = nullptr;
};

/// Minimum-fuel problem for a model whose control is [u; Gamma] with
/// |u| <= Gamma <= u_max. Cost sum Gamma_k dt_k. All quantities are in the
/// model's units.
struct MinFuelProblem {
  const SegmentModel* model = nullptr;
  Eigen::VectorXd initial_state;  // fixed, full state
  Eigen::VectorXd final_target;   // fixes the leading components of x_N
  std::vector<double> times;
  double u_max = 0.0;
  std::vector<Eigen::VectorXd> guess_nodes;  // optional; linear if empty
};

struct MinFuelResult {
  ReferenceTrajectory trajectory;  // controls are [u; Gamma]
  int iterations = 0;
  bool converged = false;
  double cost = 0.0;
  double max_defect = 0.0;
};

/// Successive convexification with virtual controls and a trust region.
MinFuelResult solve_min_fuel(const MinFuelProblem& problem,
                             const InitializerOptions& options = {});

/// Deterministic minimum-fuel reference for a scenario, in physical units.
/// Nodes are re-propagated through the nonlinear dynamics from x_i.
ReferenceTrajectory solve_reference(const Scenario& scenario,
                                    const InitializerOptions& options = {});

/// Cold-start guess in scaled units: polar interpolation of radius, angle
/// (counter-clockwise sweep) and out-of-plane component; radial and
/// tangential speeds linear; mass linear to final_mass_fraction * m_i.
std::vector<Eigen::VectorXd> interpolated_guess(const Eigen::VectorXd& initial,
                                                const Eigen::VectorXd& final_rv,
                                                int segments, double final_mass_fraction);

/// Text reference format:
///   line 1: "covsteer-reference n_x <n> n_u <m> N <N> units <tag>"
///   line 2: column header
///   N+1 rows: time, state..., control... (the last row repeats zeros)
void write_reference(const ReferenceTrajectory& ref, const std::string& path,
                     const std::string& units = "km,km/s,kg,s,kg.km/s2");
std::string format_reference(const ReferenceTrajectory& ref,
                             const std::string& units = "km,km/s,kg,s,kg.km/s2");
ReferenceTrajectory load_reference(const std::string& path);
ReferenceTrajectory parse_reference(const std::string& text,
                                    const std::string& source = "<text>");

}  // namespace covsteer

#endif  // COVSTEER_INITIALIZER_HPP
