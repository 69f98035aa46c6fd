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

#ifndef COVSTEER_PROBLEM_HPP
#define COVSTEER_PROBLEM_HPP

#include <vector>

#include <Eigen/Dense>

#include "covsteer/discretize.hpp"
#include "covsteer/dynamics.hpp"
#include "covsteer/scenario.hpp"

namespace covsteer {

/// A scenario expressed in canonical units (ScaleSet::canonical).
struct ScaledProblem {
  ScaleSet scales;
  int spatial = 2;
  PhysicalParams params;
  Eigen::VectorXd initial_mean;  // [r; v; m]
  Eigen::VectorXd final_mean;    // [r; v]
  Eigen::MatrixXd initial_cov;
  Eigen::MatrixXd final_cov;
  std::vector<double> times;

  int state_dim() const { return 2 * spatial + 1; }
};

ScaledProblem scale_scenario(const Scenario& scenario);

/// Reference trajectory conversions between physical and scaled units.
/// Controls are thrust vectors (force units).
ReferenceTrajectory scale_reference(const ReferenceTrajectory& ref, const ScaleSet& s);
ReferenceTrajectory unscale_reference(const ReferenceTrajectory& ref, const ScaleSet& s);

}  // namespace covsteer

#endif  // COVSTEER_PROBLEM_HPP
