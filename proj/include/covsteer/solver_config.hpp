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

#ifndef COVSTEER_SOLVER_CONFIG_HPP
#define COVSTEER_SOLVER_CONFIG_HPP

#include <functional>
#include <string>

#include "covsteer/conic.hpp"
#include "covsteer/discretize.hpp"

namespace covsteer {

enum class TerminalCovarianceMode {
  kUpperBound,  // P_N <= P_f
  kEquality,    // P_N == P_f
};

std::string to_string(TerminalCovarianceMode mode);
TerminalCovarianceMode parse_terminal_mode(const std::string& text);

/// w = min(10^(i+3), 10^12) for SCP iteration i >= 1.
double penalty_weight(int iteration);

/// Settings of the sequential covariance-steering solver.
struct SolverConfig {
  double beta_u = 0.95;    // control chance-constraint level
  double p = 0.95;         // cost quantile
  double eps_Y = 0.01;     // trace regularization of Y
  double eps_x = 5e-4;     // relative mean-trajectory change
  double eps_zeta = 1e-6;  // slack tolerance
  double d = 100.0;        // covariance variable scaling
  int max_iterations = 50;
  TerminalCovarianceMode terminal_mode = TerminalCovarianceMode::kUpperBound;
  bool mass_stochastic = true;
  // Initial tau_hat as a fraction of u_max / sqrt(Q(beta_u)).
  double tau_hat_fraction = 0.05;
  // Penalty weight by iteration; penalty_weight when empty.
  std::function<double(int)> w_schedule;
  SolverSettings conic;
  IntegratorConfig integrator;

  double weight(int iteration) const {
    return w_schedule ? w_schedule(iteration) : penalty_weight(iteration);
  }
  void validate() const;
};

}  // namespace covsteer

#endif  // COVSTEER_SOLVER_CONFIG_HPP
