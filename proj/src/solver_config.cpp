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

#include "covsteer/solver_config.hpp"

#include <algorithm>
#include <cmath>

#include "covsteer/error.hpp"

namespace covsteer {

std::string to_string(TerminalCovarianceMode mode) {
  return mode == TerminalCovarianceMode::kEquality ? "equality" : "upper-bound";
}

TerminalCovarianceMode parse_terminal_mode(const std::string& text) {
  if (text == "upper-bound") return TerminalCovarianceMode::kUpperBound;
  if (text == "equality") return TerminalCovarianceMode::kEquality;
  throw Error(ErrorCategory::kInvalidArgument,
              "terminal covariance mode must be upper-bound or equality, got '" + text + "'");
}

double penalty_weight(int iteration) {
  if (iteration < 1) {
    throw Error(ErrorCategory::kInvalidArgument, "penalty iteration must be >= 1");
  }
  return std::pow(10.0, std::min(iteration + 3, 12));
}

void SolverConfig::validate() const {
  auto open_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw Error(ErrorCategory::kInvalidArgument, std::string(name) + " must lie in (0, 1)");
    }
  };
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCategory::kInvalidArgument, std::string(name) + " must be positive");
    }
  };
  open_unit(beta_u, "beta_u");
  open_unit(p, "p");
  positive(eps_Y, "eps_Y");
  positive(eps_x, "eps_x");
  positive(eps_zeta, "eps_zeta");
  positive(d, "d");
  if (!(tau_hat_fraction >= 0.0) || !std::isfinite(tau_hat_fraction)) {
    throw Error(ErrorCategory::kInvalidArgument, "tau_hat_fraction must be nonnegative");
  }
  if (max_iterations < 1) {
    throw Error(ErrorCategory::kInvalidArgument, "max_iterations must be >= 1");
  }
}

}  // namespace covsteer
