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

#include "covsteer/chi2.hpp"

#include <cmath>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "covsteer/error.hpp"

namespace covsteer {

namespace {

void check_dof(int dof) {
  if (dof < 1) {
    throw Error(ErrorCategory::kInvalidArgument,
                "chi-squared degrees of freedom must be >= 1, got " +
                    std::to_string(dof));
  }
}

}  // namespace

double chi2_cdf(int dof, double x) {
  check_dof(dof);
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(dof), x);
}

double chi2_quantile(int dof, double level) {
  check_dof(dof);
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCategory::kInvalidArgument,
                "chi-squared level must lie in (0, 1), got " + std::to_string(level));
  }
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof),
                               level);
}

double chi2_quantile_sqrt(int dof, double level) {
  return std::sqrt(chi2_quantile(dof, level));
}

}  // namespace covsteer
