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

#ifndef COVSTEER_CHI2_HPP
#define COVSTEER_CHI2_HPP

namespace covsteer {

/// CDF of the chi-squared distribution with `dof` degrees of freedom.
double chi2_cdf(int dof, double x);

/// Inverse CDF. Throws for dof < 1 or level outside (0, 1).
double chi2_quantile(int dof, double level);

/// sqrt(chi2_quantile(dof, level)).
double chi2_quantile_sqrt(int dof, double level);

}  // namespace covsteer

#endif  // COVSTEER_CHI2_HPP
