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

#include "covsteer/problem.hpp"

namespace covsteer {

ScaledProblem scale_scenario(const Scenario& scenario) {
  scenario.validate();
  ScaledProblem p;
  p.scales = ScaleSet::canonical(scenario.params.mu, scenario.initial_mean(scenario.state_dim() - 1));
  p.spatial = scenario.spatial;
  p.params = scale_params(scenario.params, p.scales);
  p.initial_mean = scale_state(scenario.initial_mean, p.scales);
  p.final_mean = scenario.final_mean;
  p.final_mean.head(p.spatial) /= p.scales.length;
  p.final_mean.tail(p.spatial) /= p.scales.speed();
  p.initial_cov = scale_covariance(scenario.initial_cov, p.scales);
  p.final_cov = scale_covariance(scenario.final_cov, p.scales);
  for (double t : scenario.grid()) p.times.push_back(t / p.scales.time);
  return p;
}

namespace {

ReferenceTrajectory convert(const ReferenceTrajectory& ref, const ScaleSet& s, bool to_scaled) {
  ReferenceTrajectory out;
  for (const auto& x : ref.nodes) {
    out.nodes.push_back(to_scaled ? scale_state(x, s) : unscale_state(x, s));
  }
  const double force = to_scaled ? 1.0 / s.force() : s.force();
  for (const auto& u : ref.controls) out.controls.push_back(u * force);
  const double time = to_scaled ? 1.0 / s.time : s.time;
  for (double t : ref.times) out.times.push_back(t * time);
  return out;
}

}  // namespace

ReferenceTrajectory scale_reference(const ReferenceTrajectory& ref, const ScaleSet& s) {
  return convert(ref, s, true);
}

ReferenceTrajectory unscale_reference(const ReferenceTrajectory& ref, const ScaleSet& s) {
  return convert(ref, s, false);
}

}  // namespace covsteer
