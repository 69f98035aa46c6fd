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


#ifndef COVSTEER_MONTE_CARLO_HPP
#define COVSTEER_MONTE_CARLO_HPP

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/steering.hpp"

namespace covsteer {

/// A closed-loop SDE dx = f(x, u) dt + G(x) dW under the node-sampled affine
/// policy u = F_k + K_k (reduce(x_k) - mean_k), held over segment k.
struct ClosedLoopSystem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;
  int state_dim = 0;     // simulated (full) state
  int steered_dim = 0;   // leading components seen by the policy
  int control_dim = 0;
  int mass_index = -1;   // component that must stay positive, -1 for none

  std::vector<double> times;                 // N+1
  std::vector<Eigen::VectorXd> mean;         // N+1, steered_dim
  std::vector<Eigen::VectorXd> feedforward;  // N
  std::vector<Eigen::MatrixXd> gains;        // N, control_dim x steered_dim
  Eigen::VectorXd initial_mean;              // state_dim
  Eigen::MatrixXd initial_cov;               // state_dim x state_dim
  double u_max = 0.0;                        // <= 0 disables clipping

  int segments() const { return static_cast<int>(feedforward.size()); }
  void validate() const;
};

enum class SdeScheme {
  kEulerMaruyama,
  // Classical RK4 on the drift plus the Euler-Maruyama noise increment
  // G(x_j) dW_j; identical to Euler-Maruyama in its stochastic part.
  kSplitRk4,
};

std::string_view to_string(SdeScheme scheme);
SdeScheme parse_sde_scheme(std::string_view text);

struct MonteCarloConfig {
  int samples = 1000;
  std::uint64_t seed = 7;
  int substeps = 20;
  bool clip = true;  // saturate the applied control at u_max
  SdeScheme scheme = SdeScheme::kSplitRk4;
};

struct Ensemble {
  int samples = 0;
  std::uint64_t seed = 0;
  int substeps = 0;
  bool clip = true;
  SdeScheme scheme = SdeScheme::kSplitRk4;
  // states[i][k]: sample i at node k. Flagged samples keep their last valid
  // state from the failing node onward.
  std::vector<std::vector<Eigen::VectorXd>> states;
  // commanded[i][k] is the policy output; applied[i][k] the clipped control.
  std::vector<std::vector<Eigen::VectorXd>> commanded;
  std::vector<std::vector<Eigen::VectorXd>> applied;
  std::vector<bool> flagged;  // nonpositive mass encountered
  int flagged_count = 0;
  int clip_count = 0;  // segments where the command exceeded u_max

  int nodes() const { return states.empty() ? 0 : static_cast<int>(states[0].size()); }
};

/// Integrates each segment with the configured scheme and per-sample streams seeded from
/// (seed, sample index). Bitwise reproducible for a fixed config.
Ensemble simulate_closed_loop(const ClosedLoopSystem& system, const MonteCarloConfig& config);

struct EnsembleStats {
  std::vector<Eigen::VectorXd> mean;  // per node
  std::vector<Eigen::MatrixXd> cov;   // per node, divisor n-1
  std::vector<double> mass_mean;      // empty without a mass component
  std::vector<double> mass_std;
  int used = 0;                       // unflagged samples
};

EnsembleStats ensemble_stats(const Ensemble& ensemble, int mass_index = -1);

struct Coverage {
  std::vector<double> position;  // per node inside-fraction
  std::vector<double> velocity;
};

/// Inside-fraction of the Mahalanobis test on the position block
/// [0, spatial) and velocity block [spatial, 2 spatial) against predicted
/// node means and covariances.
Coverage coverage_check(const Ensemble& ensemble, const std::vector<Eigen::VectorXd>& means,
                        const std::vector<Eigen::MatrixXd>& covs, int spatial,
                        double confidence);

/// Per-segment fraction of unflagged samples whose commanded control norm
/// is within u_max.
std::vector<double> control_satisfaction(const Ensemble& ensemble, double u_max);

/// Closed-loop system for a solved scenario in its scaled units.
ClosedLoopSystem closed_loop_system(const ScaledSolution& solved);

}  // namespace covsteer

#endif  // COVSTEER_MONTE_CARLO_HPP
