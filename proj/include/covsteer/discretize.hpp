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

#ifndef COVSTEER_DISCRETIZE_HPP
#define COVSTEER_DISCRETIZE_HPP

#include <vector>

#include <Eigen/Dense>

#include "covsteer/dynamics.hpp"

namespace covsteer {

/// Nominal trajectory used as the linearization point: N+1 full states
/// [r; v; m], N zero-order-hold controls and N+1 epochs.
struct ReferenceTrajectory {
  std::vector<Eigen::VectorXd> nodes;
  std::vector<Eigen::VectorXd> controls;
  std::vector<double> times;

  int segments() const { return static_cast<int>(controls.size()); }
  /// Checks counts, strictly increasing times and positive masses. Mass is
  /// the last component of every node.
  void validate() const;
};

/// x_{k+1} = A x_k + B u_k + c + w,  w ~ N(0, Q),  G G^T = Q.
struct DiscreteSegment {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd G;
  // Nonlinear reference propagated from node k to t_{k+1} (full state).
  Eigen::VectorXd end_state;
};

struct IntegratorConfig {
  int substeps = 32;
  // Largest negative eigenvalue of Q that is silently clamped to zero.
  double clamp_tolerance = 1e-9;
};

/// Integrates the nonlinear reference together with the STM and the
/// convolution integrals for B_k, c_k and Q_k in one fixed-step RK4 pass.
/// A(t), B(t), c(t), G(t) are re-evaluated along the in-segment solution.
DiscreteSegment discretize_segment(const ReferenceTrajectory& reference, int k,
                                   const SegmentModel& model,
                                   const IntegratorConfig& config = {});

std::vector<DiscreteSegment> discretize(const ReferenceTrajectory& reference,
                                        const SegmentModel& model,
                                        const IntegratorConfig& config = {});

/// Nonlinear ZOH flow of the model from `state` over [t0, t1].
Eigen::VectorXd propagate_nonlinear(const SegmentModel& model,
                                    const Eigen::VectorXd& state,
                                    const Eigen::VectorXd& control, double t0,
                                    double t1, int substeps);

/// Symmetric square root factor G = V sqrt(max(L, 0)) of a PSD matrix.
Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& Q);

std::vector<Eigen::VectorXd> propagate_mean(
    const std::vector<DiscreteSegment>& segments, const Eigen::VectorXd& x0,
    const std::vector<Eigen::VectorXd>& feedforward);

std::vector<Eigen::MatrixXd> propagate_covariance(
    const std::vector<DiscreteSegment>& segments, const Eigen::MatrixXd& P0,
    const std::vector<Eigen::MatrixXd>& gains);

}  // namespace covsteer

#endif  // COVSTEER_DISCRETIZE_HPP
