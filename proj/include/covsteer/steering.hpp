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


// Sequential convex programming for covariance steering: each pass
// re-discretizes about the current mean and feedforward, solves a convex SDP
// in (mean, feedforward, P, U = K P, Y >= U P^+ U^T, tau, zeta) and updates
// the reference.
#ifndef COVSTEER_STEERING_HPP
#define COVSTEER_STEERING_HPP

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/conic.hpp"
#include "covsteer/discretize.hpp"
#include "covsteer/dynamics.hpp"
#include "covsteer/scenario.hpp"
#include "covsteer/solver_config.hpp"

namespace covsteer {

/// Boundary data in the model's (scaled) units.
struct SteeringProblem {
  const SegmentModel* model = nullptr;
  Eigen::VectorXd initial_mean;  // full state, model->full_dim()
  Eigen::VectorXd final_mean;    // fixes the leading components of the steered mean
  Eigen::MatrixXd initial_cov;   // steered state, n_x x n_x
  Eigen::MatrixXd final_cov;     // bound or target; empty leaves P_N free
  std::vector<double> times;
  double u_max = 0.0;

  void validate() const;
};

/// One solved (or reference) iterate. Covariance variables and tau are in
/// the model's units; the subproblem stores d*tau and d^2*(P, U, Y) and the
/// scaling is undone on extraction. The slack zeta is kept as solved (d^2
/// units), which is where the penalty and eps_zeta apply.
struct SteeringIterate {
  std::vector<Eigen::VectorXd> mean;         // steered state, N+1
  std::vector<Eigen::VectorXd> feedforward;  // N
  std::vector<Eigen::MatrixXd> P;            // N+1
  std::vector<Eigen::MatrixXd> U;            // N, n_u x n_x
  std::vector<Eigen::MatrixXd> Y;            // N
  std::vector<double> tau;                   // N
  std::vector<double> zeta;                  // N, in d^2-scaled units like Y
  std::vector<double> tau_hat;               // N, linearization points used
  // Full nonlinear state at the nodes (adds the known mass when the model
  // steers a reduced state).
  std::vector<Eigen::VectorXd> full_nodes;

  int segments() const { return static_cast<int>(feedforward.size()); }
};

/// Closed-form size of the subproblem. `p0_rank` is the rank of P_i; the
/// node-0 Schur block is reduced to range(P_i).
struct SubproblemCensus {
  int variables = 0;
  int equalities = 0;
  int nonnegative_rows = 0;
  int soc_blocks = 0;
  int psd_blocks = 0;
  int cone_rows = 0;
};
SubproblemCensus census(int n_x, int n_u, int segments, int fixed_final, int p0_rank,
                        bool terminal_bound, TerminalCovarianceMode mode);
/// Census of the subproblems a scenario generates under its solver config.
SubproblemCensus scenario_census(const Scenario& scenario);

/// Variable offsets of the subproblem. Matrix variables hold one scalar per
/// lower-triangular (symmetric) or per entry (U, column-major).
struct SubproblemLayout {
  int n = 0, m = 0, N = 0;
  int mean0 = 0, ff0 = 0, t0 = 0, P0 = 0, U0 = 0, Y0 = 0, tau0 = 0, zeta0 = 0, q0 = 0;
  int size = 0;

  int mean(int k, int i) const { return mean0 + k * n + i; }
  int ff(int k, int i) const { return ff0 + k * m + i; }
  int t(int k) const { return t0 + k; }
  int P(int k, int i, int j) const;
  int U(int k, int i, int j) const { return U0 + k * m * n + j * m + i; }
  int Y(int k, int i, int j) const;
  int tau(int k) const { return tau0 + k; }
  int zeta(int k) const { return zeta0 + k; }
  int q(int k) const { return q0 + k; }
};

struct Subproblem {
  ConicProgram program;
  SubproblemLayout layout;
  double weight = 0.0;
};

/// Problem 3 about the discretization `segments` with linearization points
/// tau_hat and penalty weight w.
Subproblem build_subproblem(const SteeringProblem& problem,
                            const std::vector<DiscreteSegment>& segments,
                            const std::vector<double>& tau_hat, double w,
                            const SolverConfig& config);

/// Reads an iterate out of a subproblem solution (d^2 scaling undone).
SteeringIterate extract_iterate(const Subproblem& sub, const Eigen::VectorXd& x,
                                const SolverConfig& config);

struct CostBreakdown {
  double J3 = 0.0;
  double Jpen = 0.0;
  double total() const { return J3 + Jpen; }
};
CostBreakdown evaluate_cost(const SteeringIterate& it, double w, const SolverConfig& config);

struct ConvergenceCheck {
  bool converged = false;
  double mean_shift = 0.0;  // relative, stacked node means
  double zeta_max = 0.0;
};
/// Relative change of the stacked means and largest slack against eps_x and
/// eps_zeta. Throws if the previous trajectory has zero norm.
ConvergenceCheck check_convergence(const std::vector<Eigen::VectorXd>& previous,
                                   const std::vector<Eigen::VectorXd>& current,
                                   const std::vector<double>& zeta, const SolverConfig& config);

/// K_k = U_k P_k^+ with eigenvalues of P_k below `singular` treated as zero.
/// Throws if K_k P_k misses U_k by more than `tolerance` (Frobenius), naming
/// the node.
std::vector<Eigen::MatrixXd> recover_gains(const SteeringIterate& it,
                                           double singular = 1e-10,
                                           double tolerance = 1e-6);

struct IterationRecord {
  int iteration = 0;
  double w = 0.0;
  double J3 = 0.0;
  double Jpen = 0.0;
  double zeta_max = 0.0;
  double mean_shift = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  int conic_iterations = 0;
  double seconds = 0.0;
};

/// Tab-separated iteration log.
std::string log_header();
std::string format_record(const IterationRecord& r);

struct SteeringSolution {
  SteeringIterate iterate;
  std::vector<Eigen::MatrixXd> gains;
  // Discretization the final subproblem was built on.
  std::vector<DiscreteSegment> segments;
  std::vector<IterationRecord> history;
  bool converged = false;
  double J3 = 0.0;
  double Jpen = 0.0;
  double seconds = 0.0;
};

/// Algorithm 1 from a reference (full nodes, feedforward in the model's
/// control space). Throws kInfeasible / kNumerical naming the iteration when
/// a subproblem fails. After max_iterations without convergence the last
/// iterate is returned with converged = false and no gains.
SteeringSolution scp_solve(const SteeringProblem& problem,
                           const std::vector<Eigen::VectorXd>& reference_nodes,
                           const std::vector<Eigen::VectorXd>& reference_controls,
                           const SolverConfig& config, std::ostream* log = nullptr);

/// Constraint residuals of a solved iterate, in the subproblem's d^2-scaled
/// covariance units. Nonnegative slacks mean satisfied.
struct Certification {
  double schur_min_eig = 0.0;        // min over segments of eig([[P, U^T], [U, Y]])
  double recursion_residual = 0.0;   // max Frobenius norm of the covariance equality
  double control_slack = 0.0;        // min of u_max - |F_k| - sqrt(Q(beta_u)) tau_k
  double tau_slack = 0.0;            // min of tau-linearization bound - lambda_max(Y_k)
  double terminal_slack = 0.0;       // min eig of P_f - P_N (bound mode)
  double zeta_max = 0.0;
};
Certification certify(const SteeringProblem& problem, const SteeringSolution& solution,
                      const SolverConfig& config);

/// Scenario-level driver: scales the scenario and reference (physical
/// units), picks the mass-coupled or known-mass model and runs scp_solve.
/// The solution stays in canonical units. Throws kNotConverged when the
/// iteration limit is reached.
struct ScaledSolution {
  ScaleSet scales;
  int spatial = 2;
  PhysicalParams params;  // scaled
  bool mass_stochastic = true;
  std::vector<double> times;  // scaled
  Eigen::MatrixXd initial_cov;  // scaled, full state
  SteeringSolution solution;
};
ScaledSolution solve_scenario(const Scenario& scenario, const ReferenceTrajectory& reference,
                              std::ostream* log = nullptr);
/// Certifies a solution of solve_scenario against the scenario it solved.
Certification certify_scenario(const Scenario& scenario, const ScaledSolution& solved);

}  // namespace covsteer

#endif  // COVSTEER_STEERING_HPP
