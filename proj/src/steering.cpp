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

#include "covsteer/steering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "covsteer/chi2.hpp"
#include "covsteer/error.hpp"
#include "covsteer/problem.hpp"

namespace covsteer {

namespace {

int sym_size(int side) { return side * (side + 1) / 2; }

// Offset of (i, j) in lower-triangular column-major storage.
int sym_offset(int i, int j, int side) {
  if (i < j) std::swap(i, j);
  return j * side - j * (j - 1) / 2 + (i - j);
}

// Orthonormal bases of range and null space of a PSD matrix.
void split_range(const Eigen::MatrixXd& S, Eigen::MatrixXd& range, Eigen::MatrixXd& null) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  const int n = static_cast<int>(S.rows());
  std::vector<int> keep, drop;
  for (int i = 0; i < n; ++i) {
    (top > 0.0 && eig.eigenvalues()(i) > 1e-12 * top ? keep : drop).push_back(i);
  }
  range.resize(n, static_cast<Eigen::Index>(keep.size()));
  null.resize(n, static_cast<Eigen::Index>(drop.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) range.col(c) = eig.eigenvectors().col(keep[c]);
  for (std::size_t c = 0; c < drop.size(); ++c) null.col(c) = eig.eigenvectors().col(drop[c]);
}

bool has_terminal_bound(const SteeringProblem& p) { return p.final_cov.size() > 0; }

}  // namespace

void SteeringProblem::validate() const {
  if (!model) throw Error(ErrorCategory::kInvalidArgument, "steering: missing model");
  const int n = model->state_dim();
  const int N = static_cast<int>(times.size()) - 1;
  if (N < 1) throw Error(ErrorCategory::kInvalidArgument, "steering: need at least one segment");
  if (initial_mean.size() != model->full_dim()) {
    throw Error(ErrorCategory::kInvalidArgument, "steering: initial mean has wrong size");
  }
  if (final_mean.size() > n) {
    throw Error(ErrorCategory::kInvalidArgument, "steering: final mean has wrong size");
  }
  if (initial_cov.rows() != n || initial_cov.cols() != n) {
    throw Error(ErrorCategory::kInvalidArgument, "steering: initial covariance must be n_x x n_x");
  }
  if (final_cov.size() > 0 && (final_cov.rows() != n || final_cov.cols() != n)) {
    throw Error(ErrorCategory::kInvalidArgument, "steering: final covariance must be n_x x n_x");
  }
  if (!(u_max > 0.0)) throw Error(ErrorCategory::kInvalidArgument, "steering: u_max must be positive");
  for (int k = 0; k < N; ++k) {
    if (!(times[k + 1] > times[k])) {
      throw Error(ErrorCategory::kInvalidArgument,
                  fmt::format("steering: times not increasing at node {}", k + 1));
    }
  }
}

int SubproblemLayout::P(int k, int i, int j) const {
  return P0 + k * sym_size(n) + sym_offset(i, j, n);
}

int SubproblemLayout::Y(int k, int i, int j) const {
  return Y0 + k * sym_size(m) + sym_offset(i, j, m);
}

SubproblemCensus census(int n, int m, int N, int fixed_final, int p0_rank, bool terminal_bound,
                        TerminalCovarianceMode mode) {
  SubproblemCensus c;
  c.variables = (N + 1) * n + N * m + N + (N + 1) * sym_size(n) + N * m * n + N * sym_size(m) +
                3 * N;
  c.equalities = n + fixed_final + N * n + sym_size(n) + N * sym_size(n) + m * (n - p0_rank);
  c.nonnegative_rows = 3 * N;
  c.soc_blocks = 2 * N;
  c.psd_blocks = 2 * N;
  c.cone_rows = c.nonnegative_rows + N * (m + 1) + 3 * N + sym_size(p0_rank + m) +
                (N - 1) * sym_size(n + m) + N * sym_size(m);
  if (terminal_bound) {
    if (mode == TerminalCovarianceMode::kEquality) {
      c.equalities += sym_size(n);
    } else {
      c.psd_blocks += 1;
      c.cone_rows += sym_size(n);
    }
  }
  return c;
}

Subproblem build_subproblem(const SteeringProblem& problem,
                            const std::vector<DiscreteSegment>& segments,
                            const std::vector<double>& tau_hat, double w,
                            const SolverConfig& config) {
  problem.validate();
  const int n = problem.model->state_dim();
  const int m = problem.model->control_dim();
  const int N = static_cast<int>(problem.times.size()) - 1;
  if (static_cast<int>(segments.size()) != N || static_cast<int>(tau_hat.size()) != N) {
    throw Error(ErrorCategory::kInvalidArgument,
                "build_subproblem: segment and tau_hat counts must equal N");
  }
  for (int k = 0; k < N; ++k) {
    const auto& s = segments[k];
    if (s.A.rows() != n || s.A.cols() != n || s.B.rows() != n || s.B.cols() != m ||
        s.c.size() != n || s.Q.rows() != n) {
      throw Error(ErrorCategory::kInvalidArgument,
                  fmt::format("build_subproblem: segment {} has wrong dimensions", k));
    }
    if (!(tau_hat[k] >= 0.0)) {
      throw Error(ErrorCategory::kInvalidArgument,
                  fmt::format("build_subproblem: tau_hat[{}] is negative", k));
    }
  }
  if (!(w >= 0.0)) throw Error(ErrorCategory::kInvalidArgument, "build_subproblem: w < 0");

  Subproblem sub;
  sub.weight = w;
  SubproblemLayout& L = sub.layout;
  L.n = n;
  L.m = m;
  L.N = N;
  L.mean0 = 0;
  L.ff0 = L.mean0 + (N + 1) * n;
  L.t0 = L.ff0 + N * m;
  L.P0 = L.t0 + N;
  L.U0 = L.P0 + (N + 1) * sym_size(n);
  L.Y0 = L.U0 + N * m * n;
  L.tau0 = L.Y0 + N * sym_size(m);
  L.zeta0 = L.tau0 + N;
  L.q0 = L.zeta0 + N;
  L.size = L.q0 + N;

  ConicProgram& prog = sub.program;
  prog.add_variables(L.size);
  const double d2 = config.d * config.d;
  const double q_beta = chi2_quantile_sqrt(m, config.beta_u);
  const double q_p = chi2_quantile_sqrt(m, config.p);

  // Mean boundary conditions and dynamics.
  const Eigen::VectorXd x0 = problem.model->reduce(problem.initial_mean);
  for (int i = 0; i < n; ++i) prog.add_equality(AffineExpr::variable(L.mean(0, i)), x0(i));
  for (int i = 0; i < problem.final_mean.size(); ++i) {
    prog.add_equality(AffineExpr::variable(L.mean(N, i)), problem.final_mean(i));
  }
  for (int k = 0; k < N; ++k) {
    const auto& s = segments[k];
    for (int i = 0; i < n; ++i) {
      AffineExpr row = AffineExpr::variable(L.mean(k + 1, i));
      for (int j = 0; j < n; ++j) row.add(L.mean(k, j), -s.A(i, j));
      for (int j = 0; j < m; ++j) row.add(L.ff(k, j), -s.B(i, j));
      prog.add_equality(row, s.c(i));
    }
  }

  // Covariance: P_0 fixed, then the affine recursion in d^2-scaled variables.
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      prog.add_equality(AffineExpr::variable(L.P(0, i, j)), d2 * problem.initial_cov(i, j));
    }
  }
  for (int k = 0; k < N; ++k) {
    const auto& A = segments[k].A;
    const auto& B = segments[k].B;
    const auto& Q = segments[k].Q;
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        AffineExpr row = AffineExpr::variable(L.P(k + 1, i, j));
        for (int b = 0; b < n; ++b) {
          row.add(L.P(k, b, b), -A(i, b) * A(j, b));
          for (int a = b + 1; a < n; ++a) {
            row.add(L.P(k, a, b), -(A(i, a) * A(j, b) + A(i, b) * A(j, a)));
          }
        }
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < m; ++b) {
            row.add(L.U(k, b, a), -(A(i, a) * B(j, b) + B(i, b) * A(j, a)));
          }
        }
        for (int b = 0; b < m; ++b) {
          row.add(L.Y(k, b, b), -B(i, b) * B(j, b));
          for (int a = b + 1; a < m; ++a) {
            row.add(L.Y(k, a, b), -(B(i, a) * B(j, b) + B(i, b) * B(j, a)));
          }
        }
        prog.add_equality(row, d2 * Q(i, j));
      }
    }
  }

  // Schur blocks [[P, U^T], [U, Y]] >= 0. At node 0 P is data and may be
  // singular: restrict to its range and pin U on the null space.
  {
    Eigen::MatrixXd R, V;
    split_range(problem.initial_cov, R, V);
    const int r = static_cast<int>(R.cols());
    const Eigen::MatrixXd P0r = d2 * (R.transpose() * problem.initial_cov * R);
    for (int c = 0; c < V.cols(); ++c) {
      for (int b = 0; b < m; ++b) {
        AffineExpr row;
        for (int a = 0; a < n; ++a) row.add(L.U(0, b, a), V(a, c));
        prog.add_equality(row, 0.0);
      }
    }
    std::vector<AffineExpr> lower;
    const int side = r + m;
    for (int col = 0; col < side; ++col) {
      for (int row = col; row < side; ++row) {
        AffineExpr e;
        if (row < r) {
          e.shift(P0r(row, col));
        } else if (col < r) {
          for (int a = 0; a < n; ++a) e.add(L.U(0, row - r, a), R(a, col));
        } else {
          e.add(L.Y(0, row - r, col - r), 1.0);
        }
        lower.push_back(std::move(e));
      }
    }
    prog.add_psd(side, lower);
  }
  for (int k = 1; k < N; ++k) {
    std::vector<AffineExpr> lower;
    const int side = n + m;
    for (int col = 0; col < side; ++col) {
      for (int row = col; row < side; ++row) {
        if (row < n) {
          lower.push_back(AffineExpr::variable(L.P(k, row, col)));
        } else if (col < n) {
          lower.push_back(AffineExpr::variable(L.U(k, row - n, col)));
        } else {
          lower.push_back(AffineExpr::variable(L.Y(k, row - n, col - n)));
        }
      }
    }
    prog.add_psd(side, lower);
  }

  // Control chance constraint, tau linearization and slack penalty.
  const double sqrt_w = std::sqrt(w);
  for (int k = 0; k < N; ++k) {
    std::vector<AffineExpr> cone{AffineExpr::variable(L.t(k))};
    for (int j = 0; j < m; ++j) cone.push_back(AffineExpr::variable(L.ff(k, j)));
    prog.add_soc(cone);
    prog.add_nonnegative(
        AffineExpr(problem.u_max).add(L.t(k), -1.0).add(L.tau(k), -q_beta / config.d));
    prog.add_nonnegative(AffineExpr::variable(L.tau(k)));
    prog.add_nonnegative(AffineExpr::variable(L.zeta(k)));

    const double th = config.d * tau_hat[k];
    std::vector<AffineExpr> lower;
    for (int col = 0; col < m; ++col) {
      for (int row = col; row < m; ++row) {
        AffineExpr e = AffineExpr::variable(L.Y(k, row, col), -1.0);
        if (row == col) {
          e.add(L.tau(k), 2.0 * th).add(L.zeta(k), 1.0).shift(-th * th);
        }
        lower.push_back(std::move(e));
      }
    }
    prog.add_psd(m, lower);

    // q >= w zeta^2  <=>  |(2 sqrt(w) zeta, q - 1)| <= q + 1
    const std::vector<AffineExpr> pen{AffineExpr::variable(L.q(k)).shift(1.0),
                                      AffineExpr::variable(L.zeta(k), 2.0 * sqrt_w),
                                      AffineExpr::variable(L.q(k)).shift(-1.0)};
    prog.add_soc(pen);

    prog.add_cost(L.t(k), 1.0);
    prog.add_cost(L.tau(k), q_p / config.d);
    for (int j = 0; j < m; ++j) prog.add_cost(L.Y(k, j, j), config.eps_Y / d2);
    prog.add_cost(L.zeta(k), 1.0 + sqrt_w);
    prog.add_cost(L.q(k), 0.5);
  }

  if (has_terminal_bound(problem)) {
    if (config.terminal_mode == TerminalCovarianceMode::kEquality) {
      for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
          prog.add_equality(AffineExpr::variable(L.P(N, i, j)), d2 * problem.final_cov(i, j));
        }
      }
    } else {
      std::vector<AffineExpr> lower;
      for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
          lower.push_back(
              AffineExpr::variable(L.P(N, i, j), -1.0).shift(d2 * problem.final_cov(i, j)));
        }
      }
      prog.add_psd(n, lower);
    }
  }
  return sub;
}

SteeringIterate extract_iterate(const Subproblem& sub, const Eigen::VectorXd& x,
                                const SolverConfig& config) {
  const SubproblemLayout& L = sub.layout;
  if (x.size() != L.size) {
    throw Error(ErrorCategory::kInvalidArgument, "extract_iterate: solution has wrong size");
  }
  const double d2 = config.d * config.d;
  SteeringIterate it;
  for (int k = 0; k <= L.N; ++k) {
    it.mean.push_back(x.segment(L.mean(k, 0), L.n));
    Eigen::MatrixXd P(L.n, L.n);
    for (int j = 0; j < L.n; ++j) {
      for (int i = j; i < L.n; ++i) P(i, j) = P(j, i) = x(L.P(k, i, j)) / d2;
    }
    it.P.push_back(P);
  }
  for (int k = 0; k < L.N; ++k) {
    it.feedforward.push_back(x.segment(L.ff(k, 0), L.m));
    Eigen::MatrixXd U(L.m, L.n);
    for (int j = 0; j < L.n; ++j) {
      for (int i = 0; i < L.m; ++i) U(i, j) = x(L.U(k, i, j)) / d2;
    }
    it.U.push_back(U);
    Eigen::MatrixXd Y(L.m, L.m);
    for (int j = 0; j < L.m; ++j) {
      for (int i = j; i < L.m; ++i) Y(i, j) = Y(j, i) = x(L.Y(k, i, j)) / d2;
    }
    it.Y.push_back(Y);
    it.tau.push_back(x(L.tau(k)) / config.d);
    it.zeta.push_back(std::max(0.0, x(L.zeta(k))));
  }
  return it;
}

CostBreakdown evaluate_cost(const SteeringIterate& it, double w, const SolverConfig& config) {
  if (it.feedforward.empty()) return {};
  const int m = static_cast<int>(it.feedforward[0].size());
  const double q_p = chi2_quantile_sqrt(m, config.p);
  CostBreakdown c;
  for (int k = 0; k < it.segments(); ++k) {
    c.J3 += it.feedforward[k].norm() + q_p * it.tau[k] + config.eps_Y * it.Y[k].trace();
    const double z = it.zeta[k];
    c.Jpen += z + 0.5 * w * z * z + std::sqrt(w) * std::abs(z);
  }
  return c;
}

ConvergenceCheck check_convergence(const std::vector<Eigen::VectorXd>& previous,
                                   const std::vector<Eigen::VectorXd>& current,
                                   const std::vector<double>& zeta, const SolverConfig& config) {
  if (previous.size() != current.size()) {
    throw Error(ErrorCategory::kInvalidArgument, "check_convergence: node counts differ");
  }
  double diff = 0.0, base = 0.0;
  for (std::size_t k = 0; k < previous.size(); ++k) {
    if (previous[k].size() != current[k].size()) {
      throw Error(ErrorCategory::kInvalidArgument, "check_convergence: node sizes differ");
    }
    diff += (current[k] - previous[k]).squaredNorm();
    base += previous[k].squaredNorm();
  }
  if (!(base > 0.0)) {
    throw Error(ErrorCategory::kDomain, "check_convergence: previous trajectory has zero norm");
  }
  ConvergenceCheck c;
  c.mean_shift = std::sqrt(diff / base);
  for (double z : zeta) c.zeta_max = std::max(c.zeta_max, z);
  c.converged = c.mean_shift <= config.eps_x && c.zeta_max <= config.eps_zeta;
  return c;
}

std::vector<Eigen::MatrixXd> recover_gains(const SteeringIterate& it, double singular,
                                           double tolerance) {
  std::vector<Eigen::MatrixXd> gains;
  for (int k = 0; k < it.segments(); ++k) {
    const Eigen::MatrixXd& P = it.P[k];
    const Eigen::MatrixXd& U = it.U[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (P + P.transpose()));
    Eigen::VectorXd inv = eig.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > singular ? 1.0 / inv(i) : 0.0;
    const Eigen::MatrixXd K =
        U * eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    const double miss = (K * P - U).norm();
    if (!(miss <= tolerance)) {
      throw Error(ErrorCategory::kDomain,
                  fmt::format("recover_gains: P at node {} is singular along a direction U "
                              "acts on (|K P - U| = {:.3e})",
                              k, miss));
    }
    gains.push_back(K);
  }
  return gains;
}

std::string log_header() {
  return "iter\tw\tJ3\tJpen\tzeta_max\tmean_shift\tstatus\tconic_iters\tseconds";
}

std::string format_record(const IterationRecord& r) {
  return fmt::format("{}\t{:.3e}\t{:.12e}\t{:.6e}\t{:.3e}\t{:.3e}\t{}\t{}\t{:.3f}", r.iteration,
                     r.w, r.J3, r.Jpen, r.zeta_max, r.mean_shift, to_string(r.status),
                     r.conic_iterations, r.seconds);
}

namespace {

// Full nonlinear nodes for a steered mean: components the model does not
// steer are carried along by propagating the drift under the feedforward.
std::vector<Eigen::VectorXd> expand_nodes(const SteeringProblem& problem,
                                          const SteeringIterate& it, int substeps) {
  const SegmentModel& model = *problem.model;
  const int n = model.state_dim();
  const int full = model.full_dim();
  if (n == full) return it.mean;
  std::vector<Eigen::VectorXd> nodes;
  Eigen::VectorXd x = problem.initial_mean;
  nodes.push_back(x);
  for (int k = 0; k < it.segments(); ++k) {
    x.head(n) = it.mean[k];
    const Eigen::VectorXd end = propagate_nonlinear(model, x, it.feedforward[k], problem.times[k],
                                                    problem.times[k + 1], substeps);
    x.head(n) = it.mean[k + 1];
    x.tail(full - n) = end.tail(full - n);
    nodes.push_back(x);
  }
  return nodes;
}

}  // namespace

SteeringSolution scp_solve(const SteeringProblem& problem,
                           const std::vector<Eigen::VectorXd>& reference_nodes,
                           const std::vector<Eigen::VectorXd>& reference_controls,
                           const SolverConfig& config, std::ostream* log) {
  using Clock = std::chrono::steady_clock;
  problem.validate();
  config.validate();
  const SegmentModel& model = *problem.model;
  const int N = static_cast<int>(problem.times.size()) - 1;
  const int m = model.control_dim();

  ReferenceTrajectory ref;
  ref.nodes = reference_nodes;
  ref.controls = reference_controls;
  ref.times = problem.times;
  if (static_cast<int>(ref.nodes.size()) != N + 1 ||
      static_cast<int>(ref.controls.size()) != N) {
    throw Error(ErrorCategory::kInvalidArgument, "scp_solve: reference does not match the grid");
  }
  for (const auto& u : ref.controls) {
    if (u.size() != m) {
      throw Error(ErrorCategory::kInvalidArgument, "scp_solve: reference control has wrong size");
    }
  }

  const double q_beta = chi2_quantile_sqrt(m, config.beta_u);
  std::vector<double> tau_hat(N, config.tau_hat_fraction * problem.u_max / q_beta);
  std::vector<Eigen::VectorXd> previous;
  for (const auto& x : ref.nodes) previous.push_back(model.reduce(x));

  if (log) *log << log_header() << "\n";
  SteeringSolution out;
  const auto start = Clock::now();
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const auto t0 = Clock::now();
    IterationRecord rec;
    rec.iteration = iter;
    rec.w = config.weight(iter);
    std::vector<DiscreteSegment> segs;
    try {
      segs = discretize(ref, model, config.integrator);
    } catch (const Error& e) {
      throw Error(e.category(), fmt::format("SCP iteration {}: {}", iter, e.what()));
    }
    const Subproblem sub = build_subproblem(problem, segs, tau_hat, rec.w, config);
    const ConicSolution sol = solve(sub.program, config.conic);
    rec.status = sol.status;
    rec.conic_iterations = sol.iterations;
    if (!usable(sol.status)) {
      rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      out.history.push_back(rec);
      if (log) *log << format_record(rec) << "\n";
      throw Error(sol.status == SolveStatus::kInfeasible ? ErrorCategory::kInfeasible
                                                         : ErrorCategory::kNumerical,
                  fmt::format("SCP iteration {}: subproblem {}", iter, to_string(sol.status)));
    }
    SteeringIterate it = extract_iterate(sub, sol.x, config);
    // Node 0 is pinned by equalities; drop the solver's residual there since
    // scaled position variances sit near its accuracy floor.
    it.mean[0] = problem.model->reduce(problem.initial_mean);
    it.P[0] = problem.initial_cov;
    it.tau_hat = tau_hat;
    it.full_nodes = expand_nodes(problem, it, config.integrator.substeps);
    const ConvergenceCheck check = check_convergence(previous, it.mean, it.zeta, config);
    const CostBreakdown cost = evaluate_cost(it, rec.w, config);
    rec.J3 = cost.J3;
    rec.Jpen = cost.Jpen;
    rec.zeta_max = check.zeta_max;
    rec.mean_shift = check.mean_shift;
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out.history.push_back(rec);
    if (log) *log << format_record(rec) << "\n" << std::flush;

    for (int k = 0; k < N; ++k) tau_hat[k] = std::max(0.0, it.tau[k]);
    previous = it.mean;
    ref.nodes = it.full_nodes;
    ref.controls = it.feedforward;
    out.iterate = std::move(it);
    out.segments = std::move(segs);
    out.J3 = cost.J3;
    out.Jpen = cost.Jpen;
    if (check.converged) {
      out.converged = true;
      break;
    }
  }
  out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (!out.converged) return out;
  out.gains = recover_gains(out.iterate);
  return out;
}

Certification certify(const SteeringProblem& problem, const SteeringSolution& solution,
                      const SolverConfig& config) {
  const SteeringIterate& it = solution.iterate;
  const int N = it.segments();
  if (N == 0 || static_cast<int>(solution.segments.size()) != N) {
    throw Error(ErrorCategory::kInvalidArgument, "certify: solution has no segments");
  }
  const int n = static_cast<int>(it.P[0].rows());
  const int m = static_cast<int>(it.U[0].rows());
  const double d = config.d;
  const double d2 = d * d;
  const double q_beta = chi2_quantile_sqrt(m, config.beta_u);
  Certification c;
  c.schur_min_eig = std::numeric_limits<double>::infinity();
  c.control_slack = std::numeric_limits<double>::infinity();
  c.tau_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < N; ++k) {
    Eigen::MatrixXd S(n + m, n + m);
    S << it.P[k], it.U[k].transpose(), it.U[k], it.Y[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> schur(d2 * S);
    c.schur_min_eig = std::min(c.schur_min_eig, schur.eigenvalues().minCoeff());

    const auto& seg = solution.segments[k];
    const Eigen::MatrixXd next = seg.A * it.P[k] * seg.A.transpose() +
                                 seg.A * it.U[k].transpose() * seg.B.transpose() +
                                 seg.B * it.U[k] * seg.A.transpose() +
                                 seg.B * it.Y[k] * seg.B.transpose() + seg.Q;
    c.recursion_residual = std::max(c.recursion_residual, d2 * (next - it.P[k + 1]).norm());

    c.control_slack = std::min(c.control_slack,
                               problem.u_max - it.feedforward[k].norm() - q_beta * it.tau[k]);
    const double th = d * it.tau_hat[k];
    const double bound = th * th + 2.0 * th * (d * it.tau[k] - th) + it.zeta[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> y(d2 * it.Y[k]);
    c.tau_slack = std::min(c.tau_slack, bound - y.eigenvalues().maxCoeff());
    c.zeta_max = std::max(c.zeta_max, it.zeta[k]);
  }
  c.terminal_slack = std::numeric_limits<double>::infinity();
  if (problem.final_cov.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> t(d2 * (problem.final_cov - it.P[N]));
    c.terminal_slack = t.eigenvalues().minCoeff();
  }
  return c;
}

namespace {

SteeringProblem steering_problem(const ScaledProblem& p, const SegmentModel& model) {
  SteeringProblem prob;
  prob.model = &model;
  prob.initial_mean = p.initial_mean;
  prob.final_mean = p.final_mean;
  const int n = model.state_dim();
  prob.initial_cov = p.initial_cov.topLeftCorner(n, n);
  prob.final_cov = p.final_cov.topLeftCorner(n, n);
  prob.times = p.times;
  prob.u_max = p.params.u_max;
  return prob;
}

}  // namespace

SubproblemCensus scenario_census(const Scenario& scenario) {
  scenario.validate();
  const ScaledProblem p = scale_scenario(scenario);
  const int d = p.spatial;
  const int n = scenario.solver.mass_stochastic ? 2 * d + 1 : 2 * d;
  Eigen::MatrixXd R, V;
  split_range(p.initial_cov.topLeftCorner(n, n), R, V);
  return census(n, d, scenario.segments, 2 * d, static_cast<int>(R.cols()), true,
                scenario.solver.terminal_mode);
}

ScaledSolution solve_scenario(const Scenario& scenario, const ReferenceTrajectory& reference,
                              std::ostream* log) {
  const ScaledProblem p = scale_scenario(scenario);
  reference.validate();
  if (reference.segments() != scenario.segments) {
    throw Error(ErrorCategory::kInvalidArgument,
                fmt::format("reference has {} segments, scenario expects {}",
                            reference.segments(), scenario.segments));
  }
  const auto grid = scenario.grid();
  for (int k = 0; k <= scenario.segments; ++k) {
    if (std::abs(reference.times[k] - grid[k]) > 1e-9 * scenario.time_of_flight) {
      throw Error(ErrorCategory::kInvalidArgument,
                  fmt::format("reference epoch at row {} does not match the scenario grid", k));
    }
  }
  if (reference.nodes[0].size() != scenario.state_dim() ||
      reference.controls[0].size() != scenario.spatial) {
    throw Error(ErrorCategory::kInvalidArgument, "reference dimensions do not match the scenario");
  }
  const ReferenceTrajectory ref = scale_reference(reference, p.scales);
  const int d = p.spatial;
  const bool stochastic = scenario.solver.mass_stochastic;

  ScaledSolution out;
  out.scales = p.scales;
  out.spatial = d;
  out.params = p.params;
  out.mass_stochastic = stochastic;
  out.times = p.times;
  out.initial_cov = p.initial_cov;

  MassCoupledModel coupled(d, p.params);
  KnownMassModel known(d, p.params);
  const SteeringProblem prob = steering_problem(p, stochastic ? static_cast<const SegmentModel&>(coupled) : known);
  out.solution = scp_solve(prob, ref.nodes, ref.controls, scenario.solver, log);
  if (!out.solution.converged) {
    const IterationRecord& last = out.solution.history.back();
    throw Error(ErrorCategory::kNotConverged,
                fmt::format("SCP did not converge in {} iterations (mean shift {:.3e}, "
                            "zeta_max {:.3e})",
                            scenario.solver.max_iterations, last.mean_shift, last.zeta_max));
  }
  return out;
}

Certification certify_scenario(const Scenario& scenario, const ScaledSolution& solved) {
  const ScaledProblem p = scale_scenario(scenario);
  MassCoupledModel coupled(p.spatial, p.params);
  KnownMassModel known(p.spatial, p.params);
  const SteeringProblem prob =
      steering_problem(p, solved.mass_stochastic ? static_cast<const SegmentModel&>(coupled) : known);
  return certify(prob, solved.solution, scenario.solver);
}

}  // namespace covsteer
