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

#include "covsteer/initializer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "covsteer/artifacts.hpp"
#include "covsteer/error.hpp"
#include "covsteer/problem.hpp"

namespace covsteer {

namespace {

struct Layout {
  int n, m, N;
  int x(int k, int i) const { return k * n + i; }
  int u(int k, int i) const { return (N + 1) * n + k * m + i; }
  int nu(int k, int i) const { return (N + 1) * n + N * m + k * n + i; }
  int s(int k, int i) const { return (N + 1) * n + N * m + N * n + k * n + i; }
  int size() const { return (N + 1) * n + N * m + 2 * N * n; }
};

double defect_norm1(const MinFuelProblem& prob, const ReferenceTrajectory& ref,
                    int substeps, double* max_defect) {
  double total = 0.0;
  double worst = 0.0;
  for (int k = 0; k < ref.segments(); ++k) {
    const Eigen::VectorXd end =
        propagate_nonlinear(*prob.model, ref.nodes[k], ref.controls[k], ref.times[k],
                            ref.times[k + 1], substeps);
    const Eigen::VectorXd gap = ref.nodes[k + 1] - end;
    total += gap.lpNorm<1>();
    worst = std::max(worst, gap.lpNorm<Eigen::Infinity>());
  }
  if (max_defect) *max_defect = worst;
  return total;
}

double fuel(const ReferenceTrajectory& ref) {
  double total = 0.0;
  for (int k = 0; k < ref.segments(); ++k) {
    total += ref.controls[k](ref.controls[k].size() - 1) * (ref.times[k + 1] - ref.times[k]);
  }
  return total;
}

}  // namespace

MinFuelResult solve_min_fuel(const MinFuelProblem& prob, const InitializerOptions& opt) {
  if (!prob.model) throw Error(ErrorCategory::kInvalidArgument, "min-fuel: missing model");
  const SegmentModel& model = *prob.model;
  const int n = model.state_dim();
  const int m = model.control_dim();
  const int N = static_cast<int>(prob.times.size()) - 1;
  if (n != model.full_dim() || prob.initial_state.size() != n ||
      prob.final_target.size() > n || N < 1) {
    throw Error(ErrorCategory::kInvalidArgument, "min-fuel: inconsistent dimensions");
  }
  if (!(prob.u_max > 0.0)) {
    throw Error(ErrorCategory::kInvalidArgument, "min-fuel: u_max must be positive");
  }
  const Layout L{n, m, N};
  const int nf = static_cast<int>(prob.final_target.size());

  ReferenceTrajectory ref;
  ref.times = prob.times;
  if (!prob.guess_nodes.empty()) {
    if (static_cast<int>(prob.guess_nodes.size()) != N + 1) {
      throw Error(ErrorCategory::kInvalidArgument, "min-fuel: guess has wrong node count");
    }
    ref.nodes = prob.guess_nodes;
  } else {
    Eigen::VectorXd xf = prob.initial_state;
    xf.head(nf) = prob.final_target;
    for (int k = 0; k <= N; ++k) {
      const double a = static_cast<double>(k) / N;
      ref.nodes.push_back((1.0 - a) * prob.initial_state + a * xf);
    }
  }
  ref.controls.assign(N, Eigen::VectorXd::Zero(m));

  const double lambda = opt.virtual_control_weight;
  auto merit = [&](const ReferenceTrajectory& r, double* worst) {
    return fuel(r) + lambda * defect_norm1(prob, r, opt.integrator.substeps, worst);
  };
  double worst_defect = 0.0;
  double J_ref = merit(ref, &worst_defect);
  double radius = opt.initial_radius;

  MinFuelResult result;
  std::vector<DiscreteSegment> segs;
  bool stale = true;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    result.iterations = iter;
    if (stale) {
      segs = discretize(ref, model, opt.integrator);
      stale = false;
    }
    ConicProgram prog(L.size());
    for (int i = 0; i < n; ++i) prog.add_equality(AffineExpr::variable(L.x(0, i)), prob.initial_state(i));
    for (int i = 0; i < nf; ++i) prog.add_equality(AffineExpr::variable(L.x(N, i)), prob.final_target(i));
    for (int k = 0; k < N; ++k) {
      const auto& sg = segs[k];
      for (int i = 0; i < n; ++i) {
        AffineExpr row = AffineExpr::variable(L.x(k + 1, i));
        for (int j = 0; j < n; ++j) {
          if (sg.A(i, j) != 0.0) row.add(L.x(k, j), -sg.A(i, j));
        }
        for (int j = 0; j < m; ++j) {
          if (sg.B(i, j) != 0.0) row.add(L.u(k, j), -sg.B(i, j));
        }
        row.add(L.nu(k, i), -1.0);
        prog.add_equality(row, sg.c(i));
        prog.add_nonnegative(AffineExpr::variable(L.s(k, i)).add(L.nu(k, i), -1.0));
        prog.add_nonnegative(AffineExpr::variable(L.s(k, i)).add(L.nu(k, i), 1.0));
        prog.add_cost(L.s(k, i), lambda);
      }
      std::vector<AffineExpr> cone{AffineExpr::variable(L.u(k, m - 1))};
      for (int j = 0; j < m - 1; ++j) cone.push_back(AffineExpr::variable(L.u(k, j)));
      prog.add_soc(cone);
      prog.add_nonnegative(AffineExpr(prob.u_max).add(L.u(k, m - 1), -1.0));
      prog.add_cost(L.u(k, m - 1), ref.times[k + 1] - ref.times[k]);
    }
    for (int k = 1; k <= N; ++k) {
      for (int i = 0; i < n; ++i) {
        const double c = ref.nodes[k](i);
        prog.add_nonnegative(AffineExpr(radius + c).add(L.x(k, i), -1.0));
        prog.add_nonnegative(AffineExpr(radius - c).add(L.x(k, i), 1.0));
      }
    }
    const ConicSolution sol = solve(prog, opt.conic);
    if (!usable(sol.status)) {
      radius *= 0.5;
      if (opt.log) {
        *opt.log << fmt::format("init\t{}\tsubproblem {}\tradius {:.3e}\n", iter,
                                to_string(sol.status), radius);
      }
      if (radius < opt.min_radius) break;
      continue;
    }
    ReferenceTrajectory cand;
    cand.times = ref.times;
    for (int k = 0; k <= N; ++k) cand.nodes.push_back(sol.x.segment(L.x(k, 0), n));
    for (int k = 0; k < N; ++k) cand.controls.push_back(sol.x.segment(L.u(k, 0), m));
    const double L_cand = sol.objective;
    double cand_defect = 0.0;
    double J_cand = std::numeric_limits<double>::infinity();
    try {
      J_cand = merit(cand, &cand_defect);
    } catch (const Error&) {
      // the step leaves the model's domain (e.g. mass through zero): reject it
    }
    const double predicted = J_ref - L_cand;
    const double actual = J_ref - J_cand;
    const double rho = predicted > 0.0 ? actual / predicted : 0.0;
    if (opt.log) {
      *opt.log << fmt::format(
          "init\t{}\tJ {:.10e}\tpredicted {:.3e}\trho {:.3f}\tdefect {:.3e}\tradius {:.3e}\n",
          iter, J_ref, predicted, rho, worst_defect, radius);
    }
    if (predicted <= opt.tolerance * std::max(1.0, std::abs(J_ref)) &&
        worst_defect <= opt.defect_tolerance) {
      result.converged = true;
      break;
    }
    if (predicted <= opt.tolerance * std::max(1.0, std::abs(J_ref)) && rho <= 0.1) {
      // no further progress possible at this radius
      radius *= 0.5;
      if (radius < opt.min_radius) break;
      continue;
    }
    if (rho > 0.1) {
      ref = std::move(cand);
      J_ref = J_cand;
      worst_defect = cand_defect;
      stale = true;
    }
    if (rho < 0.25) {
      radius *= 0.5;
    } else if (rho > 0.75) {
      radius = std::min(2.0 * radius, opt.max_radius);
    }
    if (radius < opt.min_radius) break;
  }
  result.trajectory = std::move(ref);
  result.cost = fuel(result.trajectory);
  result.max_defect = worst_defect;
  return result;
}

std::vector<Eigen::VectorXd> interpolated_guess(const Eigen::VectorXd& initial,
                                                const Eigen::VectorXd& final_rv, int N,
                                                double final_mass_fraction) {
  const int d = spatial_dim(initial.size());
  auto polar = [d](const Eigen::VectorXd& rv, double& rho, double& theta, double& vr,
                   double& vt) {
    const double x = rv(0), y = rv(1), vx = rv(d), vy = rv(d + 1);
    rho = std::hypot(x, y);
    theta = std::atan2(y, x);
    vr = (x * vx + y * vy) / rho;
    vt = (x * vy - y * vx) / rho;
  };
  double r0, th0, vr0, vt0, r1, th1, vr1, vt1;
  polar(initial, r0, th0, vr0, vt0);
  polar(final_rv, r1, th1, vr1, vt1);
  double sweep = th1 - th0;
  while (sweep <= 0.0) sweep += 2.0 * M_PI;
  while (sweep > 2.0 * M_PI) sweep -= 2.0 * M_PI;
  const double m0 = initial(2 * d);
  std::vector<Eigen::VectorXd> nodes;
  for (int k = 0; k <= N; ++k) {
    const double a = static_cast<double>(k) / N;
    const double rho = (1 - a) * r0 + a * r1;
    const double th = th0 + a * sweep;
    const double vr = (1 - a) * vr0 + a * vr1;
    const double vt = (1 - a) * vt0 + a * vt1;
    Eigen::VectorXd x(2 * d + 1);
    x(0) = rho * std::cos(th);
    x(1) = rho * std::sin(th);
    x(d) = vr * std::cos(th) - vt * std::sin(th);
    x(d + 1) = vr * std::sin(th) + vt * std::cos(th);
    if (d == 3) {
      x(2) = (1 - a) * initial(2) + a * final_rv(2);
      x(5) = (1 - a) * initial(5) + a * final_rv(5);
    }
    x(2 * d) = m0 * (1.0 - a * (1.0 - final_mass_fraction));
    nodes.push_back(x);
  }
  return nodes;
}

ReferenceTrajectory solve_reference(const Scenario& scenario, const InitializerOptions& opt) {
  Scenario sc = scenario;
  if (opt.segments > 0) sc.segments = opt.segments;
  const ScaledProblem p = scale_scenario(sc);
  const int d = p.spatial;
  RelaxedThrustModel relaxed(d, p.params);
  MinFuelProblem prob;
  prob.model = &relaxed;
  prob.initial_state = p.initial_mean;
  prob.final_target = p.final_mean;
  prob.times = p.times;
  prob.u_max = p.params.u_max;
  prob.guess_nodes =
      interpolated_guess(p.initial_mean, p.final_mean, sc.segments, opt.final_mass_fraction);
  const MinFuelResult res = solve_min_fuel(prob, opt);
  if (!res.converged) {
    throw Error(ErrorCategory::kNotConverged,
                fmt::format("deterministic initializer did not converge after {} iterations "
                            "(max defect {:.3e})",
                            res.iterations, res.max_defect));
  }
  // Re-propagate with the exact mass-rate model so nodes are self-consistent.
  MassCoupledModel exact(d, p.params);
  ReferenceTrajectory ref;
  ref.times = p.times;
  ref.nodes.push_back(p.initial_mean);
  for (int k = 0; k < sc.segments; ++k) {
    const Eigen::VectorXd u = res.trajectory.controls[k].head(d);
    ref.controls.push_back(u);
    ref.nodes.push_back(propagate_nonlinear(exact, ref.nodes.back(), u, p.times[k],
                                            p.times[k + 1], opt.integrator.substeps));
  }
  const double miss = (ref.nodes.back().head(2 * d) - p.final_mean).lpNorm<Eigen::Infinity>();
  if (miss > 1e-6) {
    throw Error(ErrorCategory::kNumerical,
                fmt::format("deterministic reference misses the target by {:.3e} (scaled)", miss));
  }
  return unscale_reference(ref, p.scales);
}

std::string format_reference(const ReferenceTrajectory& ref, const std::string& units) {
  ref.validate();
  const int n = static_cast<int>(ref.nodes[0].size());
  const int m = static_cast<int>(ref.controls[0].size());
  std::string out = fmt::format("covsteer-reference n_x {} n_u {} N {} units {}\n", n, m,
                                ref.segments(), units);
  out += "time";
  for (int i = 0; i < n; ++i) out += fmt::format(" x{}", i);
  for (int i = 0; i < m; ++i) out += fmt::format(" u{}", i);
  out += "\n";
  for (int k = 0; k <= ref.segments(); ++k) {
    out += fmt::format("{:.17g}", ref.times[k]);
    for (int i = 0; i < n; ++i) out += fmt::format(" {:.17g}", ref.nodes[k](i));
    for (int i = 0; i < m; ++i) {
      out += fmt::format(" {:.17g}", k < ref.segments() ? ref.controls[k](i) : 0.0);
    }
    out += "\n";
  }
  return out;
}

ReferenceTrajectory parse_reference(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  auto fail = [&](int row, const std::string& what) -> void {
    throw Error(ErrorCategory::kParse, fmt::format("{}:{}: {}", source, row, what));
  };
  if (!std::getline(in, line)) fail(1, "empty reference file");
  std::istringstream head(line);
  std::string magic, kn, km, kN, ku, units;
  int n = 0, m = 0, N = 0;
  if (!(head >> magic >> kn >> n >> km >> m >> kN >> N >> ku >> units) ||
      magic != "covsteer-reference" || kn != "n_x" || km != "n_u" || kN != "N" ||
      ku != "units") {
    fail(1, "bad header, expected 'covsteer-reference n_x <n> n_u <m> N <N> units <tag>'");
  }
  if (n < 1 || m < 1 || N < 1) fail(1, "header dimensions must be positive");
  if (!std::getline(in, line)) fail(2, "missing column header");
  ReferenceTrajectory ref;
  int row = 2;
  while (static_cast<int>(ref.times.size()) < N + 1) {
    ++row;
    if (!std::getline(in, line)) fail(row, fmt::format("expected {} data rows", N + 1));
    std::istringstream fields(line);
    std::vector<double> v;
    std::string tok;
    int col = 0;
    while (fields >> tok) {
      ++col;
      try {
        std::size_t used = 0;
        v.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(row, fmt::format("field {} '{}' is not a number", col, tok));
      }
    }
    if (static_cast<int>(v.size()) != 1 + n + m) {
      fail(row, fmt::format("expected {} fields, got {}", 1 + n + m, v.size()));
    }
    if (!ref.times.empty() && !(v[0] > ref.times.back())) {
      fail(row, "time is not strictly increasing");
    }
    ref.times.push_back(v[0]);
    ref.nodes.push_back(Eigen::Map<Eigen::VectorXd>(v.data() + 1, n));
    if (static_cast<int>(ref.times.size()) <= N) {
      ref.controls.push_back(Eigen::Map<Eigen::VectorXd>(v.data() + 1 + n, m));
    }
  }
  try {
    ref.validate();
  } catch (const Error& e) {
    throw Error(ErrorCategory::kParse, fmt::format("{}: {}", source, e.what()));
  }
  return ref;
}

ReferenceTrajectory load_reference(const std::string& path) {
  return parse_reference(read_text_file(path), path);
}

void write_reference(const ReferenceTrajectory& ref, const std::string& path,
                     const std::string& units) {
  write_file_atomic(path, format_reference(ref, units));
}

}  // namespace covsteer
