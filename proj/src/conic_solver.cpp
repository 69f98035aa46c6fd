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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cones.hpp"
#include "ldl.hpp"
#include "covsteer/conic.hpp"

namespace covsteer {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Direction {
  Vec x, y, z;
};

// Solves
//   [ 0  A^T  G^T ] [dx]   [r1]
//   [ A  0    0   ] [dy] = [r2]
//   [ G  0   -V   ] [dz]   [r3]
// with V = W^T W. The factored matrix carries a small static
// regularization; iterative refinement runs against the exact system.
class KktSolver {
 public:
  KktSolver(const SpMat& A, const SpMat& G, const SolverSettings& settings)
      : A_(A), At_(A.transpose()), G_(G), Gt_(G.transpose()),
        n_(static_cast<int>(A.cols())), p_(static_cast<int>(A.rows())),
        m_(static_cast<int>(G.rows())), settings_(settings) {}

  bool factor(const SpMat& v) {
    v_ = v;
    const double delta = settings_.static_regularization;
    const int dim = n_ + p_ + m_;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(v.nonZeros() + 2 * A_.nonZeros() + 2 * G_.nonZeros() + dim);
    for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, delta);
    for (int k = 0; k < A_.outerSize(); ++k) {
      for (SpMat::InnerIterator it(A_, k); it; ++it) {
        trip.emplace_back(n_ + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    }
    for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -delta);
    const int z0 = n_ + p_;
    for (int k = 0; k < G_.outerSize(); ++k) {
      for (SpMat::InnerIterator it(G_, k); it; ++it) {
        trip.emplace_back(z0 + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), z0 + it.row(), it.value());
      }
    }
    for (int k = 0; k < v.outerSize(); ++k) {
      for (SpMat::InnerIterator it(v, k); it; ++it) {
        trip.emplace_back(z0 + it.row(), z0 + it.col(), -it.value());
      }
    }
    for (int i = 0; i < m_; ++i) trip.emplace_back(z0 + i, z0 + i, -delta);
    K_.resize(dim, dim);
    K_.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_ || K_.nonZeros() != pattern_nnz_) {
      std::vector<int> signs(dim, -1);
      std::fill(signs.begin(), signs.begin() + n_, 1);
      ldl_.analyze(K_, signs);
      analyzed_ = true;
      pattern_nnz_ = K_.nonZeros();
    }
    return ldl_.factorize(K_);
  }

  Direction solve(const Vec& r1, const Vec& r2, const Vec& r3) const {
    Vec rhs(n_ + p_ + m_);
    rhs << r1, r2, r3;
    Vec sol = ldl_.solve(rhs);
    const double scale = 1.0 + max_abs(rhs);
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < settings_.refinement_steps; ++it) {
      const Vec res = rhs - apply(sol);
      const double err = max_abs(res);
      if (err <= 1e-15 * scale || err >= 0.5 * last) break;
      last = err;
      sol += ldl_.solve(res);
    }
    Direction d;
    d.x = sol.head(n_);
    d.y = sol.segment(n_, p_);
    d.z = sol.tail(m_);
    return d;
  }

 private:
  static double max_abs(const Vec& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  }

  // Unregularized KKT product.
  Vec apply(const Vec& sol) const {
    const auto x = sol.head(n_);
    const auto y = sol.segment(n_, p_);
    const auto z = sol.tail(m_);
    Vec out(sol.size());
    out.head(n_) = At_ * y + Gt_ * z;
    out.segment(n_, p_) = A_ * x;
    out.tail(m_) = G_ * x - v_ * z;
    return out;
  }

  SpMat A_, At_, G_, Gt_;
  int n_, p_, m_;
  SolverSettings settings_;
  SpMat v_, K_;
  detail::QuasiDefiniteLdl ldl_;
  bool analyzed_ = false;
  Eigen::Index pattern_nnz_ = 0;
};

double safe_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.norm(); }

}  // namespace

ConicSolution solve(const ConicProgram& program, const SolverSettings& settings) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int n = program.num_variables();
  const int m = program.num_cone_rows();

  const SpMat A = program.equality_matrix();
  const Vec b = program.equality_rhs();
  const SpMat G = -program.cone_matrix();
  const Vec h = program.cone_offset();
  const Vec c = Eigen::Map<const Vec>(program.cost().data(), n);

  ConicSolution out;
  out.x = Vec::Zero(n);
  out.y = Vec::Zero(A.rows());
  out.z = Vec::Zero(m);

  detail::ConeSet cones(program.cones(), m);
  KktSolver kkt(A, G, settings);
  const Vec e = cones.identity();

  SpMat ident(m, m);
  ident.setIdentity();
  if (!kkt.factor(ident)) {
    out.status = SolveStatus::kNumericalFailure;
    return out;
  }
  Direction primal = kkt.solve(Vec::Zero(n), b, h);
  Direction dual = kkt.solve(-c, Vec::Zero(A.rows()), Vec::Zero(m));
  Vec x = primal.x;
  Vec s = h - G * x;
  Vec y = dual.y;
  Vec z = dual.z;
  if (m > 0) {
    const double ts = cones.max_violation(s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    const double tz = cones.max_violation(z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  const double resx0 = std::max(1.0, safe_norm(c));
  const double resy0 = std::max(1.0, safe_norm(b));
  const double resz0 = std::max(1.0, safe_norm(h));
  const int degree = cones.degree();

  // Best iterate meeting the relaxed tolerances, returned as kInaccurate if
  // the method later stalls.
  ConicSolution best;
  double best_score = kInf;
  auto give_up = [&](SolveStatus status) {
    if (best_score <= settings.inaccurate_factor) return best;
    out.status = status;
    return out;
  };

  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    const Vec rx = A.transpose() * y + G.transpose() * z + c * tau;
    const Vec ry = b * tau - A * x;
    const Vec rz = s + G * x - h * tau;
    const double rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / (degree + 1);

    const double pcost = c.dot(x) / tau;
    const double dcost = -(b.dot(y) + h.dot(z)) / tau;
    const double pres =
        std::max(safe_norm(ry) / tau / resy0, safe_norm(rz) / tau / resz0);
    const double dres = safe_norm(rx) / tau / resx0;
    const double gap = s.dot(z) / (tau * tau);
    double relgap = kInf;
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;

    out.iterations = iter;
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    if (settings.verbose) {
      std::fprintf(stderr,
                   "%3d pcost % .8e dcost % .8e gap %.2e pres %.2e dres %.2e "
                   "tau %.2e kappa %.2e\n",
                   iter, pcost, dcost, gap, pres, dres, tau, kappa);
    }
    if (!std::isfinite(mu) || !std::isfinite(pcost) || !std::isfinite(dcost)) {
      return give_up(SolveStatus::kNumericalFailure);
    }
    const double score =
        std::max({pres / settings.feastol, dres / settings.feastol,
                  std::min(gap / settings.abstol, relgap / settings.reltol)});
    if (score < best_score) {
      best_score = score;
      best.status = SolveStatus::kInaccurate;
      best.x = x / tau;
      best.y = y / tau;
      best.z = z / tau;
      best.objective = c.dot(best.x) + program.cost_offset();
      best.iterations = iter;
      best.primal_residual = pres;
      best.dual_residual = dres;
      best.gap = gap;
    }
    if (pres <= settings.feastol && dres <= settings.feastol &&
        (gap <= settings.abstol || relgap <= settings.reltol)) {
      out.status = SolveStatus::kOptimal;
      out.x = x / tau;
      out.y = y / tau;
      out.z = z / tau;
      out.objective = c.dot(out.x) + program.cost_offset();
      return out;
    }
    const double hz_by = h.dot(z) + b.dot(y);
    if (hz_by < 0.0) {
      const double pinfres =
          safe_norm(A.transpose() * y + G.transpose() * z) / resx0 / -hz_by;
      if (pinfres <= settings.feastol) {
        out.status = SolveStatus::kInfeasible;
        out.y = y / -hz_by;
        out.z = z / -hz_by;
        return out;
      }
    }
    const double cx = c.dot(x);
    if (cx < 0.0) {
      const double dinfres =
          std::max(safe_norm(A * x) / resy0, safe_norm(G * x + s) / resz0) / -cx;
      if (dinfres <= settings.feastol) {
        out.status = SolveStatus::kUnbounded;
        out.x = x / -cx;
        return out;
      }
    }
    if (iter == settings.max_iterations) break;

    if (!cones.update_scaling(s, z)) return give_up(SolveStatus::kNumericalFailure);
    if (!kkt.factor(cones.scaling_matrix(false))) {
      return give_up(SolveStatus::kNumericalFailure);
    }
    const Direction d1 = kkt.solve(-c, b, h);
    const double d1_dot = c.dot(d1.x) + b.dot(d1.y) + h.dot(d1.z);
    const Vec& lam = cones.lambda();
    const Vec lam_sq = cones.jordan(lam, lam);

    double sigma = 0.0;
    double eta = 0.0;
    Vec ds_aff, dz_aff;
    double dtau_aff = 0.0, dkappa_aff = 0.0;
    Direction step;
    Vec ds_hat, dz_hat;
    double dtau = 0.0, dkappa = 0.0, alpha = 0.0;

    for (int pass = 0; pass < 2; ++pass) {
      Vec rc = -lam_sq;
      double rk = -tau * kappa;
      if (pass == 1) {
        rc += sigma * mu * e - cones.jordan(ds_aff, dz_aff);
        rk += sigma * mu - dtau_aff * dkappa_aff;
      }
      const Vec lam_rc = cones.lambda_divide(rc);
      const Vec r3 = -(1.0 - eta) * rz - cones.apply_wt(lam_rc);
      const Direction d2 = kkt.solve(-(1.0 - eta) * rx, (1.0 - eta) * ry, r3);
      dtau = (-(1.0 - eta) * rt - rk / tau -
              (c.dot(d2.x) + b.dot(d2.y) + h.dot(d2.z))) /
             (-kappa / tau + d1_dot);
      step.x = d2.x + dtau * d1.x;
      step.y = d2.y + dtau * d1.y;
      step.z = d2.z + dtau * d1.z;
      dz_hat = cones.apply_w(step.z);
      ds_hat = lam_rc - dz_hat;
      dkappa = (rk - kappa * dtau) / tau;

      double amax = std::min(cones.max_step(ds_hat), cones.max_step(dz_hat));
      if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
      if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);
      if (pass == 0) {
        const double a_aff = std::min(1.0, amax);
        sigma = std::pow(1.0 - a_aff, 3);
        eta = sigma;
        ds_aff = ds_hat;
        dz_aff = dz_hat;
        dtau_aff = dtau;
        dkappa_aff = dkappa;
      } else {
        alpha = std::min(1.0, settings.step_fraction * amax);
      }
    }
    if (!step.x.allFinite() || !std::isfinite(alpha) || alpha <= 0.0) {
      return give_up(SolveStatus::kNumericalFailure);
    }
    x += alpha * step.x;
    y += alpha * step.y;
    z += alpha * step.z;
    s += alpha * cones.apply_wt(ds_hat);
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }
  if (best_score <= settings.inaccurate_factor) return best;
  out.status = SolveStatus::kMaxIterations;
  out.x = x / tau;
  out.y = y / tau;
  out.z = z / tau;
  out.objective = c.dot(out.x) + program.cost_offset();
  return out;
}

}  // namespace covsteer
