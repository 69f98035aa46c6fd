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

#include "covsteer/dynamics.hpp"

#include <string>

#include "covsteer/error.hpp"

namespace covsteer {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCategory::kInvalidArgument,
                std::string(name) + " must be strictly positive");
  }
}

void check_state(const Eigen::VectorXd& x, int spatial,
                 const ModelTolerances& tol) {
  const double mass = x(2 * spatial);
  if (!(mass > 0.0)) {
    throw Error(ErrorCategory::kDomain,
                "nonpositive mass " + std::to_string(mass));
  }
  const double radius = x.head(spatial).norm();
  if (!(radius >= tol.radius_floor)) {
    throw Error(ErrorCategory::kDomain,
                "radius " + std::to_string(radius) + " below floor " +
                    std::to_string(tol.radius_floor));
  }
}

// -mu (I/r^3 - 3 r r^T / r^5)
Eigen::MatrixXd gravity_gradient(const Eigen::VectorXd& r, double mu) {
  const double rn = r.norm();
  const double r3 = rn * rn * rn;
  const double r5 = r3 * rn * rn;
  const auto d = r.size();
  return -mu * (Eigen::MatrixXd::Identity(d, d) / r3 - 3.0 * r * r.transpose() / r5);
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(mu, "mu");
  require_positive(isp, "isp");
  require_positive(g0, "g0");
  require_positive(u_max, "u_max");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCategory::kInvalidArgument, "gamma must be nonnegative");
  }
}

void ScaleSet::validate() const {
  require_positive(length, "length unit");
  require_positive(time, "time unit");
  require_positive(mass, "mass unit");
}

ScaleSet ScaleSet::canonical(double mu, double initial_mass) {
  require_positive(mu, "mu");
  require_positive(initial_mass, "initial mass");
  ScaleSet s;
  s.length = kAstronomicalUnitKm;
  s.time = std::sqrt(s.length * s.length * s.length / mu);
  s.mass = initial_mass;
  return s;
}

int spatial_dim(Eigen::Index state_dim) {
  if (state_dim != 5 && state_dim != 7) {
    throw Error(ErrorCategory::kInvalidArgument,
                "state dimension must be 5 or 7, got " +
                    std::to_string(state_dim));
  }
  return static_cast<int>((state_dim - 1) / 2);
}

Eigen::VectorXd drift(const Eigen::VectorXd& state,
                      const Eigen::VectorXd& control,
                      const PhysicalParams& params,
                      const ModelTolerances& tol) {
  const int d = spatial_dim(state.size());
  if (control.size() != d) {
    throw Error(ErrorCategory::kInvalidArgument, "control dimension mismatch");
  }
  check_state(state, d, tol);
  const auto r = state.head(d);
  const double m = state(2 * d);
  const double rn = r.norm();
  Eigen::VectorXd f(state.size());
  f.head(d) = state.segment(d, d);
  f.segment(d, d) = -params.mu * r / (rn * rn * rn) + control / m;
  f(2 * d) = -control.norm() / params.exhaust_speed();
  return f;
}

Eigen::MatrixXd diffusion(const Eigen::VectorXd& state,
                          const PhysicalParams& params) {
  const int d = spatial_dim(state.size());
  const double m = state(2 * d);
  if (!(m > 0.0)) {
    throw Error(ErrorCategory::kDomain, "nonpositive mass " + std::to_string(m));
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(state.size(), d);
  g.block(d, 0, d, d).diagonal().setConstant(params.gamma / m);
  return g;
}

Linearization jacobians(const Eigen::VectorXd& state,
                        const Eigen::VectorXd& control,
                        const PhysicalParams& params,
                        const ModelTolerances& tol) {
  const Eigen::VectorXd f = drift(state, control, params, tol);
  const int d = spatial_dim(state.size());
  const auto n = state.size();
  const double m = state(2 * d);
  const double c_ex = params.exhaust_speed();
  const double smooth_norm =
      std::sqrt(control.squaredNorm() +
                tol.thrust_smoothing * tol.thrust_smoothing);

  Linearization lin;
  lin.A = Eigen::MatrixXd::Zero(n, n);
  lin.A.block(0, d, d, d).setIdentity();
  lin.A.block(d, 0, d, d) = gravity_gradient(state.head(d), params.mu);
  lin.A.block(d, 2 * d, d, 1) = -control / (m * m);

  lin.B = Eigen::MatrixXd::Zero(n, d);
  lin.B.block(d, 0, d, d).diagonal().setConstant(1.0 / m);
  lin.B.row(2 * d) = -control.transpose() / (smooth_norm * c_ex);

  lin.c = f - lin.A * state - lin.B * control;
  return lin;
}

Eigen::VectorXd state_units(Eigen::Index state_dim, const ScaleSet& s) {
  const auto d = state_dim / 2;
  Eigen::VectorXd units(state_dim);
  units.head(d).setConstant(s.length);
  units.segment(d, d).setConstant(s.speed());
  if (state_dim % 2 == 1) units(state_dim - 1) = s.mass;
  return units;
}

Eigen::VectorXd scale_state(const Eigen::VectorXd& state, const ScaleSet& s) {
  s.validate();
  return state.cwiseQuotient(state_units(state.size(), s));
}

Eigen::VectorXd unscale_state(const Eigen::VectorXd& state, const ScaleSet& s) {
  s.validate();
  return state.cwiseProduct(state_units(state.size(), s));
}

Eigen::MatrixXd scale_covariance(const Eigen::MatrixXd& cov, const ScaleSet& s) {
  s.validate();
  const Eigen::VectorXd inv = state_units(cov.rows(), s).cwiseInverse();
  return inv.asDiagonal() * cov * inv.asDiagonal();
}

Eigen::MatrixXd unscale_covariance(const Eigen::MatrixXd& cov,
                                   const ScaleSet& s) {
  s.validate();
  const Eigen::VectorXd u = state_units(cov.rows(), s);
  return u.asDiagonal() * cov * u.asDiagonal();
}

PhysicalParams scale_params(const PhysicalParams& p, const ScaleSet& s) {
  s.validate();
  PhysicalParams out;
  out.mu = p.mu * s.time * s.time / (s.length * s.length * s.length);
  out.isp = p.isp / s.time;
  out.g0 = p.g0 / s.acceleration();
  out.u_max = p.u_max / s.force();
  out.gamma = p.gamma / s.force_density();
  return out;
}

PhysicalParams unscale_params(const PhysicalParams& p, const ScaleSet& s) {
  s.validate();
  PhysicalParams out;
  out.mu = p.mu * s.length * s.length * s.length / (s.time * s.time);
  out.isp = p.isp * s.time;
  out.g0 = p.g0 * s.acceleration();
  out.u_max = p.u_max * s.force();
  out.gamma = p.gamma * s.force_density();
  return out;
}

MassCoupledModel::MassCoupledModel(int spatial, PhysicalParams params,
                                   ModelTolerances tol)
    : spatial_(spatial), params_(params), tol_(tol) {}

Eigen::VectorXd MassCoupledModel::rate(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) const {
  return drift(x, u, params_, tol_);
}

void MassCoupledModel::linearize(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u, Linearization& lin,
                                 Eigen::MatrixXd& noise) const {
  lin = jacobians(x, u, params_, tol_);
  noise = diffusion(x, params_);
}

KnownMassModel::KnownMassModel(int spatial, PhysicalParams params,
                               ModelTolerances tol)
    : spatial_(spatial), params_(params), tol_(tol) {}

Eigen::VectorXd KnownMassModel::rate(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const {
  return drift(x, u, params_, tol_);
}

void KnownMassModel::linearize(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, Linearization& lin,
                               Eigen::MatrixXd& noise) const {
  const int d = spatial_;
  const int n = 2 * d;
  const Eigen::VectorXd f = drift(x, u, params_, tol_);
  const double m = x(n);
  lin.A = Eigen::MatrixXd::Zero(n, n);
  lin.A.block(0, d, d, d).setIdentity();
  lin.A.block(d, 0, d, d) = gravity_gradient(x.head(d), params_.mu);
  lin.B = Eigen::MatrixXd::Zero(n, d);
  lin.B.block(d, 0, d, d).diagonal().setConstant(1.0 / m);
  lin.c = f.head(n) - lin.A * x.head(n) - lin.B * u;
  noise = diffusion(x, params_).topRows(n);
}

RelaxedThrustModel::RelaxedThrustModel(int spatial, PhysicalParams params,
                                       ModelTolerances tol)
    : spatial_(spatial), params_(params), tol_(tol) {}

Eigen::VectorXd RelaxedThrustModel::rate(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  const int d = spatial_;
  Eigen::VectorXd f = drift(x, u.head(d), params_, tol_);
  f(2 * d) = -u(d) / params_.exhaust_speed();
  return f;
}

void RelaxedThrustModel::linearize(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u,
                                   Linearization& lin,
                                   Eigen::MatrixXd& noise) const {
  const int d = spatial_;
  const Linearization full = jacobians(x, u.head(d), params_, tol_);
  lin.A = full.A;
  lin.B = Eigen::MatrixXd::Zero(2 * d + 1, d + 1);
  lin.B.leftCols(d) = full.B;
  lin.B.row(2 * d).setZero();
  lin.B(2 * d, d) = -1.0 / params_.exhaust_speed();
  lin.c = rate(x, u) - lin.A * x - lin.B * u;
  noise = diffusion(x, params_);
}

}  // namespace covsteer
