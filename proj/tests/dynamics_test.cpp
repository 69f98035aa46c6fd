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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "covsteer/discretize.hpp"
#include "covsteer/dynamics.hpp"
#include "covsteer/error.hpp"

namespace covsteer {
namespace {

constexpr double kMuSun = 1.3271e11;  // km^3/s^2

PhysicalParams table_params() {
  PhysicalParams p;
  p.mu = kMuSun;
  p.isp = 3000.0;
  p.g0 = 9.80665e-3;
  p.u_max = 5e-3;  // 5 N in kg km/s^2
  p.gamma = 9e-5;
  return p;
}

Eigen::VectorXd planar_state() {
  Eigen::VectorXd x(5);
  x << -140699693.0, -51614428.0, 9.774596, -28.07828, 5000.0;
  return x;
}

TEST(DriftTest, CoastHasZeroMassRate) {
  ModelTolerances tol;
  const auto f = drift(planar_state(), Eigen::Vector2d::Zero(), table_params(), tol);
  EXPECT_EQ(f(4), 0.0);
}

TEST(DriftTest, MassRateAtFullThrust) {
  const auto f = drift(planar_state(), Eigen::Vector2d(3e-3, 4e-3), table_params());
  EXPECT_NEAR(f(4), -5e-3 / (3000.0 * 9.80665e-3), 1e-15);
  EXPECT_NEAR(f(4), -1.6996e-4, 1e-8);
}

TEST(DriftTest, MassRateIsNonPositive) {
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d u(nd(rng) * 1e-3, nd(rng) * 1e-3);
    EXPECT_LT(drift(planar_state(), u, table_params())(4), 0.0);
  }
}

TEST(DriftTest, RejectsSingularStates) {
  Eigen::VectorXd x = planar_state();
  x(4) = 0.0;
  EXPECT_THROW(drift(x, Eigen::Vector2d::Zero(), table_params()), Error);
  x = planar_state();
  x.head(2).setZero();
  EXPECT_THROW(drift(x, Eigen::Vector2d::Zero(), table_params()), Error);
  EXPECT_THROW(drift(Eigen::VectorXd::Ones(4), Eigen::Vector2d::Zero(), table_params()),
               Error);
}

TEST(DriftTest, CircularOrbitClosesAfterOnePeriod) {
  const double R = kAstronomicalUnitKm;
  PhysicalParams p = table_params();
  Eigen::VectorXd x(5);
  x << R, 0.0, 0.0, std::sqrt(p.mu / R), 1000.0;
  MassCoupledModel model(2, p);
  const double period = 2.0 * M_PI * std::sqrt(R * R * R / p.mu);
  const auto end =
      propagate_nonlinear(model, x, Eigen::Vector2d::Zero(), 0.0, period, 4000);
  EXPECT_LE((end.head(2) - x.head(2)).norm() / R, 1e-9);
  EXPECT_LE((end.segment(2, 2) - x.segment(2, 2)).norm() / x(3), 1e-9);
  EXPECT_EQ(end(4), 1000.0);
}

TEST(DiffusionTest, VelocityBlockIsGammaOverMass) {
  const Eigen::MatrixXd G = diffusion(planar_state(), table_params());
  ASSERT_EQ(G.rows(), 5);
  ASSERT_EQ(G.cols(), 2);
  EXPECT_NEAR(G(2, 0), 1.8e-8, 1e-22);
  EXPECT_NEAR(G(3, 1), 1.8e-8, 1e-22);
  EXPECT_EQ(G(2, 1), 0.0);
  EXPECT_TRUE(G.topRows(2).isZero(0.0));
  EXPECT_TRUE(G.row(4).isZero(0.0));
}

TEST(DiffusionTest, ZeroGammaAndHalvedMass) {
  PhysicalParams p = table_params();
  p.gamma = 0.0;
  EXPECT_TRUE(diffusion(planar_state(), p).isZero(0.0));
  Eigen::VectorXd half = planar_state();
  half(4) *= 0.5;
  EXPECT_EQ(diffusion(half, table_params())(2, 0),
            2.0 * diffusion(planar_state(), table_params())(2, 0));
}

// Central differences with a step scaled to each component's magnitude.
void check_jacobians_fd(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        const PhysicalParams& p) {
  const Linearization lin = jacobians(x, u, p);
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(u.size());
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(std::abs(x(j)), 1e-3);
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Eigen::VectorXd col = (drift(xp, u, p) - drift(xm, u, p)) / (2.0 * h);
    const double ref = std::max(col.norm(), lin.A.col(j).norm());
    if (ref == 0.0) continue;
    EXPECT_LE((col - lin.A.col(j)).norm() / ref, 1e-6) << "state column " << j;
  }
  for (int j = 0; j < m; ++j) {
    const double h = 1e-6 * std::max(u.norm(), 1e-12);
    Eigen::VectorXd up = u, um = u;
    up(j) += h;
    um(j) -= h;
    const Eigen::VectorXd col = (drift(x, up, p) - drift(x, um, p)) / (2.0 * h);
    EXPECT_LE((col - lin.B.col(j)).norm() / col.norm(), 1e-6) << "control column " << j;
  }
}

TEST(JacobianTest, MatchesFiniteDifferencesAtRandomPoints) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  const PhysicalParams p = table_params();
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd x(2 * dim + 1);
      for (int i = 0; i < dim; ++i) x(i) = 1.5e8 * ud(rng) + (i == 0 ? 2e8 : 0.0);
      for (int i = 0; i < dim; ++i) x(dim + i) = 30.0 * ud(rng);
      x(2 * dim) = 3000.0 + 2000.0 * std::abs(ud(rng));
      Eigen::VectorXd u(dim);
      for (int i = 0; i < dim; ++i) u(i) = 3e-3 * ud(rng);
      check_jacobians_fd(x, u, p);
    }
  }
}

TEST(JacobianTest, ControlBlockAndAffineTerm) {
  const Eigen::VectorXd x = planar_state();
  const Eigen::Vector2d u(1e-3, -2e-3);
  const auto lin = jacobians(x, u, table_params());
  EXPECT_LE((lin.B.block(2, 0, 2, 2) - Eigen::Matrix2d::Identity() / 5000.0)
                .cwiseAbs()
                .maxCoeff(),
            1e-20);
  const Eigen::VectorXd f = drift(x, u, table_params());
  EXPECT_LE((lin.A * x + lin.B * u + lin.c - f).cwiseAbs().maxCoeff(),
            1e-12 * f.cwiseAbs().maxCoeff() + 1e-12 * x.cwiseAbs().maxCoeff() *
                                                  lin.A.cwiseAbs().maxCoeff());
}

TEST(JacobianTest, CoastArcIsFinite) {
  const auto lin = jacobians(planar_state(), Eigen::Vector2d::Zero(), table_params());
  EXPECT_TRUE(lin.A.allFinite());
  EXPECT_TRUE(lin.B.allFinite());
}

TEST(ScalingTest, RoundTripIsIdentity) {
  const ScaleSet s = ScaleSet::canonical(kMuSun, 5000.0);
  const Eigen::VectorXd x = planar_state();
  const Eigen::VectorXd back = unscale_state(scale_state(x, s), s);
  EXPECT_LE(((back - x).array() / x.array()).abs().maxCoeff(), 1e-14);
  Eigen::MatrixXd P = Eigen::VectorXd(x.array().square() * 1e-6).asDiagonal();
  P(0, 2) = P(2, 0) = 3.0;
  const Eigen::MatrixXd Pb = unscale_covariance(scale_covariance(P, s), s);
  EXPECT_LE((Pb - P).cwiseAbs().maxCoeff() / P.cwiseAbs().maxCoeff(), 1e-14);
  const PhysicalParams pb = unscale_params(scale_params(table_params(), s), s);
  EXPECT_NEAR(pb.gamma / table_params().gamma, 1.0, 1e-14);
  EXPECT_NEAR(pb.u_max / table_params().u_max, 1.0, 1e-14);
  EXPECT_NEAR(pb.mu / table_params().mu, 1.0, 1e-14);
}

TEST(ScalingTest, CanonicalUnits) {
  const ScaleSet s = ScaleSet::canonical(kMuSun, 5000.0);
  EXPECT_NEAR(scale_params(table_params(), s).mu, 1.0, 1e-14);
  const double r = scale_state(planar_state(), s).head(2).norm();
  EXPECT_GT(r, 0.99);
  EXPECT_LT(r, 1.01);
  EXPECT_EQ(scale_state(planar_state(), ScaleSet::identity()), planar_state());
  ScaleSet bad;
  bad.time = 0.0;
  EXPECT_THROW(scale_state(planar_state(), bad), Error);
}

TEST(ScalingTest, DriftCommutesWithScaling) {
  const ScaleSet s = ScaleSet::canonical(kMuSun, 5000.0);
  const Eigen::VectorXd x = planar_state();
  const Eigen::Vector2d u(2e-3, 1e-3);
  const Eigen::VectorXd f = drift(x, u, table_params());
  ModelTolerances tol;
  const Eigen::VectorXd fs = drift(scale_state(x, s), u / s.force(),
                                   scale_params(table_params(), s), tol);
  // state derivative units are state units per time unit
  const Eigen::VectorXd back = fs.cwiseProduct(state_units(5, s)) / s.time;
  EXPECT_LE(((back - f).array() / f.array()).abs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace covsteer
