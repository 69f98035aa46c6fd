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
#include "covsteer/error.hpp"
#include "test_models.hpp"

namespace covsteer {
namespace {

using testing_models::LinearModel;

LinearModel double_integrator(double sigma) {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 0, 0;
  return LinearModel(A, Eigen::Vector2d(0, 1), Eigen::Vector2d::Zero(),
                     Eigen::Vector2d(0, sigma));
}

ReferenceTrajectory single_segment(const Eigen::VectorXd& x0, const Eigen::VectorXd& u,
                                   double h) {
  ReferenceTrajectory ref;
  ref.nodes = {x0, x0};
  ref.controls = {u};
  ref.times = {0.0, h};
  return ref;
}

TEST(DiscretizeTest, DoubleIntegratorClosedForm) {
  const double h = 0.7, sigma = 0.3;
  const auto model = double_integrator(sigma);
  const auto seg = discretize_segment(
      single_segment(Eigen::Vector2d(1, 2), Eigen::VectorXd::Constant(1, 0.5), h), 0, model);
  Eigen::Matrix2d A;
  A << 1, h, 0, 1;
  Eigen::Matrix2d Q;
  Q << h * h * h / 3, h * h / 2, h * h / 2, h;
  Q *= sigma * sigma;
  EXPECT_LE((seg.A - A).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((seg.B - Eigen::Vector2d(h * h / 2, h)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(seg.c.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((seg.Q - Q).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((seg.G * seg.G.transpose() - Q).norm(), 1e-12);
  EXPECT_LE((sqrt_factor(Q) * sqrt_factor(Q).transpose() - Q).norm(), 1e-12);
}

TEST(DiscretizeTest, ZeroDynamics) {
  LinearModel model(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 2),
                    Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 2));
  const auto seg = discretize_segment(
      single_segment(Eigen::Vector3d(1, 2, 3), Eigen::Vector2d(1, 1), 2.0), 0, model);
  EXPECT_TRUE(seg.A.isIdentity(0.0));
  EXPECT_TRUE(seg.B.isZero(0.0));
  EXPECT_TRUE(seg.c.isZero(0.0));
  EXPECT_TRUE(seg.Q.isZero(0.0));
}

TEST(DiscretizeTest, RejectsBadIndex) {
  const auto model = double_integrator(0.1);
  const auto ref = single_segment(Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1), 1.0);
  EXPECT_THROW(discretize_segment(ref, 1, model), Error);
  EXPECT_THROW(discretize_segment(ref, -1, model), Error);
}

TEST(SqrtFactorTest, TrivialCases) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd G = sqrt_factor(I);
  EXPECT_LE((G * G.transpose() - I).norm(), 1e-14);
  EXPECT_TRUE(sqrt_factor(Eigen::MatrixXd::Zero(3, 3)).isZero(0.0));
  Eigen::Matrix2d bad;
  bad << 1, 0, 0, -1;
  EXPECT_THROW(sqrt_factor(bad), Error);
  bad << 1, 1, 0, 1;
  EXPECT_THROW(sqrt_factor(bad), Error);
}

PhysicalParams canonical_params() {
  // Sun-centered problem in canonical units.
  PhysicalParams p;
  p.mu = 1.0;
  p.isp = 3000.0 / 5.0229e6;
  p.g0 = 9.80665e-3 / (1.495978707e8 / (5.0229e6 * 5.0229e6));
  p.u_max = 0.1686;
  p.gamma = 1.355e-6;
  return p;
}

Eigen::VectorXd kepler_state(int dim) {
  Eigen::VectorXd x(2 * dim + 1);
  x.setZero();
  x(0) = 1.0;
  if (dim == 3) x(2) = 0.01;
  x(dim + 1) = 1.02;
  if (dim == 3) x(2 * dim - 1) = 0.003;
  x(2 * dim) = 1.0;
  return x;
}

TEST(DiscretizeTest, KeplerStmDefectIsSecondOrder) {
  for (int dim : {2, 3}) {
    MassCoupledModel model(dim, canonical_params());
    const Eigen::VectorXd x0 = kepler_state(dim);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    u(1) = 0.1;
    const double h = 0.15;
    const auto seg = discretize_segment(single_segment(x0, u, h), 0, model);
    Eigen::VectorXd dir = Eigen::VectorXd::Ones(2 * dim + 1);
    dir(2 * dim) = 0.5;
    double prev = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double eps = 1e-3 / std::pow(2.0, i);
      const Eigen::VectorXd delta = eps * dir;
      const Eigen::VectorXd diff = propagate_nonlinear(model, x0 + delta, u, 0.0, h, 32) -
                                   propagate_nonlinear(model, x0, u, 0.0, h, 32);
      const double defect = (diff - seg.A * delta).norm();
      if (i > 0) {
        EXPECT_NEAR(prev / defect, 4.0, 0.2) << "dim " << dim << " refinement " << i;
      }
      prev = defect;
    }
    // affine model reproduces the nonlinear end point exactly at the reference
    EXPECT_LE((seg.A * x0 + seg.B * u + seg.c - seg.end_state).norm(), 1e-12);
    EXPECT_GT(seg.A.determinant(), 0.0);
  }
}

TEST(DiscretizeTest, StepRefinementConverges) {
  MassCoupledModel model(3, canonical_params());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
  u << 0.05, 0.1, -0.02;
  const auto ref = single_segment(kepler_state(3), u, 0.1);
  IntegratorConfig coarse, fine;
  fine.substeps = 64;
  const auto a = discretize_segment(ref, 0, model, coarse);
  const auto b = discretize_segment(ref, 0, model, fine);
  auto rel = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (x - y).norm() / std::max(y.norm(), 1e-300);
  };
  EXPECT_LE(rel(a.A, b.A), 1e-8);
  EXPECT_LE(rel(a.B, b.B), 1e-8);
  EXPECT_LE(rel(a.c, b.c), 1e-8);
  EXPECT_LE(rel(a.Q, b.Q), 1e-8);
  EXPECT_LE((a.G * a.G.transpose() - a.Q).norm(), 1e-10);
  EXPECT_EQ(a.Q, a.Q.transpose());
}

TEST(PropagateTest, MeanRecursions) {
  const double h = 0.5;
  const auto model = double_integrator(0.0);
  ReferenceTrajectory ref;
  const int N = 6;
  for (int k = 0; k <= N; ++k) {
    ref.nodes.push_back(Eigen::Vector2d(0.0, 1.0));
    ref.times.push_back(k * h);
  }
  ref.controls.assign(N, Eigen::VectorXd::Zero(1));
  const auto segs = discretize(ref, model);
  const double a = 0.4;
  const Eigen::Vector2d x0(1.0, -0.5);
  const auto xs = propagate_mean(segs, x0, std::vector<Eigen::VectorXd>(N, Eigen::VectorXd::Constant(1, a)));
  for (int k = 0; k <= N; ++k) {
    const double t = k * h;
    EXPECT_NEAR(xs[k](0), x0(0) + x0(1) * t + 0.5 * a * t * t, 1e-12);
    EXPECT_NEAR(xs[k](1), x0(1) + a * t, 1e-12);
  }
  const auto free = propagate_mean(segs, x0, std::vector<Eigen::VectorXd>(N, Eigen::VectorXd::Zero(1)));
  Eigen::Vector2d expect = x0;
  for (int k = 0; k < N; ++k) expect = segs[k].A * expect;
  EXPECT_LE((free.back() - expect).norm(), 1e-14);
  EXPECT_THROW(propagate_mean(segs, x0, {}), Error);
}

TEST(PropagateTest, IdentitySegmentsKeepMean) {
  DiscreteSegment s;
  s.A = Eigen::MatrixXd::Identity(3, 3);
  s.B = Eigen::MatrixXd::Zero(3, 1);
  s.c = Eigen::VectorXd::Zero(3);
  s.Q = Eigen::MatrixXd::Zero(3, 3);
  const std::vector<DiscreteSegment> segs(4, s);
  const auto xs = propagate_mean(segs, Eigen::Vector3d(1, 2, 3),
                                 std::vector<Eigen::VectorXd>(4, Eigen::VectorXd::Ones(1)));
  for (const auto& x : xs) EXPECT_EQ(x, Eigen::Vector3d(1, 2, 3));
}

TEST(PropagateTest, CovarianceRecursions) {
  DiscreteSegment s;
  s.A = Eigen::MatrixXd::Identity(1, 1);
  s.B = Eigen::MatrixXd::Zero(1, 1);
  s.c = Eigen::VectorXd::Zero(1);
  s.Q = Eigen::MatrixXd::Identity(1, 1);
  const std::vector<DiscreteSegment> segs(10, s);
  const std::vector<Eigen::MatrixXd> zero_gain(10, Eigen::MatrixXd::Zero(1, 1));
  const auto P = propagate_covariance(segs, Eigen::MatrixXd::Zero(1, 1), zero_gain);
  for (int k = 0; k <= 10; ++k) EXPECT_DOUBLE_EQ(P[k](0, 0), k);

  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  std::vector<DiscreteSegment> rnd(5);
  std::vector<Eigen::MatrixXd> gains(5);
  for (auto& seg : rnd) {
    seg.A = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return nd(rng); });
    seg.B = Eigen::MatrixXd::NullaryExpr(4, 2, [&] { return nd(rng); });
    seg.c = Eigen::VectorXd::Zero(4);
    seg.Q = Eigen::MatrixXd::Zero(4, 4);
  }
  for (auto& K : gains) K = Eigen::MatrixXd::NullaryExpr(2, 4, [&] { return nd(rng); });
  const auto Pz = propagate_covariance(rnd, Eigen::MatrixXd::Zero(4, 4), gains);
  for (const auto& p : Pz) EXPECT_TRUE(p.isZero(0.0));
  const Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return nd(rng); });
  const auto Pr = propagate_covariance(rnd, R * R.transpose(), gains);
  for (const auto& p : Pr) {
    EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-13 * p.cwiseAbs().maxCoeff());
  }
  // zero gain reduces to the open-loop recursion
  const auto Po = propagate_covariance(
      rnd, R * R.transpose(), std::vector<Eigen::MatrixXd>(5, Eigen::MatrixXd::Zero(2, 4)));
  Eigen::MatrixXd expect = R * R.transpose();
  for (int k = 0; k < 5; ++k) expect = rnd[k].A * expect * rnd[k].A.transpose() + rnd[k].Q;
  EXPECT_LE((Po.back() - expect).norm(), 1e-10 * expect.norm());
}

}  // namespace
}  // namespace covsteer
