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
#include <string>

#include <gtest/gtest.h>

#include "covsteer/error.hpp"
#include "covsteer/initializer.hpp"
#include "covsteer/problem.hpp"
#include "test_models.hpp"

namespace covsteer {
namespace {

using testing_models::LinearModel;

// 1D double integrator with a fuel counter: x = [p, v, m], control [u, Gamma],
// p' = v, v' = u, m' = -Gamma.
LinearModel fuel_counting_integrator() {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(0, 1) = 1.0;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 2);
  B(1, 0) = 1.0;
  B(2, 1) = -1.0;
  return LinearModel(A, B, Eigen::Vector3d::Zero(), Eigen::MatrixXd::Zero(3, 1));
}

std::vector<double> uniform_times(double T, int N) {
  std::vector<double> t;
  for (int k = 0; k <= N; ++k) t.push_back(T * k / N);
  return t;
}

TEST(MinFuelTest, DoubleIntegratorBangOffBang) {
  // Rest-to-rest over distance D in time T with |u| <= a. The minimum-fuel
  // profile burns for t1 = (T - sqrt(T^2 - 4 D / a)) / 2 at each end, total
  // impulse 2 a t1. T = 10, a = 1, D = 16 gives t1 = 2, a multiple of the
  // segment length, so the zero-order-hold optimum equals the continuous one.
  const double T = 10.0, a = 1.0, D = 16.0;
  const double t1 = (T - std::sqrt(T * T - 4.0 * D / a)) / 2.0;
  ASSERT_NEAR(t1, 2.0, 1e-15);
  const LinearModel model = fuel_counting_integrator();
  MinFuelProblem prob;
  prob.model = &model;
  prob.initial_state = Eigen::Vector3d(0.0, 0.0, 10.0);
  prob.final_target = Eigen::Vector2d(D, 0.0);
  prob.times = uniform_times(T, 20);
  prob.u_max = a;
  const MinFuelResult res = solve_min_fuel(prob);
  ASSERT_TRUE(res.converged);
  EXPECT_NEAR(res.cost, 2.0 * a * t1, 1e-3 * 2.0 * a * t1);
  EXPECT_LE(res.max_defect, 1e-9);
  for (int k = 0; k < 20; ++k) {
    const double u = res.trajectory.controls[k](0);
    if (k < 4) {
      EXPECT_NEAR(u, a, 1e-4) << "segment " << k;
    } else if (k >= 16) {
      EXPECT_NEAR(u, -a, 1e-4) << "segment " << k;
    } else {
      EXPECT_NEAR(u, 0.0, 1e-4) << "segment " << k;
    }
  }
  EXPECT_NEAR(res.trajectory.nodes.back()(2), 10.0 - 2.0 * a * t1, 1e-3);
}

TEST(MinFuelTest, CoastTransferNeedsNoThrust) {
  // Target is the unforced two-body state after 1.3 time units from a
  // circular orbit in canonical units; the optimum is to coast.
  PhysicalParams params;
  params.mu = 1.0;
  params.isp = 10.0;
  params.g0 = 1.0;
  params.u_max = 0.05;
  params.gamma = 0.0;
  RelaxedThrustModel model(2, params);
  Eigen::VectorXd x0(5);
  x0 << 1.0, 0.0, 0.0, 1.0, 1.0;
  const double T = 1.3;
  const Eigen::VectorXd coast =
      propagate_nonlinear(model, x0, Eigen::Vector3d::Zero(), 0.0, T, 4000);
  MinFuelProblem prob;
  prob.model = &model;
  prob.initial_state = x0;
  prob.final_target = coast.head(4);
  prob.times = uniform_times(T, 10);
  prob.u_max = params.u_max;
  const MinFuelResult res = solve_min_fuel(prob);
  ASSERT_TRUE(res.converged);
  EXPECT_LE(res.cost, 1e-6);
  for (const auto& u : res.trajectory.controls) EXPECT_LE(u.head(2).norm(), 1e-5);
}

TEST(MinFuelTest, RejectsBadInput) {
  const LinearModel model = fuel_counting_integrator();
  MinFuelProblem prob;
  prob.initial_state = Eigen::Vector3d(0.0, 0.0, 1.0);
  prob.final_target = Eigen::Vector2d(1.0, 0.0);
  prob.times = uniform_times(1.0, 4);
  prob.u_max = 1.0;
  EXPECT_THROW(solve_min_fuel(prob), Error);
  prob.model = &model;
  prob.u_max = 0.0;
  EXPECT_THROW(solve_min_fuel(prob), Error);
  prob.u_max = 1.0;
  prob.guess_nodes.assign(3, Eigen::Vector3d(0.0, 0.0, 1.0));
  EXPECT_THROW(solve_min_fuel(prob), Error);
}

TEST(InterpolatedGuessTest, MatchesBoundaries) {
  Eigen::VectorXd x0(7), xf(6);
  x0 << 1.0, 0.2, 0.01, -0.1, 0.9, 0.0, 1.0;
  xf << -1.2, 0.8, 0.05, -0.5, -0.7, 0.02;
  const auto nodes = interpolated_guess(x0, xf, 12, 0.8);
  ASSERT_EQ(nodes.size(), 13u);
  EXPECT_LE((nodes.front() - x0).norm(), 1e-14);
  EXPECT_LE((nodes.back().head(6) - xf).norm(), 1e-14);
  EXPECT_NEAR(nodes.back()(6), 0.8, 1e-15);
  // The sweep is counter-clockwise: polar angle increases monotonically.
  double prev = std::atan2(nodes[0](1), nodes[0](0));
  double swept = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double th = std::atan2(nodes[k](1), nodes[k](0));
    double step = th - prev;
    if (step < 0.0) step += 2.0 * M_PI;
    EXPECT_GT(step, 0.0);
    EXPECT_LT(step, M_PI);
    swept += step;
    prev = th;
  }
  const double expected =
      std::atan2(xf(1), xf(0)) - std::atan2(x0(1), x0(0)) + 2.0 * M_PI;
  EXPECT_NEAR(swept, std::fmod(expected, 2.0 * M_PI), 1e-12);
}

ReferenceTrajectory small_reference() {
  ReferenceTrajectory ref;
  ref.times = {0.0, 1.5, 3.25};
  ref.nodes = {Eigen::Vector3d(1.0 / 3.0, -2.0, 5.0), Eigen::Vector3d(1e-300, 7.0, 4.5),
               Eigen::Vector3d(-1e17, 0.1, 4.0)};
  ref.controls = {Eigen::Vector2d(0.1, -0.2), Eigen::Vector2d(M_PI, 0.0)};
  return ref;
}

TEST(ReferenceIoTest, RoundTripIsExact) {
  const ReferenceTrajectory ref = small_reference();
  const ReferenceTrajectory back = parse_reference(format_reference(ref));
  ASSERT_EQ(back.segments(), 2);
  for (int k = 0; k <= 2; ++k) {
    EXPECT_EQ(back.times[k], ref.times[k]);
    EXPECT_EQ(back.nodes[k], ref.nodes[k]);
  }
  for (int k = 0; k < 2; ++k) EXPECT_EQ(back.controls[k], ref.controls[k]);
}

TEST(ReferenceIoTest, FileRoundTrip) {
  const std::string path = ::testing::TempDir() + "covsteer_reference_test.txt";
  write_reference(small_reference(), path);
  const ReferenceTrajectory back = load_reference(path);
  EXPECT_EQ(back.nodes[1], small_reference().nodes[1]);
  std::remove(path.c_str());
  EXPECT_THROW(load_reference(path), Error);
}

std::string parse_error(const std::string& text) {
  try {
    parse_reference(text, "ref.txt");
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kParse);
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return {};
}

TEST(ReferenceIoTest, ErrorsNameTheLine) {
  const std::string head = "covsteer-reference n_x 1 n_u 1 N 2 units x\ntime x0 u0\n";
  EXPECT_NE(parse_error(head + "0 1 0\n2 1 0\n1 1 0\n").find("ref.txt:5:"),
            std::string::npos);
  EXPECT_NE(parse_error(head + "0 1 0\n1 1\n2 1 0\n").find("ref.txt:4:"), std::string::npos);
  EXPECT_NE(parse_error(head + "0 1 0\n1 abc 0\n2 1 0\n").find("'abc'"), std::string::npos);
  EXPECT_NE(parse_error(head + "0 1 0\n").find("ref.txt:4:"), std::string::npos);
  EXPECT_NE(parse_error("covsteer-ref n_x 1\n").find("ref.txt:1:"), std::string::npos);
  EXPECT_NE(parse_error(head + "0 1 0\n1 -1 0\n2 1 0\n").find("mass"), std::string::npos);
}

class EarthMarsReferenceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scenario_ = new Scenario(preset("earth-mars-2d"));
    reference_ = new ReferenceTrajectory(solve_reference(*scenario_));
  }
  static void TearDownTestSuite() {
    delete scenario_;
    delete reference_;
  }
  static Scenario* scenario_;
  static ReferenceTrajectory* reference_;
};
Scenario* EarthMarsReferenceTest::scenario_ = nullptr;
ReferenceTrajectory* EarthMarsReferenceTest::reference_ = nullptr;

TEST_F(EarthMarsReferenceTest, HitsTheTarget) {
  const auto& ref = *reference_;
  ASSERT_EQ(ref.segments(), scenario_->segments);
  EXPECT_EQ(ref.nodes.front(), scenario_->initial_mean);
  const Eigen::VectorXd miss = ref.nodes.back().head(4) - scenario_->final_mean;
  EXPECT_LE(miss.head(2).norm(), 1e-6 * scenario_->final_mean.head(2).norm());
  EXPECT_LE(miss.tail(2).norm(), 1e-6 * scenario_->final_mean.tail(2).norm());
}

TEST_F(EarthMarsReferenceTest, NodesAreSelfConsistent) {
  const auto& ref = *reference_;
  MassCoupledModel model(2, scenario_->params);
  for (int k = 0; k < ref.segments(); ++k) {
    const Eigen::VectorXd end = propagate_nonlinear(model, ref.nodes[k], ref.controls[k],
                                                    ref.times[k], ref.times[k + 1], 32);
    const Eigen::VectorXd gap = (end - ref.nodes[k + 1]).cwiseQuotient(
        ref.nodes[k + 1].cwiseAbs().cwiseMax(1.0));
    EXPECT_LE(gap.lpNorm<Eigen::Infinity>(), 1e-8) << "segment " << k;
  }
}

TEST_F(EarthMarsReferenceTest, MassBookkeeping) {
  // With zero-order-hold thrust the mass rate is constant on each segment.
  const auto& ref = *reference_;
  const double c = scenario_->params.exhaust_speed();
  double m = ref.nodes.front()(4);
  for (int k = 0; k < ref.segments(); ++k) {
    EXPECT_LE(ref.controls[k].norm(), scenario_->params.u_max * (1.0 + 1e-7));
    m -= ref.controls[k].norm() * (ref.times[k + 1] - ref.times[k]) / c;
    EXPECT_NEAR(ref.nodes[k + 1](4), m, 1e-8 * m) << "node " << k + 1;
  }
}

TEST_F(EarthMarsReferenceTest, ThreeThrustArcs) {
  const auto& ref = *reference_;
  int arcs = 0;
  bool on = false;
  for (const auto& u : ref.controls) {
    const bool thrusting = u.norm() > 0.1 * scenario_->params.u_max;
    if (thrusting && !on) ++arcs;
    on = thrusting;
  }
  EXPECT_EQ(arcs, 3);
  // Final mass well within the physically possible range.
  EXPECT_GT(ref.nodes.back()(4), 0.7 * scenario_->initial_mean(4));
  EXPECT_LT(ref.nodes.back()(4), scenario_->initial_mean(4));
}

}  // namespace
}  // namespace covsteer
