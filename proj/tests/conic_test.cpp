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

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cones.hpp"
#include "ldl.hpp"
#include "covsteer/conic.hpp"

namespace covsteer {
namespace {

AffineExpr var(int i, double c = 1.0) { return AffineExpr::variable(i, c); }

TEST(SvecTest, PackUnpackIsIdentityAndIsometry) {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 6;
    Eigen::MatrixXd S(n, n), T(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S(i, j) = nd(rng);
        T(i, j) = nd(rng);
      }
    S = (S + S.transpose()).eval();
    T = (T + T.transpose()).eval();
    EXPECT_LE((svec_unpack(svec_pack(S), n) - S).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR((S.transpose() * T).trace(), svec_pack(S).dot(svec_pack(T)), 1e-12);
  }
}

TEST(SvecTest, IndexMatchesColumnMajorLowerOrder) {
  EXPECT_EQ(svec_index(0, 0, 3), 0);
  EXPECT_EQ(svec_index(2, 0, 3), 2);
  EXPECT_EQ(svec_index(1, 1, 3), 3);
  EXPECT_EQ(svec_index(2, 1, 3), 4);
  EXPECT_EQ(svec_index(1, 2, 3), 4);
  EXPECT_EQ(svec_index(2, 2, 3), 5);
}

TEST(ConicProgramTest, RejectsOutOfRangeVariable) {
  ConicProgram prog(1);
  EXPECT_THROW(prog.add_equality(var(1), 0.0), std::exception);
  EXPECT_THROW(prog.add_soc(std::vector<AffineExpr>{}), std::exception);
  EXPECT_THROW(prog.add_psd(0, std::vector<AffineExpr>{}), std::exception);
}

TEST(ConicSolveTest, SingleEqualityPinsVariable) {
  ConicProgram prog(1);
  prog.add_equality(var(0), 3.0);
  prog.add_cost(0, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 3.0, 1e-8);
}

TEST(ConicSolveTest, ContradictoryEqualitiesAreInfeasible) {
  ConicProgram prog(1);
  prog.add_equality(var(0), 0.0);
  prog.add_equality(var(0), 1.0);
  prog.add_cost(0, 1.0);
  EXPECT_EQ(solve(prog).status, SolveStatus::kInfeasible);
}

TEST(ConicSolveTest, LinearProgramLowerBound) {
  ConicProgram prog(1);
  prog.add_nonnegative(AffineExpr(-2.0).add(0, 1.0));
  prog.add_cost(0, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-7);
  EXPECT_NEAR(sol.objective, 2.0, 1e-7);
}

TEST(ConicSolveTest, UnboundedBelow) {
  ConicProgram prog(1);
  prog.add_nonnegative(var(0));
  prog.add_cost(0, -1.0);
  EXPECT_EQ(solve(prog).status, SolveStatus::kUnbounded);
}

TEST(ConicSolveTest, SocEuclideanNorm) {
  // variables t, z1, z2 with z fixed at (3, 4)
  ConicProgram prog(3);
  prog.add_equality(var(1), 3.0);
  prog.add_equality(var(2), 4.0);
  const std::vector<AffineExpr> cone{var(0), var(1), var(2)};
  prog.add_soc(cone);
  prog.add_cost(0, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 5.0, 1e-7);
  EXPECT_LE(cone_violation(prog, sol.x), 1e-7);
}

TEST(ConicSolveTest, SocAtOrigin) {
  ConicProgram prog(3);
  prog.add_equality(var(1), 0.0);
  prog.add_equality(var(2), 0.0);
  prog.add_soc(std::vector<AffineExpr>{var(0), var(1), var(2)});
  prog.add_cost(0, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 0.0, 1e-7);
}

TEST(ConicSolveTest, SocInfeasibleWhenBoundTooSmall) {
  ConicProgram prog(3);
  prog.add_equality(var(1), 1.0);
  prog.add_equality(var(2), 1.0);
  prog.add_nonnegative(AffineExpr(1.0).add(0, -1.0));  // t <= 1
  prog.add_soc(std::vector<AffineExpr>{var(0), var(1), var(2)});
  prog.add_cost(0, 1.0);
  EXPECT_EQ(solve(prog).status, SolveStatus::kInfeasible);
}

TEST(ConicSolveTest, ScalarPsdBlock) {
  ConicProgram prog(1);
  prog.add_psd(1, std::vector<AffineExpr>{var(0)});
  prog.add_cost(0, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 0.0, 1e-7);
}

TEST(ConicSolveTest, TwoByTwoDeterminantBound) {
  ConicProgram prog(1);
  prog.add_psd(2, std::vector<AffineExpr>{AffineExpr(1.0), var(0), AffineExpr(1.0)});
  prog.add_cost(0, -1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-6);
}

TEST(ConicSolveTest, TraceMinimizationAboveIdentity) {
  // X = [[x0, x1], [x1, x2]] with X - I PSD, minimize tr X.
  ConicProgram prog(3);
  prog.add_psd(2, std::vector<AffineExpr>{AffineExpr(-1.0).add(0, 1.0), var(1),
                                          AffineExpr(-1.0).add(2, 1.0)});
  prog.add_cost(0, 1.0);
  prog.add_cost(2, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 2.0, 1e-7);
  EXPECT_LE(cone_violation(prog, sol.x), 1e-7);
}

TEST(ConicSolveTest, ShiftedBlockInfeasibleOnlyWhenVariablesCannotLift) {
  // diag(x0, x1) - I PSD.
  auto build = [](double cap) {
    ConicProgram prog(2);
    prog.add_psd(2, std::vector<AffineExpr>{AffineExpr(-1.0).add(0, 1.0),
                                            AffineExpr(0.0),
                                            AffineExpr(-1.0).add(1, 1.0)});
    prog.add_nonnegative(AffineExpr(cap).add(0, -1.0));
    prog.add_nonnegative(AffineExpr(cap).add(1, -1.0));
    prog.add_cost(0, 1.0);
    prog.add_cost(1, 1.0);
    return prog;
  };
  EXPECT_EQ(solve(build(0.5)).status, SolveStatus::kInfeasible);
  const auto sol = solve(build(3.0));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 2.0, 1e-6);
}

// min |M x - v| through an SOC epigraph versus the normal equations.
TEST(ConicSolveTest, LeastSquaresMatchesNormalEquations) {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  const int rows = 12, cols = 5;
  Eigen::MatrixXd M(rows, cols);
  Eigen::VectorXd v(rows);
  for (int i = 0; i < rows; ++i) {
    v(i) = nd(rng);
    for (int j = 0; j < cols; ++j) M(i, j) = nd(rng);
  }
  const Eigen::VectorXd expected = M.colPivHouseholderQr().solve(v);

  ConicProgram prog(cols + 1);
  std::vector<AffineExpr> cone{var(cols)};
  for (int i = 0; i < rows; ++i) {
    AffineExpr e(-v(i));
    for (int j = 0; j < cols; ++j) e.add(j, M(i, j));
    cone.push_back(e);
  }
  prog.add_soc(cone);
  prog.add_cost(cols, 1.0);
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_LE((sol.x.head(cols) - expected).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(sol.x(cols), (M * expected - v).norm(), 1e-7);
}

// Max-cut style SDP relaxation on a 4-cycle: max sum w_ij (1 - X_ij)/4,
// diag(X) = 1, X PSD. Optimum is 4 (X = alternating signs).
TEST(ConicSolveTest, MaxCutRelaxationOfEvenCycle) {
  const int n = 4;
  ConicProgram prog(svec_size(n));
  std::vector<AffineExpr> lower;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) lower.push_back(var(svec_index(i, j, n)));
  prog.add_psd(n, lower);
  for (int i = 0; i < n; ++i) prog.add_equality(var(svec_index(i, i, n)), 1.0);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    prog.add_cost(AffineExpr(-0.25).add(svec_index(i, j, n), 0.25));
  }
  const auto sol = solve(prog);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -4.0 * 0.25 * 2.0 + 0.0, 1e-6);
}

TEST(ConicSolveTest, RepeatedSolvesAgree) {
  ConicProgram prog(3);
  prog.add_psd(2, std::vector<AffineExpr>{AffineExpr(-1.0).add(0, 1.0), var(1),
                                          AffineExpr(-2.0).add(2, 1.0)});
  prog.add_soc(std::vector<AffineExpr>{AffineExpr(3.0), var(0), var(2)});
  prog.add_cost(0, 1.0);
  prog.add_cost(1, 0.3);
  prog.add_cost(2, 2.0);
  const auto a = solve(prog);
  const auto b = solve(prog);
  ASSERT_EQ(a.status, SolveStatus::kOptimal);
  EXPECT_LE(std::abs(a.objective - b.objective), 1e-8);
}

TEST(ConeScalingTest, NesterovToddPointIsConsistent) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  std::vector<ConeBlock> blocks{{ConeKind::kNonnegative, 0, 1, 0},
                                {ConeKind::kSecondOrder, 1, 4, 0},
                                {ConeKind::kPsd, 5, 6, 3}};
  detail::ConeSet cones(blocks, 11);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd s(11), z(11);
    for (int i = 0; i < 11; ++i) {
      s(i) = ud(rng);
      z(i) = ud(rng);
    }
    s(0) = std::abs(s(0)) + 0.1;
    z(0) = std::abs(z(0)) + 0.1;
    s(1) = s.segment(2, 3).norm() + 0.5;
    z(1) = z.segment(2, 3).norm() + 0.2;
    Eigen::MatrixXd Sr = svec_unpack(s.segment(5, 6), 3);
    Eigen::MatrixXd Zr = svec_unpack(z.segment(5, 6), 3);
    s.segment(5, 6) = svec_pack(Sr * Sr.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3));
    z.segment(5, 6) = svec_pack(Zr * Zr.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3));
    ASSERT_TRUE(cones.update_scaling(s, z));
    // W z = lambda and W^T lambda = s.
    EXPECT_LE((cones.apply_w(z) - cones.lambda()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((cones.apply_wt(cones.lambda()) - s).cwiseAbs().maxCoeff(), 1e-10);
    // (W^T W)^{-1} s = z.
    EXPECT_LE((cones.apply_scaling_inverse(s) - z).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((cones.scaling_matrix(true) * s - z).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((cones.scaling_matrix(false) * z - s).cwiseAbs().maxCoeff(), 1e-9);
    // lambda o (lambda / r) = r
    Eigen::VectorXd r = Eigen::VectorXd::NullaryExpr(11, [&] { return ud(rng); });
    EXPECT_LE((cones.jordan(cones.lambda(), cones.lambda_divide(r)) - r)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
  }
}

TEST(QuasiDefiniteLdlTest, MatchesDenseSolve) {
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  const int n = 7, p = 4;
  Eigen::MatrixXd M(n, n), A(p, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = (j % 3 == i % 3) ? nd(rng) : 0.0;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + p, n + p);
  K.topLeftCorner(n, n) = M * M.transpose() + Eigen::MatrixXd::Identity(n, n);
  K.topRightCorner(n, p) = A.transpose();
  K.bottomLeftCorner(p, n) = A;
  K.bottomRightCorner(p, p) = -0.5 * Eigen::MatrixXd::Identity(p, p);
  std::vector<int> signs(n + p, -1);
  std::fill(signs.begin(), signs.begin() + n, 1);
  const Eigen::SparseMatrix<double> Ks = K.sparseView();
  detail::QuasiDefiniteLdl ldl;
  ldl.analyze(Ks, signs);
  ASSERT_TRUE(ldl.factorize(Ks));
  EXPECT_EQ(ldl.regularized_pivots(), 0);
  const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(n + p, [&] { return nd(rng); });
  EXPECT_LE((ldl.solve(b) - K.fullPivLu().solve(b)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(QuasiDefiniteLdlTest, RegularizesZeroPivot) {
  // [0 1 1; 1 0 0; 1 0 0] has a zero pivot in every ordering.
  Eigen::MatrixXd K(3, 3);
  K << 0, 1, 1, 1, 0, 0, 1, 0, 0;
  const Eigen::SparseMatrix<double> Ks = K.sparseView(0.0, -1.0);
  detail::QuasiDefiniteLdl ldl;
  ldl.analyze(Ks, {1, -1, -1});
  ASSERT_TRUE(ldl.factorize(Ks));
  EXPECT_GT(ldl.regularized_pivots(), 0);
  EXPECT_TRUE(ldl.solve(Eigen::Vector3d(1, 2, 3)).allFinite());
}

}  // namespace
}  // namespace covsteer
