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

#ifndef COVSTEER_CONIC_HPP
#define COVSTEER_CONIC_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace covsteer {

/// Sparse affine function of the decision vector: sum(coef * x[var]) + constant.
struct AffineExpr {
  struct Term {
    int var;
    double coef;
  };
  std::vector<Term> terms;
  double constant = 0.0;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}

  static AffineExpr variable(int var, double coef = 1.0) {
    AffineExpr e;
    e.terms.push_back({var, coef});
    return e;
  }
  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  AffineExpr& add(const AffineExpr& other, double scale = 1.0);
  AffineExpr& shift(double c) {
    constant += c;
    return *this;
  }
};

enum class ConeKind { kNonnegative, kSecondOrder, kPsd };

/// One cone membership constraint: rows [first_row, first_row + dim) of the
/// cone slack vector. For PSD cones dim = side (side + 1) / 2.
struct ConeBlock {
  ConeKind kind;
  int first_row;
  int dim;
  int side;
};

using ConstraintId = int;

// Packed symmetric storage: lower triangle, column-major, off-diagonal entries
// multiplied by sqrt(2) so that <pack(S), pack(T)> = tr(S T).
int svec_size(int side);
int svec_index(int i, int j, int side);
Eigen::VectorXd svec_pack(const Eigen::MatrixXd& S);
Eigen::MatrixXd svec_unpack(const Eigen::Ref<const Eigen::VectorXd>& v, int side);

/// Standard-form conic program
///
///   minimize    c^T x
///   subject to  E x = f
///               M x + g in K = K_1 x ... x K_p
///
/// where each K_i is a nonnegative orthant, a second-order cone
/// {(t, z) : |z| <= t} or a PSD cone stored in svec form.
class ConicProgram {
 public:
  ConicProgram() = default;
  explicit ConicProgram(int num_variables) { add_variables(num_variables); }

  /// Appends `count` variables and returns the index of the first one.
  int add_variables(int count);
  int num_variables() const { return num_variables_; }

  void add_cost(int var, double coef);
  void add_cost(const AffineExpr& e);
  const std::vector<double>& cost() const { return cost_; }
  double cost_offset() const { return cost_offset_; }

  /// lhs(x) == rhs. Returns the equality row index.
  ConstraintId add_equality(const AffineExpr& lhs, double rhs = 0.0);
  /// Adds one row per expression; returns the first row index.
  ConstraintId add_equality(std::span<const AffineExpr> rows,
                            std::span<const double> rhs);

  ConstraintId add_nonnegative(const AffineExpr& e);
  /// entries[0] >= |entries[1..]|.
  ConstraintId add_soc(std::span<const AffineExpr> entries);
  /// `lower` holds the side (side+1)/2 lower-triangular elements in
  /// column-major order, unscaled; the sqrt(2) packing is applied here.
  ConstraintId add_psd(int side, std::span<const AffineExpr> lower);

  int num_equalities() const { return static_cast<int>(eq_rhs_.size()); }
  int num_cone_rows() const { return static_cast<int>(cone_offset_.size()); }
  const std::vector<ConeBlock>& cones() const { return cones_; }

  Eigen::SparseMatrix<double> equality_matrix() const;
  Eigen::VectorXd equality_rhs() const;
  /// M and g of the cone map M x + g.
  Eigen::SparseMatrix<double> cone_matrix() const;
  Eigen::VectorXd cone_offset() const;

  /// Degree of the cone (barrier parameter): one per orthant row and SOC,
  /// `side` per PSD block.
  int cone_degree() const;

  /// Text dump: header with sizes and cone list, then one line per nonzero
  /// "<section> <row> <col> <value>" for sections eq, cone, cost, rhs, offset.
  void dump(std::ostream& os) const;

 private:
  void check_expr(const AffineExpr& e) const;
  int push_cone_row(const AffineExpr& e, double scale);

  int num_variables_ = 0;
  std::vector<double> cost_;
  double cost_offset_ = 0.0;
  std::vector<Eigen::Triplet<double>> eq_;
  std::vector<double> eq_rhs_;
  std::vector<Eigen::Triplet<double>> cone_;
  std::vector<double> cone_offset_;
  std::vector<ConeBlock> cones_;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kMaxIterations,
  kNumericalFailure,
  // Stalled, but an iterate met the tolerances relaxed by inaccurate_factor.
  kInaccurate,
};

/// Optimal or optimal to reduced accuracy.
inline bool usable(SolveStatus s) {
  return s == SolveStatus::kOptimal || s == SolveStatus::kInaccurate;
}

std::string to_string(SolveStatus status);

struct SolverSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iterations = 150;
  double step_fraction = 0.99;
  double static_regularization = 1e-7;
  int refinement_steps = 8;
  double inaccurate_factor = 100.0;
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;  // primal values
  Eigen::VectorXd y;  // equality multipliers (diagnostic)
  Eigen::VectorXd z;  // cone multipliers (diagnostic)
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

/// Homogeneous self-dual primal-dual interior-point method with
/// Nesterov-Todd scaling and Mehrotra correction. Never throws on
/// ill-conditioned data; failures are reported through the status.
ConicSolution solve(const ConicProgram& program,
                    const SolverSettings& settings = {});

/// Largest violation of cone membership of M x + g (0 when inside), and
/// the equality residual |E x - f|_inf.
double cone_violation(const ConicProgram& program, const Eigen::VectorXd& x);
double equality_residual(const ConicProgram& program, const Eigen::VectorXd& x);

}  // namespace covsteer

#endif  // COVSTEER_CONIC_HPP
