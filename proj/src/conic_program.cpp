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
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>

#include "covsteer/conic.hpp"
#include "covsteer/error.hpp"

namespace covsteer {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double scale) {
  for (const auto& t : other.terms) add(t.var, scale * t.coef);
  constant += scale * other.constant;
  return *this;
}

int svec_size(int side) { return side * (side + 1) / 2; }

int svec_index(int i, int j, int side) {
  if (i < j) std::swap(i, j);
  // Column j starts after columns 0..j-1, which hold side, side-1, ... entries.
  return j * side - j * (j - 1) / 2 + (i - j);
}

Eigen::VectorXd svec_pack(const Eigen::MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    v(k++) = S(j, j);
    for (int i = j + 1; i < n; ++i) v(k++) = kSqrt2 * S(i, j);
  }
  return v;
}

Eigen::MatrixXd svec_unpack(const Eigen::Ref<const Eigen::VectorXd>& v,
                            int side) {
  Eigen::MatrixXd S(side, side);
  int k = 0;
  for (int j = 0; j < side; ++j) {
    S(j, j) = v(k++);
    for (int i = j + 1; i < side; ++i) {
      S(i, j) = S(j, i) = v(k++) / kSqrt2;
    }
  }
  return S;
}

int ConicProgram::add_variables(int count) {
  if (count < 0) {
    throw Error(ErrorCategory::kInvalidArgument, "negative variable count");
  }
  const int first = num_variables_;
  num_variables_ += count;
  cost_.resize(num_variables_, 0.0);
  return first;
}

void ConicProgram::check_expr(const AffineExpr& e) const {
  for (const auto& t : e.terms) {
    if (t.var < 0 || t.var >= num_variables_) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "variable index " + std::to_string(t.var) +
                      " out of range (" + std::to_string(num_variables_) +
                      " variables)");
    }
    if (!std::isfinite(t.coef)) {
      throw Error(ErrorCategory::kInvalidArgument, "non-finite coefficient");
    }
  }
  if (!std::isfinite(e.constant)) {
    throw Error(ErrorCategory::kInvalidArgument, "non-finite constant");
  }
}

void ConicProgram::add_cost(int var, double coef) {
  check_expr(AffineExpr::variable(var, coef));
  cost_[var] += coef;
}

void ConicProgram::add_cost(const AffineExpr& e) {
  check_expr(e);
  for (const auto& t : e.terms) cost_[t.var] += t.coef;
  cost_offset_ += e.constant;
}

ConstraintId ConicProgram::add_equality(const AffineExpr& lhs, double rhs) {
  check_expr(lhs);
  const int row = static_cast<int>(eq_rhs_.size());
  for (const auto& t : lhs.terms) eq_.emplace_back(row, t.var, t.coef);
  eq_rhs_.push_back(rhs - lhs.constant);
  return row;
}

ConstraintId ConicProgram::add_equality(std::span<const AffineExpr> rows,
                                        std::span<const double> rhs) {
  if (rows.size() != rhs.size()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "equality rows and rhs differ in length");
  }
  const int first = num_equalities();
  for (std::size_t i = 0; i < rows.size(); ++i) add_equality(rows[i], rhs[i]);
  return first;
}

int ConicProgram::push_cone_row(const AffineExpr& e, double scale) {
  const int row = static_cast<int>(cone_offset_.size());
  for (const auto& t : e.terms) cone_.emplace_back(row, t.var, scale * t.coef);
  cone_offset_.push_back(scale * e.constant);
  return row;
}

ConstraintId ConicProgram::add_nonnegative(const AffineExpr& e) {
  check_expr(e);
  const int row = push_cone_row(e, 1.0);
  cones_.push_back({ConeKind::kNonnegative, row, 1, 0});
  return static_cast<int>(cones_.size()) - 1;
}

ConstraintId ConicProgram::add_soc(std::span<const AffineExpr> entries) {
  if (entries.empty()) {
    throw Error(ErrorCategory::kInvalidArgument, "second-order cone of dimension 0");
  }
  for (const auto& e : entries) check_expr(e);
  const int first = num_cone_rows();
  for (const auto& e : entries) push_cone_row(e, 1.0);
  cones_.push_back(
      {ConeKind::kSecondOrder, first, static_cast<int>(entries.size()), 0});
  return static_cast<int>(cones_.size()) - 1;
}

ConstraintId ConicProgram::add_psd(int side, std::span<const AffineExpr> lower) {
  if (side < 1) {
    throw Error(ErrorCategory::kInvalidArgument, "PSD block side must be >= 1");
  }
  if (static_cast<int>(lower.size()) != svec_size(side)) {
    throw Error(ErrorCategory::kInvalidArgument,
                "PSD block expects side(side+1)/2 entries");
  }
  for (const auto& e : lower) check_expr(e);
  const int first = num_cone_rows();
  int k = 0;
  for (int j = 0; j < side; ++j) {
    for (int i = j; i < side; ++i) {
      push_cone_row(lower[k++], i == j ? 1.0 : kSqrt2);
    }
  }
  cones_.push_back({ConeKind::kPsd, first, svec_size(side), side});
  return static_cast<int>(cones_.size()) - 1;
}

Eigen::SparseMatrix<double> ConicProgram::equality_matrix() const {
  Eigen::SparseMatrix<double> E(num_equalities(), num_variables_);
  E.setFromTriplets(eq_.begin(), eq_.end());
  return E;
}

Eigen::VectorXd ConicProgram::equality_rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(),
                                           static_cast<Eigen::Index>(eq_rhs_.size()));
}

Eigen::SparseMatrix<double> ConicProgram::cone_matrix() const {
  Eigen::SparseMatrix<double> M(num_cone_rows(), num_variables_);
  M.setFromTriplets(cone_.begin(), cone_.end());
  return M;
}

Eigen::VectorXd ConicProgram::cone_offset() const {
  return Eigen::Map<const Eigen::VectorXd>(
      cone_offset_.data(), static_cast<Eigen::Index>(cone_offset_.size()));
}

int ConicProgram::cone_degree() const {
  int degree = 0;
  for (const auto& c : cones_) degree += c.kind == ConeKind::kPsd ? c.side : 1;
  return degree;
}

void ConicProgram::dump(std::ostream& os) const {
  os << "# conic program\n";
  os << "variables " << num_variables_ << "\n";
  os << "equalities " << num_equalities() << "\n";
  os << "cone_rows " << num_cone_rows() << "\n";
  os << "cones " << cones_.size() << "\n";
  for (std::size_t i = 0; i < cones_.size(); ++i) {
    const auto& c = cones_[i];
    const char* kind = c.kind == ConeKind::kNonnegative ? "nonneg"
                       : c.kind == ConeKind::kSecondOrder ? "soc"
                                                          : "psd";
    os << "cone " << i << " " << kind << " " << c.first_row << " " << c.dim;
    if (c.kind == ConeKind::kPsd) os << " " << c.side;
    os << "\n";
  }
  os.precision(17);
  for (int j = 0; j < num_variables_; ++j) {
    if (cost_[j] != 0.0) os << "cost 0 " << j << " " << cost_[j] << "\n";
  }
  for (const auto& t : eq_) {
    os << "eq " << t.row() << " " << t.col() << " " << t.value() << "\n";
  }
  for (std::size_t i = 0; i < eq_rhs_.size(); ++i) {
    if (eq_rhs_[i] != 0.0) os << "rhs " << i << " 0 " << eq_rhs_[i] << "\n";
  }
  for (const auto& t : cone_) {
    os << "cone " << t.row() << " " << t.col() << " " << t.value() << "\n";
  }
  for (std::size_t i = 0; i < cone_offset_.size(); ++i) {
    if (cone_offset_[i] != 0.0) {
      os << "offset " << i << " 0 " << cone_offset_[i] << "\n";
    }
  }
}

double cone_violation(const ConicProgram& program, const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = program.cone_matrix() * x + program.cone_offset();
  double worst = 0.0;
  for (const auto& c : program.cones()) {
    const auto block = s.segment(c.first_row, c.dim);
    double v = 0.0;
    switch (c.kind) {
      case ConeKind::kNonnegative:
        v = -block(0);
        break;
      case ConeKind::kSecondOrder:
        v = block.tail(c.dim - 1).norm() - block(0);
        break;
      case ConeKind::kPsd: {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
            svec_unpack(block, c.side), Eigen::EigenvaluesOnly);
        v = -eig.eigenvalues().minCoeff();
        break;
      }
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double equality_residual(const ConicProgram& program, const Eigen::VectorXd& x) {
  if (program.num_equalities() == 0) return 0.0;
  return (program.equality_matrix() * x - program.equality_rhs())
      .cwiseAbs()
      .maxCoeff();
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
    case SolveStatus::kInaccurate: return "inaccurate";
  }
  return "unknown";
}

}  // namespace covsteer
