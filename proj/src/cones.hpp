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

// Cone algebra used by the interior-point solver: Nesterov-Todd scalings,
// Jordan products and step lengths for products of nonnegative orthants,
// second-order cones and PSD cones in svec form.
#ifndef COVSTEER_SRC_CONES_HPP
#define COVSTEER_SRC_CONES_HPP

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "covsteer/conic.hpp"

namespace covsteer::detail {

class ConeSet {
 public:
  ConeSet(std::vector<ConeBlock> blocks, int rows);

  int rows() const { return rows_; }
  int degree() const { return degree_; }
  Eigen::VectorXd identity() const;

  /// Smallest t such that x + t e is on the cone boundary, negated:
  /// positive when x is outside, negative when strictly inside.
  double max_violation(const Eigen::VectorXd& x) const;

  /// Computes the NT scaling W with W z = W^{-T} s = lambda.
  /// Returns false if s or z is not strictly interior.
  bool update_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z);

  const Eigen::VectorXd& lambda() const { return lambda_; }

  Eigen::VectorXd apply_w(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_wt(const Eigen::VectorXd& v) const;
  /// (W^T W)^{-1} v.
  Eigen::VectorXd apply_scaling_inverse(const Eigen::VectorXd& v) const;
  /// Block-diagonal W^T W, or its inverse, as a sparse matrix.
  Eigen::SparseMatrix<double> scaling_matrix(bool inverse) const;

  /// Jordan product u o v.
  Eigen::VectorXd jordan(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  /// x with lambda o x = r.
  Eigen::VectorXd lambda_divide(const Eigen::VectorXd& r) const;
  /// Largest alpha with lambda + alpha d in the cone (infinity if unbounded).
  double max_step(const Eigen::VectorXd& d) const;

 private:
  struct Scaling {
    // nonnegative: w = sqrt(s/z)
    Eigen::VectorXd w;
    // second-order: W = beta (2 v v^T - J)
    double beta = 1.0;
    Eigen::VectorXd v;
    // PSD: W(Z) = R^T Z R, W^{-T}(S) = R^{-1} S R^{-T}
    Eigen::MatrixXd R;
    Eigen::MatrixXd Rinv;
  };

  std::vector<ConeBlock> blocks_;
  int rows_;
  int degree_ = 0;
  std::vector<Scaling> scaling_;
  Eigen::VectorXd lambda_;
};

}  // namespace covsteer::detail

#endif  // COVSTEER_SRC_CONES_HPP
