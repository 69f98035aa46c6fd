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

// Sparse LDL^T for symmetric quasi-definite matrices with fixed pivot
// signs. Pivots with the wrong sign or tiny magnitude are replaced by a
// signed regularization value.
#ifndef COVSTEER_SRC_LDL_HPP
#define COVSTEER_SRC_LDL_HPP

#include <vector>

#include <Eigen/Sparse>

namespace covsteer::detail {

class QuasiDefiniteLdl {
 public:
  struct Options {
    double pivot_threshold = 1e-13;
    double pivot_replacement = 1e-8;
  };

  QuasiDefiniteLdl() = default;
  explicit QuasiDefiniteLdl(Options options) : options_(options) {}

  /// Symbolic analysis. `signs` holds +1/-1 for each row of K.
  void analyze(const Eigen::SparseMatrix<double>& K, const std::vector<int>& signs);

  /// Numeric factorization; K must have the analyzed pattern.
  /// Returns false when a pivot is not finite.
  bool factorize(const Eigen::SparseMatrix<double>& K);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  int regularized_pivots() const { return regularized_; }
  bool analyzed() const { return n_ > 0 || analyzed_empty_; }

 private:
  Options options_;
  int n_ = 0;
  bool analyzed_empty_ = false;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
  std::vector<int> signs_;  // permuted
  std::vector<int> etree_;
  std::vector<int> lnz_;
  std::vector<int> lp_;
  std::vector<int> li_;
  std::vector<double> lx_;
  std::vector<double> d_;
  std::vector<double> dinv_;
  int regularized_ = 0;
  Eigen::SparseMatrix<double> upper_;
};

}  // namespace covsteer::detail

#endif  // COVSTEER_SRC_LDL_HPP
