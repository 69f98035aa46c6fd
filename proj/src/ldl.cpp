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

#include "ldl.hpp"

#include <cmath>

#include <Eigen/OrderingMethods>

namespace covsteer::detail {

void QuasiDefiniteLdl::analyze(const Eigen::SparseMatrix<double>& K,
                               const std::vector<int>& signs) {
  n_ = static_cast<int>(K.rows());
  analyzed_empty_ = n_ == 0;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int> amd;
  amd(K, pinv);
  perm_ = pinv.inverse();
  // row i of K lands at perm_.indices()[i]
  signs_.assign(n_, 1);
  for (int i = 0; i < n_; ++i) signs_[perm_.indices()[i]] = signs[i];

  upper_.resize(n_, n_);
  upper_.selfadjointView<Eigen::Upper>() =
      K.selfadjointView<Eigen::Lower>().twistedBy(perm_);
  upper_.makeCompressed();

  etree_.assign(n_, -1);
  lnz_.assign(n_, 0);
  std::vector<int> work(n_, -1);
  const int* outer = upper_.outerIndexPtr();
  const int* inner = upper_.innerIndexPtr();
  for (int j = 0; j < n_; ++j) {
    work[j] = j;
    for (int p = outer[j]; p < outer[j + 1]; ++p) {
      int i = inner[p];
      if (i >= j) continue;
      while (work[i] != j) {
        if (etree_[i] == -1) etree_[i] = j;
        ++lnz_[i];
        work[i] = j;
        i = etree_[i];
      }
    }
  }
  lp_.assign(n_ + 1, 0);
  for (int i = 0; i < n_; ++i) lp_[i + 1] = lp_[i] + lnz_[i];
  li_.assign(lp_[n_], 0);
  lx_.assign(lp_[n_], 0.0);
  d_.assign(n_, 0.0);
  dinv_.assign(n_, 0.0);
}

bool QuasiDefiniteLdl::factorize(const Eigen::SparseMatrix<double>& K) {
  upper_.selfadjointView<Eigen::Upper>() =
      K.selfadjointView<Eigen::Lower>().twistedBy(perm_);
  upper_.makeCompressed();
  const int* outer = upper_.outerIndexPtr();
  const int* inner = upper_.innerIndexPtr();
  const double* val = upper_.valuePtr();

  std::vector<int> next_space(lp_.begin(), lp_.end() - 1);
  std::vector<char> marked(n_, 0);
  std::vector<double> y(n_, 0.0);
  std::vector<int> yidx(n_), buffer(n_);
  regularized_ = 0;

  for (int k = 0; k < n_; ++k) {
    int nnz_y = 0;
    d_[k] = 0.0;
    for (int p = outer[k]; p < outer[k + 1]; ++p) {
      const int i = inner[p];
      if (i == k) {
        d_[k] = val[p];
        continue;
      }
      if (i > k) continue;
      y[i] = val[p];
      int next = i;
      if (!marked[next]) {
        marked[next] = 1;
        buffer[0] = next;
        int nnz_e = 1;
        next = etree_[i];
        while (next != -1 && next < k) {
          if (marked[next]) break;
          marked[next] = 1;
          buffer[nnz_e++] = next;
          next = etree_[next];
        }
        while (nnz_e) yidx[nnz_y++] = buffer[--nnz_e];
      }
    }
    for (int q = nnz_y - 1; q >= 0; --q) {
      const int c = yidx[q];
      const int slot = next_space[c];
      const double yc = y[c];
      for (int j = lp_[c]; j < slot; ++j) y[li_[j]] -= lx_[j] * yc;
      li_[slot] = k;
      lx_[slot] = yc * dinv_[c];
      d_[k] -= yc * lx_[slot];
      ++next_space[c];
      y[c] = 0.0;
      marked[c] = 0;
    }
    if (signs_[k] * d_[k] < options_.pivot_threshold) {
      d_[k] = signs_[k] * options_.pivot_replacement;
      ++regularized_;
    }
    if (!std::isfinite(d_[k])) return false;
    dinv_[k] = 1.0 / d_[k];
  }
  return true;
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = perm_ * b;
  for (int i = 0; i < n_; ++i) {
    const double xi = x(i);
    for (int j = lp_[i]; j < lp_[i + 1]; ++j) x(li_[j]) -= lx_[j] * xi;
  }
  for (int i = 0; i < n_; ++i) x(i) *= dinv_[i];
  for (int i = n_ - 1; i >= 0; --i) {
    double xi = x(i);
    for (int j = lp_[i]; j < lp_[i + 1]; ++j) xi -= lx_[j] * x(li_[j]);
    x(i) = xi;
  }
  return perm_.inverse() * x;
}

}  // namespace covsteer::detail
