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


// Small models shared by the unit tests.
#ifndef COVSTEER_TESTS_TEST_MODELS_HPP
#define COVSTEER_TESTS_TEST_MODELS_HPP

#include <utility>

#include <Eigen/Dense>

#include "covsteer/dynamics.hpp"

namespace covsteer::testing_models {

// x' = A x + B u + c with constant diffusion G.
class LinearModel final : public SegmentModel {
 public:
  LinearModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd c,
              Eigen::MatrixXd G)
      : A_(std::move(A)), B_(std::move(B)), c_(std::move(c)), G_(std::move(G)) {}
  int full_dim() const override { return static_cast<int>(A_.rows()); }
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  int noise_dim() const override { return static_cast<int>(G_.cols()); }
  Eigen::VectorXd rate(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override {
    return A_ * x + B_ * u + c_;
  }
  void linearize(const Eigen::VectorXd&, const Eigen::VectorXd&, Linearization& lin,
                 Eigen::MatrixXd& noise) const override {
    lin.A = A_;
    lin.B = B_;
    lin.c = c_;
    noise = G_;
  }
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const override { return x; }

 private:
  Eigen::MatrixXd A_, B_;
  Eigen::VectorXd c_;
  Eigen::MatrixXd G_;
};

}  // namespace covsteer::testing_models

#endif  // COVSTEER_TESTS_TEST_MODELS_HPP
