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

#include "covsteer/discretize.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "covsteer/error.hpp"

namespace covsteer {

namespace {

std::string at_segment(int k) { return " (segment " + std::to_string(k) + ")"; }

// Augmented state for one segment: reference x, STM Phi, convolved B, c, Q.
struct Augmented {
  Eigen::VectorXd x;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd b;
  Eigen::VectorXd c;
  Eigen::MatrixXd q;

  Augmented& axpy(double h, const Augmented& d) {
    x += h * d.x;
    phi += h * d.phi;
    b += h * d.b;
    c += h * d.c;
    q += h * d.q;
    return *this;
  }
};

Augmented rates(const SegmentModel& model, const Augmented& s,
                const Eigen::VectorXd& u) {
  Linearization lin;
  Eigen::MatrixXd g;
  model.linearize(s.x, u, lin, g);
  Augmented d;
  d.x = model.rate(s.x, u);
  d.phi = lin.A * s.phi;
  d.b = lin.A * s.b + lin.B;
  d.c = lin.A * s.c + lin.c;
  d.q = lin.A * s.q + s.q * lin.A.transpose() + g * g.transpose();
  return d;
}

}  // namespace

void ReferenceTrajectory::validate() const {
  if (nodes.size() < 2 || nodes.size() != controls.size() + 1 ||
      times.size() != nodes.size()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "reference needs N+1 nodes, N controls, N+1 times");
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "reference times not strictly increasing at row " +
                      std::to_string(k));
    }
    if (nodes[k].size() != nodes[0].size()) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "reference node " + std::to_string(k) + " has wrong size");
    }
    if (!(nodes[k](nodes[k].size() - 1) > 0.0)) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "reference mass not positive at row " + std::to_string(k));
    }
    if (!nodes[k].allFinite()) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "reference node " + std::to_string(k) + " not finite");
    }
  }
  for (std::size_t k = 0; k < controls.size(); ++k) {
    if (controls[k].size() != controls[0].size() || !controls[k].allFinite()) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "reference control " + std::to_string(k) + " invalid");
    }
  }
}

Eigen::VectorXd propagate_nonlinear(const SegmentModel& model,
                                    const Eigen::VectorXd& state,
                                    const Eigen::VectorXd& control, double t0,
                                    double t1, int substeps) {
  const double h = (t1 - t0) / substeps;
  Eigen::VectorXd x = state;
  for (int i = 0; i < substeps; ++i) {
    const Eigen::VectorXd k1 = model.rate(x, control);
    const Eigen::VectorXd k2 = model.rate(x + 0.5 * h * k1, control);
    const Eigen::VectorXd k3 = model.rate(x + 0.5 * h * k2, control);
    const Eigen::VectorXd k4 = model.rate(x + h * k3, control);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

DiscreteSegment discretize_segment(const ReferenceTrajectory& reference, int k,
                                   const SegmentModel& model,
                                   const IntegratorConfig& config) {
  if (k < 0 || k >= reference.segments()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "segment index out of range" + at_segment(k));
  }
  if (config.substeps < 1) {
    throw Error(ErrorCategory::kInvalidArgument, "substeps must be >= 1");
  }
  const int n = model.state_dim();
  const int m = model.control_dim();
  const Eigen::VectorXd& u = reference.controls[k];
  if (u.size() != m || reference.nodes[k].size() != model.full_dim()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "reference does not match model dimensions" + at_segment(k));
  }

  Augmented s;
  s.x = reference.nodes[k];
  s.phi = Eigen::MatrixXd::Identity(n, n);
  s.b = Eigen::MatrixXd::Zero(n, m);
  s.c = Eigen::VectorXd::Zero(n);
  s.q = Eigen::MatrixXd::Zero(n, n);

  const double h =
      (reference.times[k + 1] - reference.times[k]) / config.substeps;
  try {
    for (int i = 0; i < config.substeps; ++i) {
      const Augmented k1 = rates(model, s, u);
      Augmented tmp = s;
      const Augmented k2 = rates(model, tmp.axpy(0.5 * h, k1), u);
      tmp = s;
      const Augmented k3 = rates(model, tmp.axpy(0.5 * h, k2), u);
      tmp = s;
      const Augmented k4 = rates(model, tmp.axpy(h, k3), u);
      s.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
    }
  } catch (const Error& e) {
    throw Error(e.category(), e.what() + at_segment(k));
  }
  if (!s.phi.allFinite() || !s.b.allFinite() || !s.c.allFinite() ||
      !s.q.allFinite()) {
    throw Error(ErrorCategory::kNumerical,
                "non-finite discretization" + at_segment(k));
  }

  DiscreteSegment seg;
  seg.A = s.phi;
  seg.B = s.b;
  seg.c = s.c;
  seg.Q = 0.5 * (s.q + s.q.transpose());
  seg.end_state = s.x;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(seg.Q);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -config.clamp_tolerance) {
    throw Error(ErrorCategory::kNumerical,
                "process noise covariance indefinite" + at_segment(k));
  }
  const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
  seg.Q = eig.eigenvectors() * clamped.asDiagonal() *
          eig.eigenvectors().transpose();
  seg.Q = (0.5 * (seg.Q + seg.Q.transpose())).eval();
  seg.G = eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal();
  return seg;
}

std::vector<DiscreteSegment> discretize(const ReferenceTrajectory& reference,
                                        const SegmentModel& model,
                                        const IntegratorConfig& config) {
  reference.validate();
  std::vector<DiscreteSegment> out;
  out.reserve(reference.segments());
  for (int k = 0; k < reference.segments(); ++k) {
    out.push_back(discretize_segment(reference, k, model, config));
  }
  return out;
}

Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& Q) {
  if (Q.rows() != Q.cols()) {
    throw Error(ErrorCategory::kInvalidArgument, "sqrt_factor: not square");
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorCategory::kDomain, "sqrt_factor: matrix not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Q + Q.transpose()));
  if (eig.eigenvalues().size() > 0 && eig.eigenvalues().minCoeff() < -1e-8) {
    throw Error(ErrorCategory::kDomain, "sqrt_factor: matrix is indefinite");
  }
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

std::vector<Eigen::VectorXd> propagate_mean(
    const std::vector<DiscreteSegment>& segments, const Eigen::VectorXd& x0,
    const std::vector<Eigen::VectorXd>& feedforward) {
  if (segments.size() != feedforward.size()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "propagate_mean: segment/feedforward count mismatch");
  }
  std::vector<Eigen::VectorXd> x{x0};
  x.reserve(segments.size() + 1);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (s.A.cols() != x.back().size() || s.B.cols() != feedforward[k].size()) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "propagate_mean: dimension mismatch" +
                      at_segment(static_cast<int>(k)));
    }
    x.push_back(s.A * x.back() + s.B * feedforward[k] + s.c);
  }
  return x;
}

std::vector<Eigen::MatrixXd> propagate_covariance(
    const std::vector<DiscreteSegment>& segments, const Eigen::MatrixXd& P0,
    const std::vector<Eigen::MatrixXd>& gains) {
  if (segments.size() != gains.size()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "propagate_covariance: segment/gain count mismatch");
  }
  std::vector<Eigen::MatrixXd> P{0.5 * (P0 + P0.transpose())};
  P.reserve(segments.size() + 1);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (s.A.cols() != P.back().rows() || gains[k].rows() != s.B.cols() ||
        gains[k].cols() != s.A.cols()) {
      throw Error(ErrorCategory::kInvalidArgument,
                  "propagate_covariance: dimension mismatch" +
                      at_segment(static_cast<int>(k)));
    }
    const Eigen::MatrixXd closed = s.A + s.B * gains[k];
    Eigen::MatrixXd next = closed * P.back() * closed.transpose() + s.Q;
    P.push_back(0.5 * (next + next.transpose()));
  }
  return P;
}

}  // namespace covsteer
