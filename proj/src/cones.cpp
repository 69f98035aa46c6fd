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

#include "cones.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace covsteer::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x0^2 - |x1|^2 evaluated as a product to limit cancellation.
double soc_det(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double tail = x.tail(x.size() - 1).norm();
  return (x(0) - tail) * (x(0) + tail);
}

// Smallest positive root of a t^2 + b t + c (c > 0), or infinity.
double first_positive_root(double a, double b, double c) {
  double best = kInf;
  auto consider = [&](double r) {
    if (r > 0.0 && r < best) best = r;
  };
  if (a == 0.0) {
    if (b < 0.0) consider(-c / b);
    return best;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return best;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (q != 0.0) {
    consider(q / a);
    consider(c / q);
  }
  return best;
}

}  // namespace

ConeSet::ConeSet(std::vector<ConeBlock> blocks, int rows)
    : blocks_(std::move(blocks)), rows_(rows), scaling_(blocks_.size()) {
  for (const auto& b : blocks_) degree_ += b.kind == ConeKind::kPsd ? b.side : 1;
  lambda_ = Eigen::VectorXd::Zero(rows_);
}

Eigen::VectorXd ConeSet::identity() const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(rows_);
  for (const auto& b : blocks_) {
    switch (b.kind) {
      case ConeKind::kNonnegative:
        e(b.first_row) = 1.0;
        break;
      case ConeKind::kSecondOrder:
        e(b.first_row) = 1.0;
        break;
      case ConeKind::kPsd:
        for (int i = 0; i < b.side; ++i) e(b.first_row + svec_index(i, i, b.side)) = 1.0;
        break;
    }
  }
  return e;
}

double ConeSet::max_violation(const Eigen::VectorXd& x) const {
  double worst = -kInf;
  for (const auto& b : blocks_) {
    const auto blk = x.segment(b.first_row, b.dim);
    double v = 0.0;
    switch (b.kind) {
      case ConeKind::kNonnegative:
        v = -blk(0);
        break;
      case ConeKind::kSecondOrder:
        v = blk.tail(b.dim - 1).norm() - blk(0);
        break;
      case ConeKind::kPsd: {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
            svec_unpack(blk, b.side), Eigen::EigenvaluesOnly);
        v = -eig.eigenvalues().minCoeff();
        break;
      }
    }
    worst = std::max(worst, v);
  }
  return worst;
}

bool ConeSet::update_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    auto& sc = scaling_[i];
    const auto sb = s.segment(b.first_row, b.dim);
    const auto zb = z.segment(b.first_row, b.dim);
    auto lb = lambda_.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative: {
        if (!(sb(0) > 0.0) || !(zb(0) > 0.0)) return false;
        sc.w = (sb.array() / zb.array()).sqrt().matrix();
        lb = (sb.array() * zb.array()).sqrt().matrix();
        break;
      }
      case ConeKind::kSecondOrder: {
        const double sdet = soc_det(sb);
        const double zdet = soc_det(zb);
        if (!(sb(0) > 0.0) || !(zb(0) > 0.0) || !(sdet > 0.0) || !(zdet > 0.0)) {
          return false;
        }
        const Eigen::VectorXd sn = sb / std::sqrt(sdet);
        const Eigen::VectorXd zn = zb / std::sqrt(zdet);
        const double gamma = std::sqrt(0.5 * (1.0 + sn.dot(zn)));
        Eigen::VectorXd wbar = sn;
        wbar(0) += zn(0);
        wbar.tail(b.dim - 1) -= zn.tail(b.dim - 1);
        wbar /= 2.0 * gamma;
        sc.v = wbar;
        sc.v(0) += 1.0;
        sc.v /= std::sqrt(2.0 * (wbar(0) + 1.0));
        sc.beta = std::pow(sdet / zdet, 0.25);
        // lambda = W z
        const double vz = sc.v.dot(zb);
        Eigen::VectorXd jz = zb;
        jz.tail(b.dim - 1) *= -1.0;
        lb = sc.beta * (2.0 * vz * sc.v - jz);
        break;
      }
      case ConeKind::kPsd: {
        const Eigen::MatrixXd S = svec_unpack(sb, b.side);
        const Eigen::MatrixXd Z = svec_unpack(zb, b.side);
        Eigen::LLT<Eigen::MatrixXd> ls(S), lz(Z);
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
        const Eigen::MatrixXd Ls = ls.matrixL();
        const Eigen::MatrixXd Lz = lz.matrixL();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::VectorXd sig = svd.singularValues();
        if (!(sig.minCoeff() > 0.0)) return false;
        const Eigen::VectorXd isq = sig.cwiseSqrt().cwiseInverse();
        sc.R = Ls * svd.matrixV() * isq.asDiagonal();
        // R^{-1} = diag(sqrt(sig)) V^T Ls^{-1}
        const Eigen::MatrixXd LsInv = ls.matrixL().solve(
            Eigen::MatrixXd::Identity(b.side, b.side));
        sc.Rinv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * LsInv;
        lb.setZero();
        for (int k = 0; k < b.side; ++k) lb(svec_index(k, k, b.side)) = sig(k);
        break;
      }
    }
  }
  return lambda_.allFinite();
}

Eigen::VectorXd ConeSet::apply_w(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    const auto& sc = scaling_[i];
    const auto vb = v.segment(b.first_row, b.dim);
    auto ob = out.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative:
        ob = vb.cwiseProduct(sc.w);
        break;
      case ConeKind::kSecondOrder: {
        Eigen::VectorXd jv = vb;
        jv.tail(b.dim - 1) *= -1.0;
        ob = sc.beta * (2.0 * sc.v.dot(vb) * sc.v - jv);
        break;
      }
      case ConeKind::kPsd:
        ob = svec_pack(sc.R.transpose() * svec_unpack(vb, b.side) * sc.R);
        break;
    }
  }
  return out;
}

Eigen::VectorXd ConeSet::apply_wt(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    const auto& sc = scaling_[i];
    const auto vb = v.segment(b.first_row, b.dim);
    auto ob = out.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative:
        ob = vb.cwiseProduct(sc.w);
        break;
      case ConeKind::kSecondOrder: {
        Eigen::VectorXd jv = vb;
        jv.tail(b.dim - 1) *= -1.0;
        ob = sc.beta * (2.0 * sc.v.dot(vb) * sc.v - jv);
        break;
      }
      case ConeKind::kPsd:
        ob = svec_pack(sc.R * svec_unpack(vb, b.side) * sc.R.transpose());
        break;
    }
  }
  return out;
}

Eigen::VectorXd ConeSet::apply_scaling_inverse(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    const auto& sc = scaling_[i];
    const auto vb = v.segment(b.first_row, b.dim);
    auto ob = out.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative:
        ob = vb.cwiseQuotient(sc.w.cwiseAbs2());
        break;
      case ConeKind::kSecondOrder: {
        // W^{-1} = (2 Jv (Jv)^T - J) / beta, applied twice.
        Eigen::VectorXd jvv = sc.v;
        jvv.tail(b.dim - 1) *= -1.0;
        auto winv = [&](const Eigen::VectorXd& x) {
          Eigen::VectorXd jx = x;
          jx.tail(b.dim - 1) *= -1.0;
          return Eigen::VectorXd((2.0 * jvv.dot(x) * jvv - jx) / sc.beta);
        };
        ob = winv(winv(vb));
        break;
      }
      case ConeKind::kPsd: {
        const Eigen::MatrixXd T = sc.Rinv.transpose() * sc.Rinv;
        ob = svec_pack(T * svec_unpack(vb, b.side) * T);
        break;
      }
    }
  }
  return out;
}

namespace {

// Matrix of X -> T X T on svec coordinates, T symmetric.
Eigen::MatrixXd congruence_matrix(const Eigen::MatrixXd& T) {
  const int n = static_cast<int>(T.rows());
  Eigen::MatrixXd D(svec_size(n), svec_size(n));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int l = 0; l < n; ++l) {
    for (int k = l; k < n; ++k) {
      Eigen::MatrixXd img;
      if (k == l) {
        img = T.col(k) * T.col(k).transpose();
      } else {
        img = inv_sqrt2 * (T.col(k) * T.col(l).transpose() +
                           T.col(l) * T.col(k).transpose());
      }
      D.col(svec_index(k, l, n)) = svec_pack(img);
    }
  }
  return D;
}

}  // namespace

Eigen::SparseMatrix<double> ConeSet::scaling_matrix(bool inverse) const {
  std::vector<Eigen::Triplet<double>> trip;
  auto emit = [&trip](int r0, const Eigen::MatrixXd& D) {
    for (int c = 0; c < D.cols(); ++c)
      for (int r = 0; r < D.rows(); ++r) trip.emplace_back(r0 + r, r0 + c, D(r, c));
  };
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    const auto& sc = scaling_[i];
    const int r0 = b.first_row;
    switch (b.kind) {
      case ConeKind::kNonnegative: {
        const double w2 = sc.w(0) * sc.w(0);
        trip.emplace_back(r0, r0, inverse ? 1.0 / w2 : w2);
        break;
      }
      case ConeKind::kSecondOrder: {
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(b.dim, b.dim);
        J.bottomRightCorner(b.dim - 1, b.dim - 1) *= -1.0;
        Eigen::MatrixXd W;
        if (inverse) {
          const Eigen::VectorXd jv = J * sc.v;
          W = (2.0 * jv * jv.transpose() - J) / sc.beta;
        } else {
          W = sc.beta * (2.0 * sc.v * sc.v.transpose() - J);
        }
        emit(r0, W * W);
        break;
      }
      case ConeKind::kPsd: {
        const Eigen::MatrixXd T = inverse ? Eigen::MatrixXd(sc.Rinv.transpose() * sc.Rinv)
                                          : Eigen::MatrixXd(sc.R * sc.R.transpose());
        emit(r0, congruence_matrix(T));
        break;
      }
    }
  }
  Eigen::SparseMatrix<double> out(rows_, rows_);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXd ConeSet::jordan(const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(u.size());
  for (const auto& b : blocks_) {
    const auto ub = u.segment(b.first_row, b.dim);
    const auto vb = v.segment(b.first_row, b.dim);
    auto ob = out.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative:
        ob = ub.cwiseProduct(vb);
        break;
      case ConeKind::kSecondOrder:
        ob(0) = ub.dot(vb);
        ob.tail(b.dim - 1) = ub(0) * vb.tail(b.dim - 1) + vb(0) * ub.tail(b.dim - 1);
        break;
      case ConeKind::kPsd: {
        const Eigen::MatrixXd U = svec_unpack(ub, b.side);
        const Eigen::MatrixXd V = svec_unpack(vb, b.side);
        ob = svec_pack(0.5 * (U * V + V * U));
        break;
      }
    }
  }
  return out;
}

Eigen::VectorXd ConeSet::lambda_divide(const Eigen::VectorXd& r) const {
  Eigen::VectorXd out(r.size());
  for (const auto& b : blocks_) {
    const auto lb = lambda_.segment(b.first_row, b.dim);
    const auto rb = r.segment(b.first_row, b.dim);
    auto ob = out.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative:
        ob = rb.cwiseQuotient(lb);
        break;
      case ConeKind::kSecondOrder: {
        const double l0 = lb(0);
        const auto l1 = lb.tail(b.dim - 1);
        const double det = soc_det(lb);
        const double x0 = (l0 * rb(0) - l1.dot(rb.tail(b.dim - 1))) / det;
        ob(0) = x0;
        ob.tail(b.dim - 1) = (rb.tail(b.dim - 1) - x0 * l1) / l0;
        break;
      }
      case ConeKind::kPsd: {
        for (int j = 0; j < b.side; ++j) {
          for (int i = j; i < b.side; ++i) {
            const int p = svec_index(i, j, b.side);
            const double li = lb(svec_index(i, i, b.side));
            const double lj = lb(svec_index(j, j, b.side));
            ob(p) = 2.0 * rb(p) / (li + lj);
          }
        }
        break;
      }
    }
  }
  return out;
}

double ConeSet::max_step(const Eigen::VectorXd& d) const {
  double alpha = kInf;
  for (const auto& b : blocks_) {
    const auto lb = lambda_.segment(b.first_row, b.dim);
    const auto db = d.segment(b.first_row, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative:
        if (db(0) < 0.0) alpha = std::min(alpha, -lb(0) / db(0));
        break;
      case ConeKind::kSecondOrder: {
        const auto l1 = lb.tail(b.dim - 1);
        const auto d1 = db.tail(b.dim - 1);
        const double a = db(0) * db(0) - d1.squaredNorm();
        const double bb = 2.0 * (lb(0) * db(0) - l1.dot(d1));
        const double c = soc_det(lb);
        alpha = std::min(alpha, first_positive_root(a, bb, c));
        break;
      }
      case ConeKind::kPsd: {
        Eigen::VectorXd isq(b.side);
        for (int i = 0; i < b.side; ++i) {
          isq(i) = 1.0 / std::sqrt(lb(svec_index(i, i, b.side)));
        }
        const Eigen::MatrixXd M =
            isq.asDiagonal() * svec_unpack(db, b.side) * isq.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
        const double lmin = eig.eigenvalues().minCoeff();
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
        break;
      }
    }
  }
  return alpha;
}

}  // namespace covsteer::detail
