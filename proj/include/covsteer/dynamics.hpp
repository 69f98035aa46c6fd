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

#ifndef COVSTEER_DYNAMICS_HPP
#define COVSTEER_DYNAMICS_HPP

#include <cmath>

#include <Eigen/Dense>

namespace covsteer {

/// Heliocentric two-body model parameters. Any consistent unit system works;
/// the solver pipeline runs in canonical units (see ScaleSet::canonical).
struct PhysicalParams {
  double mu = 0.0;     // gravitational parameter
  double isp = 0.0;    // specific impulse [time]
  double g0 = 0.0;     // standard gravity [length/time^2]
  double u_max = 0.0;  // thrust bound [force]
  double gamma = 0.0;  // force disturbance intensity [force * time^(1/2)]

  double exhaust_speed() const { return isp * g0; }
  void validate() const;
};

/// Guards used by the model evaluation routines. Both values are expressed in
/// the units of the arguments (scaled units in the solver pipeline).
struct ModelTolerances {
  double radius_floor = 1e-3;
  // Smoothing of |u| inside Jacobians only: sqrt(|u|^2 + eps^2).
  double thrust_smoothing = 1e-8;
};

/// Units used to nondimensionalize a scenario. Derived units follow from the
/// three base units.
struct ScaleSet {
  double length = 1.0;
  double time = 1.0;
  double mass = 1.0;

  double speed() const { return length / time; }
  double acceleration() const { return length / (time * time); }
  double force() const { return mass * length / (time * time); }
  // Units of the diffusion intensity gamma: force * sqrt(time).
  double force_density() const { return force() * std::sqrt(time); }

  void validate() const;

  static ScaleSet identity() { return {}; }
  /// length = 1 AU, time such that the scaled mu equals one, mass = m0.
  static ScaleSet canonical(double mu, double initial_mass);
};

inline constexpr double kAstronomicalUnitKm = 1.495978707e8;

/// Number of spatial axes of a [r; v; m] state (2 or 3). Throws on other sizes.
int spatial_dim(Eigen::Index state_dim);

/// f(x, u) = [v; -mu r/|r|^3 + u/m; -|u|/(Isp g0)].
Eigen::VectorXd drift(const Eigen::VectorXd& state,
                      const Eigen::VectorXd& control,
                      const PhysicalParams& params,
                      const ModelTolerances& tol = {});

/// [0; (gamma/m) I; 0], size n_x x n_w with n_w equal to the spatial dimension.
Eigen::MatrixXd diffusion(const Eigen::VectorXd& state,
                          const PhysicalParams& params);

struct Linearization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;  // f(x, u) - A x - B u
};

/// Analytic Jacobians of drift. The mass-rate row uses the smoothed thrust
/// norm so coast arcs (u = 0) have a finite derivative; drift itself is exact.
Linearization jacobians(const Eigen::VectorXd& state,
                        const Eigen::VectorXd& control,
                        const PhysicalParams& params,
                        const ModelTolerances& tol = {});

// Nondimensionalization. Every to_* has an inverse from_*.
Eigen::VectorXd scale_state(const Eigen::VectorXd& state, const ScaleSet& s);
Eigen::VectorXd unscale_state(const Eigen::VectorXd& state, const ScaleSet& s);
Eigen::MatrixXd scale_covariance(const Eigen::MatrixXd& cov, const ScaleSet& s);
Eigen::MatrixXd unscale_covariance(const Eigen::MatrixXd& cov,
                                   const ScaleSet& s);
PhysicalParams scale_params(const PhysicalParams& p, const ScaleSet& s);
PhysicalParams unscale_params(const PhysicalParams& p, const ScaleSet& s);
/// Per-component unit of a state vector of the given size.
Eigen::VectorXd state_units(Eigen::Index state_dim, const ScaleSet& s);

/// A continuous-time model as seen by the segment discretizer.
///
/// The reference is always propagated on the full nonlinear state [r; v; m];
/// the linearized ("steered") state may be a subset of it. The control seen by
/// the model may also differ from the physical thrust vector.
class SegmentModel {
 public:
  virtual ~SegmentModel() = default;

  virtual int full_dim() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int noise_dim() const = 0;

  virtual Eigen::VectorXd rate(const Eigen::VectorXd& full_state,
                               const Eigen::VectorXd& control) const = 0;
  /// A, B, c on the steered state plus the diffusion matrix G.
  virtual void linearize(const Eigen::VectorXd& full_state,
                         const Eigen::VectorXd& control, Linearization& lin,
                         Eigen::MatrixXd& noise) const = 0;
  virtual Eigen::VectorXd reduce(const Eigen::VectorXd& full_state) const = 0;
};

/// Mass is part of the stochastic state; thrust enters through u/m and the
/// mass-rate equation.
class MassCoupledModel final : public SegmentModel {
 public:
  MassCoupledModel(int spatial, PhysicalParams params, ModelTolerances tol = {});

  int full_dim() const override { return 2 * spatial_ + 1; }
  int state_dim() const override { return 2 * spatial_ + 1; }
  int control_dim() const override { return spatial_; }
  int noise_dim() const override { return spatial_; }

  Eigen::VectorXd rate(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override;
  void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 Linearization& lin, Eigen::MatrixXd& noise) const override;
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const override { return x; }

 private:
  int spatial_;
  PhysicalParams params_;
  ModelTolerances tol_;
};

/// Mass follows the reference deterministically; only [r; v] is steered and
/// 1/m(t) enters as a known time-varying coefficient.
class KnownMassModel final : public SegmentModel {
 public:
  KnownMassModel(int spatial, PhysicalParams params, ModelTolerances tol = {});

  int full_dim() const override { return 2 * spatial_ + 1; }
  int state_dim() const override { return 2 * spatial_; }
  int control_dim() const override { return spatial_; }
  int noise_dim() const override { return spatial_; }

  Eigen::VectorXd rate(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override;
  void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 Linearization& lin, Eigen::MatrixXd& noise) const override;
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const override {
    return x.head(2 * spatial_);
  }

 private:
  int spatial_;
  PhysicalParams params_;
  ModelTolerances tol_;
};

/// Control is [u; Gamma] with Gamma an upper bound on |u| driving the mass
/// rate linearly: m' = -Gamma/(Isp g0). Used by the deterministic
/// initializer, where the relaxation makes the mass row exactly linear.
class RelaxedThrustModel final : public SegmentModel {
 public:
  RelaxedThrustModel(int spatial, PhysicalParams params,
                     ModelTolerances tol = {});

  int full_dim() const override { return 2 * spatial_ + 1; }
  int state_dim() const override { return 2 * spatial_ + 1; }
  int control_dim() const override { return spatial_ + 1; }
  int noise_dim() const override { return spatial_; }

  Eigen::VectorXd rate(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override;
  void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                 Linearization& lin, Eigen::MatrixXd& noise) const override;
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const override { return x; }

 private:
  int spatial_;
  PhysicalParams params_;
  ModelTolerances tol_;
};

}  // namespace covsteer

#endif  // COVSTEER_DYNAMICS_HPP
