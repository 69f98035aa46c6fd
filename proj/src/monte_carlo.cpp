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


#include "covsteer/monte_carlo.hpp"

#include <cmath>
#include <random>
#include <string>

#include "covsteer/chi2.hpp"
#include "covsteer/discretize.hpp"
#include "covsteer/dynamics.hpp"
#include "covsteer/error.hpp"

namespace covsteer {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCategory::kInvalidArgument, "monte carlo: " + what);
}

// Mahalanobis threshold test against a block; throws on a singular block.
class BlockTest {
 public:
  BlockTest(const Eigen::MatrixXd& cov, int node, const char* name) : llt_(cov) {
    const Eigen::VectorXd d = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues();
    if (llt_.info() != Eigen::Success || !(d.minCoeff() > 1e-12 * d.maxCoeff())) {
      throw Error(ErrorCategory::kDomain, std::string("coverage: singular ") + name +
                                              " covariance at node " + std::to_string(node));
    }
  }
  double distance2(const Eigen::VectorXd& dx) const { return dx.dot(llt_.solve(dx)); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace

std::string_view to_string(SdeScheme scheme) {
  return scheme == SdeScheme::kEulerMaruyama ? "euler-maruyama" : "split-rk4";
}

SdeScheme parse_sde_scheme(std::string_view text) {
  if (text == "euler-maruyama") return SdeScheme::kEulerMaruyama;
  if (text == "split-rk4") return SdeScheme::kSplitRk4;
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown SDE scheme '" + std::string(text) + "' (euler-maruyama|split-rk4)");
}

void ClosedLoopSystem::validate() const {
  const int N = segments();
  if (!drift || !diffusion) bad("drift and diffusion are required");
  if (N < 1) bad("no segments");
  if (static_cast<int>(times.size()) != N + 1 || static_cast<int>(mean.size()) != N + 1 ||
      static_cast<int>(gains.size()) != N) {
    bad("schedules must span all " + std::to_string(N) + " segments");
  }
  if (steered_dim < 1 || steered_dim > state_dim) bad("steered dimension out of range");
  if (mass_index >= state_dim) bad("mass index out of range");
  if (initial_mean.size() != state_dim || initial_cov.rows() != state_dim ||
      initial_cov.cols() != state_dim) {
    bad("initial distribution dimension mismatch");
  }
  for (int k = 0; k < N; ++k) {
    if (!(times[k + 1] > times[k])) bad("times must increase");
    if (feedforward[k].size() != control_dim || gains[k].rows() != control_dim ||
        gains[k].cols() != steered_dim || mean[k].size() != steered_dim) {
      bad("dimension mismatch at segment " + std::to_string(k));
    }
  }
}

Ensemble simulate_closed_loop(const ClosedLoopSystem& sys, const MonteCarloConfig& config) {
  sys.validate();
  if (config.samples < 1) bad("sample count must be positive");
  if (config.substeps < 1) bad("substeps must be positive");
  const int N = sys.segments();
  const int n = sys.state_dim;
  const Eigen::MatrixXd S0 = sqrt_factor(sys.initial_cov);

  Ensemble ens;
  ens.samples = config.samples;
  ens.seed = config.seed;
  ens.substeps = config.substeps;
  ens.clip = config.clip;
  ens.scheme = config.scheme;
  ens.states.resize(config.samples);
  ens.commanded.resize(config.samples);
  ens.applied.resize(config.samples);
  ens.flagged.assign(config.samples, false);

  for (int i = 0; i < config.samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    const auto draw = [&](Eigen::Index size) {
      Eigen::VectorXd z(size);
      for (Eigen::Index j = 0; j < size; ++j) z(j) = normal(rng);
      return z;
    };

    auto& states = ens.states[i];
    states.reserve(N + 1);
    Eigen::VectorXd x = sys.initial_mean + S0 * draw(n);
    states.push_back(x);
    bool ok = sys.mass_index < 0 || x(sys.mass_index) > 0.0;
    for (int k = 0; k < N && ok; ++k) {
      Eigen::VectorXd u =
          sys.feedforward[k] + sys.gains[k] * (x.head(sys.steered_dim) - sys.mean[k]);
      ens.commanded[i].push_back(u);
      const double norm = u.norm();
      if (sys.u_max > 0.0 && norm > sys.u_max) {
        ++ens.clip_count;
        if (config.clip) u *= sys.u_max / norm;
      }
      ens.applied[i].push_back(u);
      const double h = (sys.times[k + 1] - sys.times[k]) / config.substeps;
      const double sqrt_h = std::sqrt(h);
      for (int s = 0; s < config.substeps; ++s) {
        const Eigen::MatrixXd G = sys.diffusion(x);
        const Eigen::VectorXd dw = sqrt_h * draw(G.cols());
        try {
          if (config.scheme == SdeScheme::kEulerMaruyama) {
            x += sys.drift(x, u) * h + G * dw;
          } else {
            const Eigen::VectorXd k1 = sys.drift(x, u);
            const Eigen::VectorXd k2 = sys.drift(x + 0.5 * h * k1, u);
            const Eigen::VectorXd k3 = sys.drift(x + 0.5 * h * k2, u);
            const Eigen::VectorXd k4 = sys.drift(x + h * k3, u);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) + G * dw;
          }
        } catch (const Error& e) {
          // An intermediate stage left the model's domain (nonpositive mass).
          if (e.category() != ErrorCategory::kDomain) throw;
          ok = false;
          break;
        }
        if (sys.mass_index >= 0 && !(x(sys.mass_index) > 0.0)) {
          ok = false;
          break;
        }
      }
      states.push_back(ok ? x : states.back());
    }
    if (!ok) {
      ens.flagged[i] = true;
      ++ens.flagged_count;
      while (static_cast<int>(states.size()) < N + 1) states.push_back(states.back());
    }
  }
  return ens;
}

EnsembleStats ensemble_stats(const Ensemble& ens, int mass_index) {
  EnsembleStats st;
  const int nodes = ens.nodes();
  for (int i = 0; i < ens.samples; ++i) st.used += ens.flagged[i] ? 0 : 1;
  if (st.used < 2) {
    throw Error(ErrorCategory::kInvalidArgument,
                "ensemble statistics need at least two unflagged samples");
  }
  for (int k = 0; k < nodes; ++k) {
    const Eigen::Index n = ens.states[0][k].size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < ens.samples; ++i) {
      if (!ens.flagged[i]) mean += ens.states[i][k];
    }
    mean /= st.used;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < ens.samples; ++i) {
      if (ens.flagged[i]) continue;
      const Eigen::VectorXd d = ens.states[i][k] - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= (st.used - 1);
    cov = 0.5 * (cov + cov.transpose()).eval();
    if (mass_index >= 0) {
      st.mass_mean.push_back(mean(mass_index));
      st.mass_std.push_back(std::sqrt(std::max(0.0, cov(mass_index, mass_index))));
    }
    st.mean.push_back(std::move(mean));
    st.cov.push_back(std::move(cov));
  }
  return st;
}

Coverage coverage_check(const Ensemble& ens, const std::vector<Eigen::VectorXd>& means,
                        const std::vector<Eigen::MatrixXd>& covs, int spatial,
                        double confidence) {
  const int nodes = ens.nodes();
  if (static_cast<int>(means.size()) != nodes || static_cast<int>(covs.size()) != nodes) {
    bad("coverage needs one predicted mean and covariance per node");
  }
  const double q = chi2_quantile(spatial, confidence);
  Coverage cov;
  for (int k = 0; k < nodes; ++k) {
    if (means[k].size() < 2 * spatial || covs[k].rows() < 2 * spatial) {
      bad("predicted state too small at node " + std::to_string(k));
    }
    const BlockTest pos(covs[k].topLeftCorner(spatial, spatial), k, "position");
    const BlockTest vel(covs[k].block(spatial, spatial, spatial, spatial), k, "velocity");
    int used = 0, in_pos = 0, in_vel = 0;
    for (int i = 0; i < ens.samples; ++i) {
      if (ens.flagged[i]) continue;
      ++used;
      const Eigen::VectorXd d = ens.states[i][k].head(2 * spatial) - means[k].head(2 * spatial);
      in_pos += pos.distance2(d.head(spatial)) <= q ? 1 : 0;
      in_vel += vel.distance2(d.tail(spatial)) <= q ? 1 : 0;
    }
    if (used == 0) bad("every sample is flagged");
    cov.position.push_back(static_cast<double>(in_pos) / used);
    cov.velocity.push_back(static_cast<double>(in_vel) / used);
  }
  return cov;
}

std::vector<double> control_satisfaction(const Ensemble& ens, double u_max) {
  const int N = ens.nodes() - 1;
  std::vector<double> frac;
  for (int k = 0; k < N; ++k) {
    int used = 0, ok = 0;
    for (int i = 0; i < ens.samples; ++i) {
      if (ens.flagged[i]) continue;
      ++used;
      ok += ens.commanded[i][k].norm() <= u_max ? 1 : 0;
    }
    frac.push_back(used ? static_cast<double>(ok) / used : 0.0);
  }
  return frac;
}

ClosedLoopSystem closed_loop_system(const ScaledSolution& solved) {
  const SteeringSolution& sol = solved.solution;
  const SteeringIterate& it = sol.iterate;
  const PhysicalParams params = solved.params;
  ClosedLoopSystem sys;
  sys.drift = [params](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return drift(x, u, params);
  };
  sys.diffusion = [params](const Eigen::VectorXd& x) { return diffusion(x, params); };
  sys.state_dim = 2 * solved.spatial + 1;
  sys.steered_dim = static_cast<int>(it.mean.front().size());
  sys.control_dim = solved.spatial;
  sys.mass_index = 2 * solved.spatial;
  sys.times = solved.times;
  sys.mean = it.mean;
  sys.feedforward = it.feedforward;
  sys.gains = sol.gains;
  sys.initial_mean = it.full_nodes.front();
  sys.initial_cov = solved.initial_cov;
  sys.u_max = params.u_max;
  return sys;
}

}  // namespace covsteer
