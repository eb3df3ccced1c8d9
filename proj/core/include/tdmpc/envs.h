// Copyright 2026 The tdmpc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TDMPC_ENVS_H_
#define TDMPC_ENVS_H_

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tdmpc/network.h"
#include "tdmpc/planner.h"
#include "tdmpc/rng.h"

namespace tdmpc {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int action_dim = 0;
  int episode_length = 250;
  double dt = 0.02;
};

struct StepResult {
  Vector next_state;
  double reward = 0.0;
  bool finite = true;
};

// A deterministic continuous-control task with actions in [-1, 1]^m and
// per-step rewards in [0, 1]. Environments hold only constants; the state is
// passed in and out, so every method is const and thread-safe.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Vector Reset(Rng& rng) const = 0;
  // Raw single-transition kernel. `a` must already be inside the bounds.
  virtual void StepKernel(const double* s, const double* a, double* s_next,
                          double* reward) const = 0;

  // Steps with the clipped action and flags non-finite successor states.
  StepResult Step(const Vector& s, const Vector& a) const;
  void StepBatch(const Matrix& s, const Matrix& a, Matrix* s_next,
                 RowVector* reward) const;
};

// Double integrator in the plane chasing the origin.
//   s = (x, y, vx, vy), a = force direction,
//   r = exp(-|p|^2 / reward_scale^2) at the successor state.
class PointMass2D final : public Environment {
 public:
  struct Params {
    double gain = 60.0;     // acceleration per unit action
    double damping = 2.0;   // viscous velocity damping
    double reward_scale = 0.35;
    int substeps = 2;
  };

  PointMass2D() : PointMass2D(Params{}) {}
  explicit PointMass2D(Params params);
  const EnvSpec& spec() const override { return spec_; }
  const Params& params() const { return params_; }
  Vector Reset(Rng& rng) const override;
  void StepKernel(const double* s, const double* a, double* s_next,
                  double* reward) const override;

 private:
  EnvSpec spec_;
  Params params_;
};

// Torque-limited rigid pendulum. theta = 0 is upright.
//   s = (cos theta, sin theta, omega), r = (1 + cos theta) / 2.
class PendulumSwingup final : public Environment {
 public:
  struct Params {
    double gravity = 9.81;
    double length = 1.0;
    double mass = 1.0;
    double damping = 0.05;
    double max_torque = 10.0;
    int substeps = 4;
  };

  PendulumSwingup() : PendulumSwingup(Params{}) {}
  explicit PendulumSwingup(Params params);
  const EnvSpec& spec() const override { return spec_; }
  const Params& params() const { return params_; }
  Vector Reset(Rng& rng) const override;
  void StepKernel(const double* s, const double* a, double* s_next,
                  double* reward) const override;

  // Kinetic plus potential energy, zero when hanging at rest.
  double Energy(const Vector& s) const;

 private:
  EnvSpec spec_;
  Params params_;
};

// Cart-pole swing-up from the hanging position. theta = 0 is upright.
//   s = (x, cos theta, sin theta, x_dot, theta_dot).
// Dense reward: (1 + cos theta)/2 * (3 + exp(-x^2))/4.
// Sparse reward: 1 when |theta| < 15 degrees, else 0.
class CartpoleSwingup final : public Environment {
 public:
  struct Params {
    double gravity = 9.81;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.25;
    double max_force = 20.0;
    double sparse_angle_deg = 15.0;
    int substeps = 4;
  };

  explicit CartpoleSwingup(bool sparse) : CartpoleSwingup(sparse, Params{}) {}
  CartpoleSwingup(bool sparse, Params params);
  const EnvSpec& spec() const override { return spec_; }
  bool sparse() const { return sparse_; }
  Vector Reset(Rng& rng) const override;
  void StepKernel(const double* s, const double* a, double* s_next,
                  double* reward) const override;

 private:
  EnvSpec spec_;
  Params params_;
  bool sparse_;
  double cos_threshold_;
};

// Registry: "point_mass", "pendulum", "cartpole", "cartpole_sparse".
std::unique_ptr<Environment> MakeEnvironment(std::string_view name);
std::vector<std::string> EnvironmentNames();

// Ground-truth simulator as a planning model: latents are raw states, no
// terminal value and no policy.
class SimulatorModel final : public PlanningModel {
 public:
  explicit SimulatorModel(const Environment& env) : env_(env) {}

  int action_dim() const override { return env_.spec().action_dim; }
  Matrix Encode(const Vector& state) const override { return state; }
  void Step(const Matrix& z, const Matrix& a, Matrix* z_next,
            RowVector* reward) const override {
    env_.StepBatch(z, a, z_next, reward);
  }
  RowVector TerminalValue(const Matrix& z) const override {
    return RowVector::Zero(z.cols());
  }

 private:
  const Environment& env_;
};

// Planner settings of the simulator MPC baseline: horizon 10, 200 samples,
// top-20 elites, 4 iterations, no discounting, no schedules.
PlanConfig MpcSimConfig();

struct Episode {
  Matrix states;   // obs_dim x (T + 1)
  Matrix actions;  // action_dim x T
  Vector rewards;  // T
  double Return() const { return rewards.sum(); }
};

// One episode of receding-horizon planning with the true simulator.
Episode RunMpcSimEpisode(const Environment& env, const PlanConfig& config,
                         uint64_t seed);

// Writes t, s..., a..., r rows.
void WriteTrajectoryCsv(const std::filesystem::path& path,
                        const Episode& episode);

}  // namespace tdmpc

#endif  // TDMPC_ENVS_H_
