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

#include "tdmpc/envs.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace tdmpc {

StepResult Environment::Step(const Vector& s, const Vector& a) const {
  const EnvSpec& sp = spec();
  if (s.size() != sp.obs_dim || a.size() != sp.action_dim) {
    throw ContractError(sp.name + ": state or action has wrong dimension");
  }
  const Vector clipped = a.cwiseMax(-1.0).cwiseMin(1.0);
  StepResult out;
  out.next_state.resize(sp.obs_dim);
  StepKernel(s.data(), clipped.data(), out.next_state.data(), &out.reward);
  out.finite = out.next_state.allFinite() && std::isfinite(out.reward);
  return out;
}

void Environment::StepBatch(const Matrix& s, const Matrix& a, Matrix* s_next,
                            RowVector* reward) const {
  const EnvSpec& sp = spec();
  if (s.rows() != sp.obs_dim || a.rows() != sp.action_dim ||
      s.cols() != a.cols()) {
    throw ContractError(sp.name + ": batch has wrong shape");
  }
  s_next->resize(sp.obs_dim, s.cols());
  reward->resize(s.cols());
  double clipped[16];
  if (sp.action_dim > 16) throw ContractError("action dim too large");
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    for (int k = 0; k < sp.action_dim; ++k) {
      clipped[k] = std::clamp(a(k, c), -1.0, 1.0);
    }
    StepKernel(s.col(c).data(), clipped, s_next->col(c).data(),
               reward->data() + c);
  }
}

// --- PointMass2D -----------------------------------------------------------

PointMass2D::PointMass2D(Params params) : params_(params) {
  spec_ = {"point_mass", 4, 2, 250, 0.02};
}

Vector PointMass2D::Reset(Rng& rng) const {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector s = Vector::Zero(4);
  s(0) = u(rng);
  s(1) = u(rng);
  return s;
}

void PointMass2D::StepKernel(const double* s, const double* a, double* s_next,
                             double* reward) const {
  const double h = spec_.dt / params_.substeps;
  double x = s[0], y = s[1], vx = s[2], vy = s[3];
  for (int i = 0; i < params_.substeps; ++i) {
    vx += h * (params_.gain * a[0] - params_.damping * vx);
    vy += h * (params_.gain * a[1] - params_.damping * vy);
    x += h * vx;
    y += h * vy;
  }
  s_next[0] = x;
  s_next[1] = y;
  s_next[2] = vx;
  s_next[3] = vy;
  const double scale2 = params_.reward_scale * params_.reward_scale;
  *reward = std::exp(-(x * x + y * y) / scale2);
}

// --- PendulumSwingup -------------------------------------------------------

PendulumSwingup::PendulumSwingup(Params params) : params_(params) {
  spec_ = {"pendulum", 3, 1, 250, 0.02};
}

Vector PendulumSwingup::Reset(Rng& rng) const {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const double theta = std::numbers::pi + u(rng);
  Vector s(3);
  s << std::cos(theta), std::sin(theta), 0.0;
  return s;
}

void PendulumSwingup::StepKernel(const double* s, const double* a,
                                 double* s_next, double* reward) const {
  const Params& p = params_;
  const double inertia = p.mass * p.length * p.length;
  const double torque = p.max_torque * a[0];
  auto accel = [&](double theta, double omega) {
    return p.gravity / p.length * std::sin(theta) +
           (torque - p.damping * omega) / inertia;
  };
  const double h = spec_.dt / p.substeps;
  double theta = std::atan2(s[1], s[0]);
  double omega = s[2];
  // Kick-drift-kick leapfrog.
  for (int i = 0; i < p.substeps; ++i) {
    omega += 0.5 * h * accel(theta, omega);
    theta += h * omega;
    omega += 0.5 * h * accel(theta, omega);
  }
  s_next[0] = std::cos(theta);
  s_next[1] = std::sin(theta);
  s_next[2] = omega;
  *reward = 0.5 * (1.0 + s_next[0]);
}

double PendulumSwingup::Energy(const Vector& s) const {
  const Params& p = params_;
  const double cos_theta = s(0) / std::hypot(s(0), s(1));
  return 0.5 * p.mass * p.length * p.length * s(2) * s(2) +
         p.mass * p.gravity * p.length * (1.0 + cos_theta);
}

// --- CartpoleSwingup -------------------------------------------------------

CartpoleSwingup::CartpoleSwingup(bool sparse, Params params)
    : params_(params), sparse_(sparse) {
  spec_ = {sparse ? "cartpole_sparse" : "cartpole", 5, 1, 250, 0.02};
  cos_threshold_ = std::cos(params_.sparse_angle_deg * std::numbers::pi / 180);
}

Vector CartpoleSwingup::Reset(Rng& rng) const {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  const double x = u(rng);
  const double theta = std::numbers::pi + u(rng);
  Vector s(5);
  s << x, std::cos(theta), std::sin(theta), 0.0, 0.0;
  return s;
}

void CartpoleSwingup::StepKernel(const double* s, const double* a,
                                 double* s_next, double* reward) const {
  const Params& p = params_;
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pole_ml = p.pole_mass * p.half_length;
  const double force = p.max_force * a[0];
  struct Accel {
    double x, theta;
  };
  auto accel = [&](double theta, double theta_dot) {
    const double sin_t = std::sin(theta), cos_t = std::cos(theta);
    const double temp =
        (force + pole_ml * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc =
        (p.gravity * sin_t - cos_t * temp) /
        (p.half_length *
         (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
    return Accel{temp - pole_ml * theta_acc * cos_t / total_mass, theta_acc};
  };
  const double h = spec_.dt / p.substeps;
  double x = s[0];
  double theta = std::atan2(s[2], s[1]);
  double x_dot = s[3], theta_dot = s[4];
  for (int i = 0; i < p.substeps; ++i) {
    Accel acc = accel(theta, theta_dot);
    x_dot += 0.5 * h * acc.x;
    theta_dot += 0.5 * h * acc.theta;
    x += h * x_dot;
    theta += h * theta_dot;
    acc = accel(theta, theta_dot);
    x_dot += 0.5 * h * acc.x;
    theta_dot += 0.5 * h * acc.theta;
  }
  s_next[0] = x;
  s_next[1] = std::cos(theta);
  s_next[2] = std::sin(theta);
  s_next[3] = x_dot;
  s_next[4] = theta_dot;
  if (sparse_) {
    *reward = s_next[1] >= cos_threshold_ ? 1.0 : 0.0;
  } else {
    *reward = 0.5 * (1.0 + s_next[1]) * (3.0 + std::exp(-x * x)) / 4.0;
  }
}

// --- Registry --------------------------------------------------------------

std::unique_ptr<Environment> MakeEnvironment(std::string_view name) {
  if (name == "point_mass") return std::make_unique<PointMass2D>();
  if (name == "pendulum") return std::make_unique<PendulumSwingup>();
  if (name == "cartpole") return std::make_unique<CartpoleSwingup>(false);
  if (name == "cartpole_sparse") {
    return std::make_unique<CartpoleSwingup>(true);
  }
  std::string known;
  for (const std::string& n : EnvironmentNames()) known += " " + n;
  throw std::invalid_argument("unknown environment '" + std::string(name) +
                              "'; registered:" + known);
}

std::vector<std::string> EnvironmentNames() {
  return {"point_mass", "pendulum", "cartpole", "cartpole_sparse"};
}

// --- MPC with the ground-truth simulator ------------------------------------

PlanConfig MpcSimConfig() {
  PlanConfig c;
  c.horizon = 10;
  c.iterations = 4;
  c.num_samples = 200;
  c.num_elites = 20;
  c.num_policy_samples = 0;
  c.discount = 1.0;
  c.min_std = {0.05, 0.05, 0};
  c.horizon_schedule_steps = 0;
  return c;
}

Episode RunMpcSimEpisode(const Environment& env, const PlanConfig& config,
                         uint64_t seed) {
  const EnvSpec& sp = env.spec();
  Rng rng(seed);
  SimulatorModel model(env);
  Episode ep;
  ep.states.resize(sp.obs_dim, sp.episode_length + 1);
  ep.actions.resize(sp.action_dim, sp.episode_length);
  ep.rewards.resize(sp.episode_length);
  Vector s = env.Reset(rng);
  ep.states.col(0) = s;
  Matrix mean;
  for (int t = 0; t < sp.episode_length; ++t) {
    PlanResult plan = Plan(model, s, mean, /*step=*/0, config, rng);
    if (!plan.ok) throw DivergenceError(sp.name + ": MPC baseline failed");
    mean = plan.mean;
    StepResult step = env.Step(s, plan.action);
    if (!step.finite) throw DivergenceError(sp.name + ": non-finite state");
    ep.actions.col(t) = plan.action;
    ep.rewards(t) = step.reward;
    s = step.next_state;
    ep.states.col(t + 1) = s;
  }
  return ep;
}

void WriteTrajectoryCsv(const std::filesystem::path& path,
                        const Episode& episode) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "t";
  for (Eigen::Index k = 0; k < episode.states.rows(); ++k) out << ",s" << k;
  for (Eigen::Index k = 0; k < episode.actions.rows(); ++k) out << ",a" << k;
  out << ",r\n";
  for (Eigen::Index t = 0; t < episode.rewards.size(); ++t) {
    out << t;
    for (Eigen::Index k = 0; k < episode.states.rows(); ++k) {
      out << ',' << episode.states(k, t);
    }
    for (Eigen::Index k = 0; k < episode.actions.rows(); ++k) {
      out << ',' << episode.actions(k, t);
    }
    out << ',' << episode.rewards(t) << '\n';
  }
}

}  // namespace tdmpc
