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

#ifndef TDMPC_PLANNER_H_
#define TDMPC_PLANNER_H_

#include <cstdint>
#include <vector>

#include "tdmpc/network.h"
#include "tdmpc/rng.h"
#include "tdmpc/told.h"

namespace tdmpc {

// What the planner needs from a model: encode a state, advance a batch of
// latents, and (optionally) a terminal value and a guiding policy.
class PlanningModel {
 public:
  virtual ~PlanningModel() = default;

  virtual int action_dim() const = 0;
  // Returns a single latent column for `state`.
  virtual Matrix Encode(const Vector& state) const = 0;
  // Batched transition: columns of z and a are independent candidates.
  virtual void Step(const Matrix& z, const Matrix& a, Matrix* z_next,
                    RowVector* reward) const = 0;
  // Terminal value estimate at z (zeros for value-free planning).
  virtual RowVector TerminalValue(const Matrix& z) const = 0;
  virtual bool has_policy() const { return false; }
  virtual Matrix Policy(const Matrix& z) const;
};

// TOLD-backed model: R and d for transitions, min(Q1, Q2)(z, pi(z)) as the
// terminal value, pi as the guide.
class ToldPlanningModel final : public PlanningModel {
 public:
  explicit ToldPlanningModel(const ToldModel& model) : model_(model) {}

  int action_dim() const override { return model_.action_dim(); }
  Matrix Encode(const Vector& state) const override;
  void Step(const Matrix& z, const Matrix& a, Matrix* z_next,
            RowVector* reward) const override;
  RowVector TerminalValue(const Matrix& z) const override;
  bool has_policy() const override { return true; }
  Matrix Policy(const Matrix& z) const override;

 private:
  const ToldModel& model_;
};

// Linear interpolation from `start` to `end` over `duration` steps, constant
// afterwards.
struct LinearSchedule {
  double start = 0.5;
  double end = 0.05;
  int64_t duration = 25000;

  double At(int64_t step) const;
};

struct PlanConfig {
  int horizon = 5;
  int iterations = 6;
  int num_samples = 512;
  int num_elites = 64;
  int num_policy_samples = 25;  // 5% of 512
  double temperature = 0.5;
  double momentum = 0.1;
  double init_std = 2.0;
  double discount = 0.99;
  // Std floor for the sampling distribution; also the noise scale of the
  // policy-guided samples.
  LinearSchedule min_std{0.5, 0.05, 25000};
  // Planning horizon grows from 1 to `horizon` over this many steps; 0 turns
  // the schedule off.
  int64_t horizon_schedule_steps = 25000;

  int EffectiveHorizon(int64_t step) const;
  void Validate() const;
};

// Per-timestep diagonal Gaussian over action sequences. Column t holds the
// parameters of the action at step t (action_dim x horizon).
struct PlanDistribution {
  Matrix mean;
  Matrix std;
};

struct ScoredTrajectory {
  Matrix actions;  // action_dim x horizon
  double phi = 0.0;
};

// Weighted elite refit with exponentiated, max-subtracted returns, std floor,
// momentum blend of the previous mean, and clipping of the mean to [-1, 1].
// Non-finite elites are ignored; if none remain `prev` is returned and
// `degenerate` (when given) is set.
PlanDistribution Refit(const std::vector<ScoredTrajectory>& elites,
                       const PlanDistribution& prev, double temperature,
                       double momentum, double min_std,
                       bool* degenerate = nullptr);

// Discounted model return of each candidate (columns of `actions[t]`), plus
// discount^H times the terminal value at z_H.
RowVector EstimateReturns(const PlanningModel& model, const Matrix& z0,
                          const std::vector<Matrix>& actions, double discount);

struct PlanTelemetry {
  int iterations = 0;
  int horizon = 0;
  double elite_phi_mean = 0.0;
  double elite_phi_max = 0.0;
  double final_std_mean = 0.0;
  int discarded = 0;  // candidates with non-finite return
};

struct PlanResult {
  bool ok = false;
  Vector action;
  // Final mean, padded with zeros to PlanConfig::horizon columns; the warm
  // start for the next decision step.
  Matrix mean;
  PlanTelemetry telemetry;
};

// Decision-time trajectory optimization from `state`. `prev_mean`
// (action_dim x horizon, or empty) is shifted by one step to warm start the
// mean. Randomness comes from one draw of `rng`, split into per-candidate
// substreams.
PlanResult Plan(const PlanningModel& model, const Vector& state,
                const Matrix& prev_mean, int64_t step, const PlanConfig& config,
                Rng& rng);

// clip(pi(h(s)) + N(0, noise_scale^2), -1, 1).
Vector PolicyOnlyAction(const ToldModel& model, const Vector& state,
                        double noise_scale, Rng& rng);

}  // namespace tdmpc

#endif  // TDMPC_PLANNER_H_
