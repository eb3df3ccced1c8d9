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

#ifndef TDMPC_TOLD_H_
#define TDMPC_TOLD_H_

#include <string>
#include <vector>

#include "tdmpc/adam.h"
#include "tdmpc/checkpoint.h"
#include "tdmpc/network.h"
#include "tdmpc/rng.h"
#include "tdmpc/segment.h"

namespace tdmpc {

// Task-oriented latent dynamics model: encoder h, latent dynamics d, reward R,
// twin values Q1/Q2 and policy pi, plus slow-moving targets of h, Q1 and Q2.
struct ToldModel {
  ToldModel() = default;
  // With `identity_encoder` the encoder is the identity map and the latent
  // dimension becomes the observation dimension.
  ToldModel(NetworkDims dims, bool identity_encoder, Rng& rng);

  int obs_dim() const { return encoder.input_dim(); }
  int latent_dim() const { return encoder.output_dim(); }
  int action_dim() const { return policy.output_dim(); }
  bool identity_encoder() const { return encoder.layers().empty(); }

  Network encoder;
  Network dynamics;
  Network reward;
  Network q1;
  Network q2;
  Network policy;

  Network encoder_target;
  Network q1_target;
  Network q2_target;
};

struct LossCoefficients {
  double reward = 0.5;       // c1
  double value = 0.1;        // c2
  double consistency = 2.0;  // c3
  double rho = 0.5;          // temporal weight lambda
  double discount = 0.99;    // gamma
};

struct LossBreakdown {
  // Each term is already temporally weighted and averaged over the batch
  // (importance weighted).
  double reward_loss = 0.0;
  double value_loss = 0.0;
  double consistency_loss = 0.0;
  double total = 0.0;
  // |Q - y| averaged over the two heads, H x B.
  Matrix td_errors;
  bool finite = true;

  // Mean per-step TD error of every segment (length B); used as priority.
  Vector SegmentPriorities() const;
};

// Gradients of the TOLD objective, aligned with each network's parameters.
struct ToldGradients {
  Vector encoder;
  Vector dynamics;
  Vector reward;
  Vector q1;
  Vector q2;

  static ToldGradients ZerosLike(const ToldModel& model);
};

// One Adam state per trained network.
struct ToldOptimizer {
  ToldOptimizer() = default;
  ToldOptimizer(const ToldModel& model, double lr);

  AdamState encoder;
  AdamState dynamics;
  AdamState reward;
  AdamState q1;
  AdamState q2;
  AdamState policy;
};

// [z; a] stacked row-wise.
Matrix Concat(const Eigen::Ref<const Matrix>& z,
              const Eigen::Ref<const Matrix>& a);

Matrix Encode(const ToldModel& model, const Eigen::Ref<const Matrix>& states);

struct LatentRollout {
  std::vector<Matrix> latents;     // z_0 .. z_H, latent_dim x B
  std::vector<RowVector> rewards;  // r_0 .. r_{H-1}, 1 x B
};

// Unrolls the latent dynamics from z0 under `actions` (H entries, m x B).
// Throws DivergenceError if any latent becomes non-finite.
LatentRollout RolloutLatent(const ToldModel& model,
                            const Eigen::Ref<const Matrix>& z0,
                            const std::vector<Matrix>& actions);

// min(Q1, Q2) at (z, pi(z)) using the online or target value heads.
RowVector MinQ(const Network& q1, const Network& q2, const Network& policy,
               const Eigen::Ref<const Matrix>& z);

// y = r + discount * min(Q1-, Q2-)(z', pi(z')) with z' = h-(s_next).
RowVector TdTarget(const ToldModel& model, const RowVector& rewards,
                   const Eigen::Ref<const Matrix>& next_states,
                   double discount);

// Temporally weighted TOLD objective on a segment batch. When `grads` is not
// null it receives dJ/dtheta for h, d, R, Q1, Q2 (overwritten, unscaled).
LossBreakdown ToldLoss(const ToldModel& model, const SegmentBatch& batch,
                       const LossCoefficients& coeffs, ToldGradients* grads,
                       std::vector<Matrix>* latents = nullptr);

// One joint Adam step on h, d, R, Q1, Q2 with the gradient scaled by 1/H.
// Non-finite loss or gradient leaves the model untouched and returns a
// breakdown with finite == false. `latents` receives the rollout latents
// z_0..z_H (detached) for the subsequent policy update.
LossBreakdown ToldUpdate(ToldModel& model, ToldOptimizer& optimizer,
                         const SegmentBatch& batch,
                         const LossCoefficients& coeffs,
                         std::vector<Matrix>* latents = nullptr);

// -sum_t rho^t Q1(z_t, pi(z_t)), batch mean. Only the policy receives a
// gradient (accumulated into `policy_grad` when given).
double PolicyLoss(const ToldModel& model, const std::vector<Matrix>& latents,
                  double rho, Vector* policy_grad);

// Adam step on the policy parameters only; returns the loss.
double PolicyUpdate(ToldModel& model, ToldOptimizer& optimizer,
                    const std::vector<Matrix>& latents, double rho);

// target <- zeta * target + (1 - zeta) * online.
void EmaUpdate(Network& target, const Network& online, double zeta);

// Applies EmaUpdate to h-, Q1- and Q2-.
void UpdateTargets(ToldModel& model, double zeta);

Checkpoint ToCheckpoint(const ToldModel& model, std::string metadata);
ToldModel FromCheckpoint(const Checkpoint& checkpoint);

}  // namespace tdmpc

#endif  // TDMPC_TOLD_H_
