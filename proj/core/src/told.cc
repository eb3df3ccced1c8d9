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

#include "tdmpc/told.h"

#include <cmath>
#include <utility>

namespace tdmpc {
namespace {

void CheckBatch(const ToldModel& model, const SegmentBatch& batch) {
  const int h = batch.horizon();
  const int b = batch.batch_size();
  if (h < 1) throw ContractError("segment batch needs horizon >= 1");
  if (static_cast<int>(batch.states.size()) != h + 1 ||
      static_cast<int>(batch.rewards.size()) != h) {
    throw ContractError("segment batch needs H+1 states and H rewards");
  }
  if (batch.weights.size() != b) {
    throw ContractError("segment batch needs one importance weight per item");
  }
  for (const Matrix& s : batch.states) {
    if (s.rows() != model.obs_dim() || s.cols() != b) {
      throw ContractError("segment batch state block has wrong shape");
    }
  }
  for (int t = 0; t < h; ++t) {
    if (batch.actions[t].rows() != model.action_dim() ||
        batch.actions[t].cols() != b || batch.rewards[t].cols() != b) {
      throw ContractError("segment batch action/reward block has wrong shape");
    }
  }
}

}  // namespace

ToldModel::ToldModel(NetworkDims dims, bool identity_encoder, Rng& rng) {
  if (identity_encoder) {
    dims.latent_dim = dims.obs_dim;
    encoder = Network::Identity(NetworkRole::kEncoder, dims.obs_dim);
  } else {
    encoder = InitNetwork(NetworkRole::kEncoder, dims, rng);
  }
  dynamics = InitNetwork(NetworkRole::kDynamics, dims, rng);
  reward = InitNetwork(NetworkRole::kReward, dims, rng);
  q1 = InitNetwork(NetworkRole::kQ1, dims, rng);
  q2 = InitNetwork(NetworkRole::kQ2, dims, rng);
  policy = InitNetwork(NetworkRole::kPolicy, dims, rng);
  encoder_target = encoder;
  q1_target = q1;
  q2_target = q2;
}

Vector LossBreakdown::SegmentPriorities() const {
  if (td_errors.rows() == 0) return Vector();
  return td_errors.colwise().mean().transpose();
}

ToldGradients ToldGradients::ZerosLike(const ToldModel& model) {
  ToldGradients g;
  g.encoder = Vector::Zero(model.encoder.num_params());
  g.dynamics = Vector::Zero(model.dynamics.num_params());
  g.reward = Vector::Zero(model.reward.num_params());
  g.q1 = Vector::Zero(model.q1.num_params());
  g.q2 = Vector::Zero(model.q2.num_params());
  return g;
}

ToldOptimizer::ToldOptimizer(const ToldModel& model, double lr) {
  AdamOptions options;
  options.lr = lr;
  encoder = AdamState(model.encoder.num_params(), options);
  dynamics = AdamState(model.dynamics.num_params(), options);
  reward = AdamState(model.reward.num_params(), options);
  q1 = AdamState(model.q1.num_params(), options);
  q2 = AdamState(model.q2.num_params(), options);
  policy = AdamState(model.policy.num_params(), options);
}

Matrix Concat(const Eigen::Ref<const Matrix>& z,
              const Eigen::Ref<const Matrix>& a) {
  if (z.cols() != a.cols()) {
    throw ContractError("latent and action batches differ in size");
  }
  Matrix x(z.rows() + a.rows(), z.cols());
  x.topRows(z.rows()) = z;
  x.bottomRows(a.rows()) = a;
  return x;
}

Matrix Encode(const ToldModel& model, const Eigen::Ref<const Matrix>& states) {
  return model.encoder.Forward(states);
}

LatentRollout RolloutLatent(const ToldModel& model,
                            const Eigen::Ref<const Matrix>& z0,
                            const std::vector<Matrix>& actions) {
  if (actions.empty()) throw ContractError("rollout needs horizon >= 1");
  LatentRollout out;
  out.latents.push_back(z0);
  for (const Matrix& a : actions) {
    const Matrix x = Concat(out.latents.back(), a);
    out.rewards.push_back(model.reward.Forward(x));
    Matrix next = model.dynamics.Forward(x);
    if (!next.allFinite()) {
      throw DivergenceError("latent rollout produced a non-finite state");
    }
    out.latents.push_back(std::move(next));
  }
  return out;
}

RowVector MinQ(const Network& q1, const Network& q2, const Network& policy,
               const Eigen::Ref<const Matrix>& z) {
  const Matrix x = Concat(z, policy.Forward(z));
  return q1.Forward(x).cwiseMin(q2.Forward(x));
}

RowVector TdTarget(const ToldModel& model, const RowVector& rewards,
                   const Eigen::Ref<const Matrix>& next_states,
                   double discount) {
  if (discount == 0.0) return rewards;
  const Matrix z_next = model.encoder_target.Forward(next_states);
  return rewards +
         discount * MinQ(model.q1_target, model.q2_target, model.policy, z_next);
}

LossBreakdown ToldLoss(const ToldModel& model, const SegmentBatch& batch,
                       const LossCoefficients& coeffs, ToldGradients* grads,
                       std::vector<Matrix>* latents) {
  CheckBatch(model, batch);
  const int horizon = batch.horizon();
  const int b = batch.batch_size();
  const int latent = model.latent_dim();
  // Per-item factor w_b / B of the batch mean.
  const RowVector scale = batch.weights.transpose() / static_cast<double>(b);

  LossBreakdown out;
  out.td_errors.resize(horizon, b);

  const bool need_grad = grads != nullptr;
  const int m = model.action_dim();
  const int cols = horizon * b;

  // The latent rollout is sequential; every other head then runs once over
  // all H x B (latent, action) columns.
  Tape enc_tape, rew_tape, q1_tape, q2_tape;
  std::vector<Tape> dyn_tapes(horizon);
  std::vector<Matrix> latent_res(horizon);
  Matrix x_all(latent + m, cols);
  Matrix next_states(batch.states[0].rows(), cols);
  RowVector rewards(cols);

  Matrix z =
      model.encoder.Forward(batch.states[0], need_grad ? &enc_tape : nullptr);
  if (latents != nullptr) {
    latents->clear();
    latents->push_back(z);
  }
  for (int t = 0; t < horizon; ++t) {
    auto x = x_all.middleCols(t * b, b);
    x.topRows(latent) = z;
    x.bottomRows(m) = batch.actions[t];
    next_states.middleCols(t * b, b) = batch.states[t + 1];
    rewards.segment(t * b, b) = batch.rewards[t];
    z = model.dynamics.Forward(x, need_grad ? &dyn_tapes[t] : nullptr);
    latent_res[t] = z;
    if (latents != nullptr) latents->push_back(z);
  }

  const Matrix z_target = model.encoder_target.Forward(next_states);
  RowVector y = rewards;
  if (coeffs.discount != 0.0) {
    y += coeffs.discount *
         MinQ(model.q1_target, model.q2_target, model.policy, z_target);
  }
  const RowVector reward_res =
      model.reward.Forward(x_all, need_grad ? &rew_tape : nullptr) - rewards;
  const RowVector q1_res =
      model.q1.Forward(x_all, need_grad ? &q1_tape : nullptr) - y;
  const RowVector q2_res =
      model.q2.Forward(x_all, need_grad ? &q2_tape : nullptr) - y;

  double weight_t = 1.0;
  for (int t = 0; t < horizon; ++t) {
    latent_res[t] -= z_target.middleCols(t * b, b);
    const auto r = reward_res.segment(t * b, b);
    const auto e1 = q1_res.segment(t * b, b);
    const auto e2 = q2_res.segment(t * b, b);
    const RowVector consistency =
        latent_res[t].array().square().colwise().sum() / latent;
    out.reward_loss += weight_t * r.cwiseAbs2().dot(scale);
    out.value_loss += weight_t * (e1.cwiseAbs2() + e2.cwiseAbs2()).dot(scale);
    out.consistency_loss += weight_t * consistency.dot(scale);
    out.td_errors.row(t) = 0.5 * (e1.cwiseAbs() + e2.cwiseAbs());
    weight_t *= coeffs.rho;
  }
  out.total = coeffs.reward * out.reward_loss + coeffs.value * out.value_loss +
              coeffs.consistency * out.consistency_loss;
  out.finite = std::isfinite(out.total);
  if (!need_grad || !out.finite) return out;

  *grads = ToldGradients::ZerosLike(model);
  // Per-column factor lambda^t * w_b / B.
  RowVector col_scale(cols);
  for (int t = 0; t < horizon; ++t) {
    col_scale.segment(t * b, b) = std::pow(coeffs.rho, t) * scale;
  }
  Matrix dx_heads = model.reward.Backward(
      rew_tape, (2.0 * coeffs.reward) * reward_res.cwiseProduct(col_scale),
      &grads->reward);
  dx_heads += model.q1.Backward(
      q1_tape, (2.0 * coeffs.value) * q1_res.cwiseProduct(col_scale),
      &grads->q1);
  dx_heads += model.q2.Backward(
      q2_tape, (2.0 * coeffs.value) * q2_res.cwiseProduct(col_scale),
      &grads->q2);

  Matrix dz = Matrix::Zero(latent, b);
  for (int t = horizon - 1; t >= 0; --t) {
    const double w = std::pow(coeffs.rho, t);
    dz += (2.0 * coeffs.consistency * w / latent) * latent_res[t] *
          scale.asDiagonal();
    Matrix dx = model.dynamics.Backward(dyn_tapes[t], dz, &grads->dynamics);
    dx += dx_heads.middleCols(t * b, b);
    dz = dx.topRows(latent);
  }
  model.encoder.Backward(enc_tape, dz, &grads->encoder);
  return out;
}

LossBreakdown ToldUpdate(ToldModel& model, ToldOptimizer& optimizer,
                         const SegmentBatch& batch,
                         const LossCoefficients& coeffs,
                         std::vector<Matrix>* latents) {
  ToldGradients grads;
  LossBreakdown loss = ToldLoss(model, batch, coeffs, &grads, latents);
  if (!loss.finite) return loss;
  const double inv_h = 1.0 / batch.horizon();
  for (Vector* g : {&grads.encoder, &grads.dynamics, &grads.reward, &grads.q1,
                    &grads.q2}) {
    *g *= inv_h;
    if (!g->allFinite()) {
      loss.finite = false;
      return loss;
    }
  }
  AdamStep(model.encoder.params(), grads.encoder, optimizer.encoder);
  AdamStep(model.dynamics.params(), grads.dynamics, optimizer.dynamics);
  AdamStep(model.reward.params(), grads.reward, optimizer.reward);
  AdamStep(model.q1.params(), grads.q1, optimizer.q1);
  AdamStep(model.q2.params(), grads.q2, optimizer.q2);
  return loss;
}

double PolicyLoss(const ToldModel& model, const std::vector<Matrix>& latents,
                  double rho, Vector* policy_grad) {
  if (latents.empty()) throw ContractError("policy loss needs latents");
  const int latent = model.latent_dim();
  const Eigen::Index b = latents.front().cols();
  Matrix z(latent, b * static_cast<Eigen::Index>(latents.size()));
  // Per-column factor -lambda^t / B.
  RowVector dq(z.cols());
  double weight_t = 1.0;
  for (size_t t = 0; t < latents.size(); ++t) {
    if (latents[t].rows() != latent || latents[t].cols() != b) {
      throw ContractError("latents have inconsistent shapes");
    }
    z.middleCols(t * b, b) = latents[t];
    dq.segment(t * b, b).setConstant(-weight_t / static_cast<double>(b));
    weight_t *= rho;
  }
  Tape pi_tape, q_tape;
  const Matrix a = model.policy.Forward(z, policy_grad ? &pi_tape : nullptr);
  const RowVector q =
      model.q1.Forward(Concat(z, a), policy_grad ? &q_tape : nullptr);
  const double loss = q.dot(dq);
  if (policy_grad != nullptr) {
    const Matrix dx = model.q1.Backward(q_tape, dq, nullptr);
    model.policy.Backward(pi_tape, dx.bottomRows(a.rows()), policy_grad);
  }
  return loss;
}

double PolicyUpdate(ToldModel& model, ToldOptimizer& optimizer,
                    const std::vector<Matrix>& latents, double rho) {
  Vector grad = Vector::Zero(model.policy.num_params());
  const double loss = PolicyLoss(model, latents, rho, &grad);
  if (std::isfinite(loss)) {
    AdamStep(model.policy.params(), grad, optimizer.policy);
  }
  return loss;
}

void EmaUpdate(Network& target, const Network& online, double zeta) {
  if (!target.SameArchitecture(online)) {
    throw ContractError("EMA target and online network differ in shape");
  }
  target.params() = zeta * target.params() + (1.0 - zeta) * online.params();
}

void UpdateTargets(ToldModel& model, double zeta) {
  EmaUpdate(model.encoder_target, model.encoder, zeta);
  EmaUpdate(model.q1_target, model.q1, zeta);
  EmaUpdate(model.q2_target, model.q2, zeta);
}

Checkpoint ToCheckpoint(const ToldModel& model, std::string metadata) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  c.sections = {{"encoder", model.encoder},
                {"dynamics", model.dynamics},
                {"reward", model.reward},
                {"q1", model.q1},
                {"q2", model.q2},
                {"policy", model.policy},
                {"encoder_target", model.encoder_target},
                {"q1_target", model.q1_target},
                {"q2_target", model.q2_target}};
  return c;
}

ToldModel FromCheckpoint(const Checkpoint& checkpoint) {
  ToldModel m;
  m.encoder = checkpoint.Get("encoder");
  m.dynamics = checkpoint.Get("dynamics");
  m.reward = checkpoint.Get("reward");
  m.q1 = checkpoint.Get("q1");
  m.q2 = checkpoint.Get("q2");
  m.policy = checkpoint.Get("policy");
  m.encoder_target = checkpoint.Get("encoder_target");
  m.q1_target = checkpoint.Get("q1_target");
  m.q2_target = checkpoint.Get("q2_target");
  const int z = m.latent_dim();
  const int a = m.action_dim();
  if (m.dynamics.input_dim() != z + a || m.dynamics.output_dim() != z ||
      m.reward.input_dim() != z + a || m.q1.input_dim() != z + a ||
      m.q2.input_dim() != z + a || m.policy.input_dim() != z ||
      !m.encoder_target.SameArchitecture(m.encoder) ||
      !m.q1_target.SameArchitecture(m.q1) ||
      !m.q2_target.SameArchitecture(m.q2)) {
    throw ContractError("checkpoint networks have inconsistent dimensions");
  }
  return m;
}

}  // namespace tdmpc
