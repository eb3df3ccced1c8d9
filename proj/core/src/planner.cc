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

#include "tdmpc/planner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tdmpc {

Matrix PlanningModel::Policy(const Matrix& /*z*/) const {
  throw ContractError("planning model has no policy");
}

Matrix ToldPlanningModel::Encode(const Vector& state) const {
  return model_.encoder.Forward(state);
}

void ToldPlanningModel::Step(const Matrix& z, const Matrix& a, Matrix* z_next,
                             RowVector* reward) const {
  const Matrix x = Concat(z, a);
  *reward = model_.reward.Forward(x);
  *z_next = model_.dynamics.Forward(x);
}

RowVector ToldPlanningModel::TerminalValue(const Matrix& z) const {
  return MinQ(model_.q1, model_.q2, model_.policy, z);
}

Matrix ToldPlanningModel::Policy(const Matrix& z) const {
  return model_.policy.Forward(z);
}

double LinearSchedule::At(int64_t step) const {
  if (duration <= 0) return end;
  const double frac = std::clamp(
      static_cast<double>(step) / static_cast<double>(duration), 0.0, 1.0);
  return start + (end - start) * frac;
}

int PlanConfig::EffectiveHorizon(int64_t step) const {
  if (horizon_schedule_steps <= 0) return horizon;
  const LinearSchedule schedule{1.0, static_cast<double>(horizon),
                                horizon_schedule_steps};
  return std::clamp(static_cast<int>(std::floor(schedule.At(step))), 1,
                    horizon);
}

void PlanConfig::Validate() const {
  if (horizon < 1) throw ContractError("planner horizon must be >= 1");
  if (iterations < 1) throw ContractError("planner iterations must be >= 1");
  if (num_samples < 0 || num_policy_samples < 0) {
    throw ContractError("planner sample counts must be non-negative");
  }
  if (num_elites < 1 || num_elites > num_samples + num_policy_samples) {
    throw ContractError("planner needs 1 <= elites <= samples + policy samples");
  }
  if (!(init_std > 0.0) || !(min_std.start >= 0.0) || !(min_std.end >= 0.0)) {
    throw ContractError("planner std parameters must be positive");
  }
}

PlanDistribution Refit(const std::vector<ScoredTrajectory>& elites,
                       const PlanDistribution& prev, double temperature,
                       double momentum, double min_std, bool* degenerate) {
  if (elites.empty()) throw ContractError("refit needs at least one elite");
  if (degenerate != nullptr) *degenerate = false;

  double max_phi = -std::numeric_limits<double>::infinity();
  int finite = 0;
  for (const ScoredTrajectory& e : elites) {
    if (std::isfinite(e.phi) && e.actions.allFinite()) {
      max_phi = std::max(max_phi, e.phi);
      ++finite;
    }
  }
  if (finite == 0) {
    if (degenerate != nullptr) *degenerate = true;
    return prev;
  }

  const Eigen::Index rows = elites.front().actions.rows();
  const Eigen::Index cols = elites.front().actions.cols();
  std::vector<double> weights(elites.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < elites.size(); ++i) {
    const ScoredTrajectory& e = elites[i];
    if (e.actions.rows() != rows || e.actions.cols() != cols) {
      throw ContractError("elite trajectories differ in shape");
    }
    if (std::isfinite(e.phi) && e.actions.allFinite()) {
      weights[i] = std::exp(temperature * (e.phi - max_phi));
      total += weights[i];
    }
  }

  Matrix mean = Matrix::Zero(rows, cols);
  for (size_t i = 0; i < elites.size(); ++i) {
    if (weights[i] > 0.0) mean += (weights[i] / total) * elites[i].actions;
  }
  Matrix var = Matrix::Zero(rows, cols);
  for (size_t i = 0; i < elites.size(); ++i) {
    if (weights[i] > 0.0) {
      var += (weights[i] / total) *
             (elites[i].actions - mean).array().square().matrix();
    }
  }

  PlanDistribution out;
  out.std = var.cwiseSqrt().cwiseMax(min_std);
  if (prev.mean.rows() == rows && prev.mean.cols() == cols) {
    out.mean = momentum * prev.mean + (1.0 - momentum) * mean;
  } else {
    out.mean = mean;
  }
  out.mean = out.mean.cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

RowVector EstimateReturns(const PlanningModel& model, const Matrix& z0,
                          const std::vector<Matrix>& actions,
                          double discount) {
  if (actions.empty()) throw ContractError("return estimate needs horizon >= 1");
  const Eigen::Index n = actions.front().cols();
  Matrix z = z0.col(0).replicate(1, n);
  RowVector phi = RowVector::Zero(n);
  Matrix z_next;
  RowVector reward;
  double weight = 1.0;
  for (const Matrix& a : actions) {
    model.Step(z, a, &z_next, &reward);
    phi += weight * reward;
    z.swap(z_next);
    weight *= discount;
  }
  phi += weight * model.TerminalValue(z);
  return phi;
}

PlanResult Plan(const PlanningModel& model, const Vector& state,
                const Matrix& prev_mean, int64_t step, const PlanConfig& config,
                Rng& rng) {
  config.Validate();
  const int m = model.action_dim();
  const int horizon = config.EffectiveHorizon(step);
  const double min_std = config.min_std.At(step);
  const int num_policy = model.has_policy() ? config.num_policy_samples : 0;
  const int num_gauss = config.num_samples;
  const int total = num_gauss + num_policy;
  const int num_elites = std::min(config.num_elites, total);
  const uint64_t seed = rng();

  PlanResult result;
  result.telemetry.horizon = horizon;
  result.mean = Matrix::Zero(m, config.horizon);

  // Warm start: previous solution shifted one step, last step zero-filled.
  PlanDistribution dist;
  dist.mean = Matrix::Zero(m, horizon);
  if (prev_mean.size() > 0) {
    if (prev_mean.rows() != m) {
      throw ContractError("warm-start mean has wrong action dimension");
    }
    const Eigen::Index shifted =
        std::min<Eigen::Index>(horizon, prev_mean.cols() - 1);
    if (shifted > 0) {
      dist.mean.leftCols(shifted) = prev_mean.middleCols(1, shifted);
    }
  }
  dist.std = Matrix::Constant(m, horizon, config.init_std);

  Matrix z0;
  try {
    z0 = model.Encode(state);
  } catch (const DivergenceError&) {
    return result;
  }
  if (!z0.allFinite()) return result;

  std::vector<Matrix> actions(horizon, Matrix(m, total));
  std::vector<int> order(total);
  std::vector<ScoredTrajectory> elites(num_elites);
  for (int iter = 0; iter < config.iterations; ++iter) {
    for (int c = 0; c < num_gauss; ++c) {
      SplitMix64 gen(DeriveSeed(seed, static_cast<uint64_t>(iter),
                                static_cast<uint64_t>(c)));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int t = 0; t < horizon; ++t) {
        for (int k = 0; k < m; ++k) {
          const double a = dist.mean(k, t) + dist.std(k, t) * normal(gen);
          actions[t](k, c) = std::clamp(a, -1.0, 1.0);
        }
      }
    }
    if (num_policy > 0) {
      Matrix z = z0.col(0).replicate(1, num_policy);
      Matrix z_next;
      RowVector unused;
      std::vector<SplitMix64> gens;
      gens.reserve(num_policy);
      for (int c = 0; c < num_policy; ++c) {
        gens.emplace_back(DeriveSeed(seed, static_cast<uint64_t>(iter),
                                     static_cast<uint64_t>(num_gauss + c)));
      }
      for (int t = 0; t < horizon; ++t) {
        Matrix a = model.Policy(z);
        for (int c = 0; c < num_policy; ++c) {
          std::normal_distribution<double> normal(0.0, 1.0);
          for (int k = 0; k < m; ++k) {
            a(k, c) = std::clamp(a(k, c) + min_std * normal(gens[c]), -1.0,
                                 1.0);
          }
        }
        actions[t].rightCols(num_policy) = a;
        if (t + 1 < horizon) {
          model.Step(z, a, &z_next, &unused);
          z.swap(z_next);
        }
      }
    }

    RowVector phi;
    try {
      phi = EstimateReturns(model, z0, actions, config.discount);
    } catch (const DivergenceError&) {
      return result;
    }
    int discarded = 0;
    for (int c = 0; c < total; ++c) {
      if (!std::isfinite(phi(c))) {
        phi(c) = -std::numeric_limits<double>::infinity();
        ++discarded;
      }
    }
    result.telemetry.discarded += discarded;
    if (discarded == total) return result;

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&phi](int a, int b) { return phi(a) > phi(b); });
    double phi_sum = 0.0;
    int phi_count = 0;
    for (int i = 0; i < num_elites; ++i) {
      const int c = order[i];
      elites[i].phi = phi(c);
      elites[i].actions.resize(m, horizon);
      for (int t = 0; t < horizon; ++t) {
        elites[i].actions.col(t) = actions[t].col(c);
      }
      if (std::isfinite(phi(c))) {
        phi_sum += phi(c);
        ++phi_count;
      }
    }
    bool degenerate = false;
    dist = Refit(elites, dist, config.temperature, config.momentum, min_std,
                 &degenerate);
    if (degenerate) return result;
    result.telemetry.iterations = iter + 1;
    result.telemetry.elite_phi_max = phi(order[0]);
    result.telemetry.elite_phi_mean = phi_sum / std::max(phi_count, 1);
  }

  SplitMix64 gen(DeriveSeed(seed, static_cast<uint64_t>(config.iterations),
                            std::numeric_limits<uint64_t>::max()));
  std::normal_distribution<double> normal(0.0, 1.0);
  result.action.resize(m);
  for (int k = 0; k < m; ++k) {
    result.action(k) = std::clamp(
        dist.mean(k, 0) + dist.std(k, 0) * normal(gen), -1.0, 1.0);
  }
  result.mean.leftCols(horizon) = dist.mean;
  result.telemetry.final_std_mean = dist.std.mean();
  result.ok = result.action.allFinite();
  return result;
}

Vector PolicyOnlyAction(const ToldModel& model, const Vector& state,
                        double noise_scale, Rng& rng) {
  Vector a = model.policy.Forward(model.encoder.Forward(state));
  if (noise_scale > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_scale);
    for (Eigen::Index k = 0; k < a.size(); ++k) a(k) += normal(rng);
  }
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace tdmpc
