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


#ifndef TDMPC_TRAINER_H_
#define TDMPC_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tdmpc/config.h"
#include "tdmpc/envs.h"
#include "tdmpc/metrics.h"
#include "tdmpc/planner.h"
#include "tdmpc/replay_buffer.h"
#include "tdmpc/rng.h"
#include "tdmpc/told.h"

namespace tdmpc {

inline constexpr char kArtifactVersion[] = "0.1.0";

enum class EvalMode { kPlan, kPolicy };

// Accepts "plan" or "policy"; anything else throws ContractError.
EvalMode ParseEvalMode(std::string_view text);
const char* EvalModeName(EvalMode mode);

struct EvalResult {
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;
  double ms_per_step = 0.0;
};

// Runs `episodes` episodes without exploration noise: the planner keeps only
// its scheduled std floor at `step`, the policy acts deterministically.
// Episode e is seeded with DeriveSeed(seed, e). Touches no replay buffer.
EvalResult Evaluate(const ToldModel& model, const Environment& env,
                    EvalMode mode, int episodes, uint64_t seed,
                    const PlanConfig& plan, int64_t step);

struct SweepRow {
  int iterations = 0;  // J; 0 marks the policy-only row
  int horizon = 0;     // H; 0 marks the policy-only row
  double mean_return = 0.0;
  double std_return = 0.0;
  double ms_per_step = 0.0;
};

// Evaluates every (J, H) cell with the horizon schedule disabled, then the
// policy alone. Throws ContractError on an empty grid.
std::vector<SweepRow> BudgetSweep(const ToldModel& model,
                                  const Environment& env,
                                  const PlanConfig& base, int64_t step,
                                  const std::vector<int>& iterations,
                                  const std::vector<int>& horizons,
                                  int episodes, uint64_t seed);

// MPC:sim reference: plans with the true simulator and no terminal value.
// Episode i is seeded with DeriveSeed(seed, i). The returned mean is the
// denominator of the learning-performance ratios.
EvalResult MpcSimBaseline(const Environment& env, uint64_t seed, int episodes,
                          std::vector<Episode>* trajectories = nullptr);

void WriteSweepCsv(const std::filesystem::path& path,
                   const std::vector<SweepRow>& rows);

// A trained agent restored from disk together with its resolved config.
struct AgentCheckpoint {
  ToldModel model;
  TrainConfig config;
  int64_t env_step = 0;
};

std::string AgentMetadata(const TrainConfig& config, const EnvSpec& spec,
                          int64_t env_step);
void SaveAgent(const std::filesystem::path& path, const ToldModel& model,
               const TrainConfig& config, const EnvSpec& spec,
               int64_t env_step);
// Throws ContractError if the stored environment spec differs from the
// registered one of the same name.
AgentCheckpoint LoadAgent(const std::filesystem::path& path);

struct TrainResult {
  int64_t env_steps = 0;
  int64_t episodes = 0;
  int64_t updates = 0;
  int64_t ema_updates = 0;
  EvalResult final_plan;
  EvalResult final_policy;
};

class Trainer {
 public:
  // With an empty `run_dir` nothing is written to disk.
  explicit Trainer(const TrainConfig& config,
                   const std::filesystem::path& run_dir = {});

  // Collects one full episode into the replay buffer and advances the step
  // counter. Uniform-random actions during the seed phase, planning after.
  Episode CollectEpisode(EpisodeRecord* record = nullptr);

  // Runs the gradient updates owed for the post-seed steps collected since
  // the last call. Throws DivergenceError after too many consecutive
  // non-finite losses.
  void Update(EpisodeRecord* record = nullptr);

  // Collection and updates until total_steps, with periodic evaluation and
  // checkpoints; final evaluation in both modes.
  TrainResult Run();

  EvalResult EvaluateNow(EvalMode mode) const;
  void SaveCheckpoint(const std::filesystem::path& path) const;

  const TrainConfig& config() const { return config_; }
  const Environment& env() const { return *env_; }
  const ToldModel& model() const { return model_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const PlanConfig& plan_config() const { return plan_; }
  const MetricsLog& metrics() const { return *metrics_; }
  int64_t env_step() const { return env_step_; }
  int64_t episodes() const { return episodes_; }
  int64_t num_updates() const { return num_updates_; }
  int64_t num_ema_updates() const { return num_ema_updates_; }
  // Action-selection calls into the planner or the networks.
  int64_t model_queries() const { return model_queries_; }

  static constexpr int kMaxNonFiniteStreak = 10;

 private:
  Vector SelectAction(const Vector& state, Matrix* warm_start,
                      EpisodeRecord* record);
  void WriteDivergenceDump(const LossBreakdown& loss) const;

  TrainConfig config_;
  std::filesystem::path run_dir_;
  std::unique_ptr<Environment> env_;
  PlanConfig plan_;
  LossCoefficients coeffs_;
  ToldModel model_;
  ToldOptimizer optimizer_;
  ReplayBuffer buffer_;
  std::unique_ptr<MetricsLog> metrics_;

  Rng env_rng_;
  Rng action_rng_;
  Rng replay_rng_;

  int64_t env_step_ = 0;
  int64_t episodes_ = 0;
  int64_t updates_owed_ = 0;
  int64_t num_updates_ = 0;
  int64_t num_ema_updates_ = 0;
  int64_t model_queries_ = 0;
  int nonfinite_streak_ = 0;
};

}  // namespace tdmpc

#endif  // TDMPC_TRAINER_H_
