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


#ifndef TDMPC_METRICS_H_
#define TDMPC_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace tdmpc {

struct EpisodeRecord {
  int64_t episode = 0;
  int64_t env_step = 0;  // after the episode
  double episode_return = 0.0;
  bool seed_phase = false;
  int64_t updates = 0;  // gradient updates run after this episode
  int64_t nonfinite_updates = 0;
  // Losses averaged over the episode's finite updates.
  double reward_loss = 0.0;
  double value_loss = 0.0;
  double consistency_loss = 0.0;
  double total_loss = 0.0;
  double policy_loss = 0.0;
  // Planner telemetry averaged over the episode's decision steps.
  int64_t plan_calls = 0;
  int64_t plan_failures = 0;
  double plan_horizon = 0.0;
  double plan_elite_return = 0.0;
  double plan_std = 0.0;
  int64_t plan_discarded = 0;
  double exploration_std = 0.0;
};

struct EvalRecord {
  int64_t env_step = 0;
  std::string mode;  // "plan" or "policy"
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;
};

struct TimingRecord {
  int64_t episode = 0;
  int64_t env_step = 0;
  double ms_per_decision_step = 0.0;
  double ms_per_update = 0.0;
};

// Append-only run log. metrics.jsonl holds everything that is a pure
// function of (config, seed); wall-clock measurements go to timing.jsonl so
// the former stays byte-identical across reruns. summary.csv is rewritten
// from the accumulated records on Close().
class MetricsLog {
 public:
  MetricsLog() = default;  // discards everything
  explicit MetricsLog(const std::filesystem::path& dir);
  ~MetricsLog();

  MetricsLog(const MetricsLog&) = delete;
  MetricsLog& operator=(const MetricsLog&) = delete;

  bool enabled() const { return metrics_.is_open(); }

  void Append(const EpisodeRecord& record);
  void Append(const EvalRecord& record);
  void Append(const TimingRecord& record);
  void Flush();
  void Close();

  const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
  const std::vector<EvalRecord>& evals() const { return evals_; }

 private:
  std::filesystem::path dir_;
  std::ofstream metrics_;
  std::ofstream timing_;
  std::vector<EpisodeRecord> episodes_;
  std::vector<EvalRecord> evals_;
  bool closed_ = false;
};

// Mean and population standard deviation.
void MeanStd(const std::vector<double>& values, double* mean, double* std);

}  // namespace tdmpc

#endif  // TDMPC_METRICS_H_
