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


#include "tdmpc/metrics.h"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace tdmpc {
namespace {

using nlohmann::ordered_json;

std::ofstream OpenAppend(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

}  // namespace

void MeanStd(const std::vector<double>& values, double* mean, double* std) {
  double m = 0.0;
  for (double v : values) m += v;
  m = values.empty() ? 0.0 : m / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - m) * (v - m);
  var = values.empty() ? 0.0 : var / static_cast<double>(values.size());
  *mean = m;
  *std = std::sqrt(var);
}

MetricsLog::MetricsLog(const std::filesystem::path& dir) : dir_(dir) {
  std::filesystem::create_directories(dir);
  metrics_ = OpenAppend(dir / "metrics.jsonl");
  timing_ = OpenAppend(dir / "timing.jsonl");
}

MetricsLog::~MetricsLog() {
  try {
    Close();
  } catch (...) {
  }
}

void MetricsLog::Append(const EpisodeRecord& r) {
  episodes_.push_back(r);
  if (!enabled()) return;
  ordered_json j;
  j["type"] = "episode";
  j["env_step"] = r.env_step;
  j["episode"] = r.episode;
  j["return"] = r.episode_return;
  j["seed_phase"] = r.seed_phase;
  j["updates"] = r.updates;
  j["nonfinite_updates"] = r.nonfinite_updates;
  j["loss"] = {{"reward", r.reward_loss},
               {"value", r.value_loss},
               {"consistency", r.consistency_loss},
               {"total", r.total_loss},
               {"policy", r.policy_loss}};
  j["planner"] = {{"calls", r.plan_calls},
                  {"failures", r.plan_failures},
                  {"horizon", r.plan_horizon},
                  {"elite_return", r.plan_elite_return},
                  {"std", r.plan_std},
                  {"discarded", r.plan_discarded},
                  {"exploration_std", r.exploration_std}};
  metrics_ << j.dump() << '\n';
}

void MetricsLog::Append(const EvalRecord& r) {
  evals_.push_back(r);
  if (!enabled()) return;
  ordered_json j;
  j["type"] = "eval";
  j["env_step"] = r.env_step;
  j["mode"] = r.mode;
  j["mean"] = r.mean;
  j["std"] = r.std;
  j["returns"] = r.returns;
  metrics_ << j.dump() << '\n';
}

void MetricsLog::Append(const TimingRecord& r) {
  if (!enabled()) return;
  ordered_json j;
  j["env_step"] = r.env_step;
  j["episode"] = r.episode;
  j["ms_per_decision_step"] = r.ms_per_decision_step;
  j["ms_per_update"] = r.ms_per_update;
  timing_ << j.dump() << '\n';
}

void MetricsLog::Flush() {
  if (!enabled()) return;
  metrics_.flush();
  timing_.flush();
}

void MetricsLog::Close() {
  if (!enabled() || closed_) return;
  closed_ = true;
  metrics_.close();
  timing_.close();
  std::ofstream csv(dir_ / "summary.csv");
  if (!csv) throw std::runtime_error("cannot write summary.csv");
  csv.precision(17);
  csv << "env_step,mode,mean_return,std_return,episodes\n";
  for (const EvalRecord& e : evals_) {
    csv << e.env_step << ',' << e.mode << ',' << e.mean << ',' << e.std << ','
        << e.returns.size() << '\n';
  }
}

}  // namespace tdmpc
