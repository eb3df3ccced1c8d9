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


#include "tdmpc/trainer.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "json.hpp"

namespace tdmpc {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

// Stream ids for DeriveSeed; one independent generator per consumer.
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kEnvStream = 2;
constexpr uint64_t kActionStream = 3;
constexpr uint64_t kReplayStream = 4;
constexpr uint64_t kEvalStream = 5;

double Millis(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

ToldModel MakeModel(const TrainConfig& config, const EnvSpec& spec) {
  Rng rng(DeriveSeed(static_cast<uint64_t>(config.seed), kInitStream));
  return ToldModel(config.Dims(spec.obs_dim, spec.action_dim),
                   config.identity_encoder, rng);
}

std::unique_ptr<Environment> RequireEnvironment(std::string_view name) {
  std::unique_ptr<Environment> env = MakeEnvironment(name);
  if (env == nullptr) {
    std::string msg = "unknown environment '" + std::string(name) +
                      "'; registered:";
    for (const std::string& n : EnvironmentNames()) msg += " " + n;
    throw ContractError(msg);
  }
  return env;
}

}  // namespace

EvalMode ParseEvalMode(std::string_view text) {
  if (text == "plan") return EvalMode::kPlan;
  if (text == "policy") return EvalMode::kPolicy;
  throw ContractError("eval mode must be 'plan' or 'policy', got '" +
                      std::string(text) + "'");
}

const char* EvalModeName(EvalMode mode) {
  return mode == EvalMode::kPlan ? "plan" : "policy";
}

EvalResult Evaluate(const ToldModel& model, const Environment& env,
                    EvalMode mode, int episodes, uint64_t seed,
                    const PlanConfig& plan, int64_t step) {
  if (episodes < 1) throw ContractError("evaluation needs >= 1 episode");
  const EnvSpec& spec = env.spec();
  ToldPlanningModel planning_model(model);
  EvalResult result;
  Clock::duration acting{};
  int64_t decisions = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(DeriveSeed(seed, static_cast<uint64_t>(e)));
    Vector s = env.Reset(rng);
    Matrix warm_start;
    double total = 0.0;
    for (int t = 0; t < spec.episode_length; ++t) {
      auto start = Clock::now();
      Vector a;
      if (mode == EvalMode::kPlan) {
        PlanResult p = Plan(planning_model, s, warm_start, step, plan, rng);
        if (p.ok) {
          a = std::move(p.action);
          warm_start = std::move(p.mean);
        } else {
          a = PolicyOnlyAction(model, s, 0.0, rng);
          warm_start.resize(0, 0);
        }
      } else {
        a = PolicyOnlyAction(model, s, 0.0, rng);
      }
      acting += Clock::now() - start;
      ++decisions;
      StepResult r = env.Step(s, a);
      if (!r.finite) {
        throw DivergenceError(spec.name + ": non-finite state in evaluation");
      }
      total += r.reward;
      s = std::move(r.next_state);
    }
    result.returns.push_back(total);
  }
  MeanStd(result.returns, &result.mean, &result.std);
  result.ms_per_step = Millis(acting) / static_cast<double>(decisions);
  return result;
}

std::vector<SweepRow> BudgetSweep(const ToldModel& model,
                                  const Environment& env,
                                  const PlanConfig& base, int64_t step,
                                  const std::vector<int>& iterations,
                                  const std::vector<int>& horizons,
                                  int episodes, uint64_t seed) {
  if (iterations.empty() || horizons.empty()) {
    throw ContractError("budget sweep needs a non-empty grid");
  }
  std::vector<SweepRow> rows;
  for (int j : iterations) {
    for (int h : horizons) {
      PlanConfig plan = base;
      plan.iterations = j;
      plan.horizon = h;
      plan.horizon_schedule_steps = 0;
      EvalResult r =
          Evaluate(model, env, EvalMode::kPlan, episodes, seed, plan, step);
      rows.push_back({j, h, r.mean, r.std, r.ms_per_step});
    }
  }
  EvalResult r =
      Evaluate(model, env, EvalMode::kPolicy, episodes, seed, base, step);
  rows.push_back({0, 0, r.mean, r.std, r.ms_per_step});
  return rows;
}

EvalResult MpcSimBaseline(const Environment& env, uint64_t seed, int episodes,
                          std::vector<Episode>* trajectories) {
  if (episodes < 1) throw ContractError("baseline needs >= 1 episode");
  const PlanConfig config = MpcSimConfig();
  EvalResult result;
  auto start = Clock::now();
  for (int i = 0; i < episodes; ++i) {
    Episode ep =
        RunMpcSimEpisode(env, config, DeriveSeed(seed, static_cast<uint64_t>(i)));
    result.returns.push_back(ep.Return());
    if (trajectories != nullptr) trajectories->push_back(std::move(ep));
  }
  MeanStd(result.returns, &result.mean, &result.std);
  result.ms_per_step =
      Millis(Clock::now() - start) /
      static_cast<double>(episodes * env.spec().episode_length);
  return result;
}

void WriteSweepCsv(const std::filesystem::path& path,
                   const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "J,H,mean_return,std_return,ms_per_step\n";
  for (const SweepRow& r : rows) {
    out << r.iterations << ',' << r.horizon << ',' << r.mean_return << ','
        << r.std_return << ',' << r.ms_per_step << '\n';
  }
}

std::string AgentMetadata(const TrainConfig& config, const EnvSpec& spec,
                          int64_t env_step) {
  ordered_json j;
  j["artifact_version"] = kArtifactVersion;
  j["env"] = {{"name", spec.name},
              {"obs_dim", spec.obs_dim},
              {"action_dim", spec.action_dim},
              {"episode_length", spec.episode_length},
              {"dt", spec.dt}};
  j["env_step"] = env_step;
  ordered_json c = ordered_json::object();
  for (const auto& [key, value] : ConfigEntries(config)) c[key] = value;
  j["config"] = c;
  return j.dump();
}

void SaveAgent(const std::filesystem::path& path, const ToldModel& model,
               const TrainConfig& config, const EnvSpec& spec,
               int64_t env_step) {
  SaveCheckpoint(path,
                 ToCheckpoint(model, AgentMetadata(config, spec, env_step)));
}

AgentCheckpoint LoadAgent(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  ordered_json meta;
  try {
    meta = ordered_json::parse(ckpt.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(path.string() + ": bad checkpoint metadata: " +
                        e.what());
  }
  if (!meta.contains("config") || !meta.contains("env")) {
    throw ContractError(path.string() + ": checkpoint lacks agent metadata");
  }
  AgentCheckpoint agent;
  for (const auto& [key, value] : meta["config"].items()) {
    SetConfigValue(agent.config, key, value.get<std::string>());
  }
  agent.env_step = meta.value("env_step", int64_t{0});

  const ordered_json& stored = meta["env"];
  std::unique_ptr<Environment> env =
      RequireEnvironment(stored["name"].get<std::string>());
  const EnvSpec& spec = env->spec();
  if (stored["obs_dim"].get<int>() != spec.obs_dim ||
      stored["action_dim"].get<int>() != spec.action_dim ||
      stored["episode_length"].get<int>() != spec.episode_length ||
      stored["dt"].get<double>() != spec.dt ||
      agent.config.env != spec.name) {
    throw ContractError(path.string() +
                        ": checkpoint does not match environment '" +
                        spec.name + "'");
  }
  agent.model = FromCheckpoint(ckpt);
  if (agent.model.obs_dim() != spec.obs_dim ||
      agent.model.action_dim() != spec.action_dim) {
    throw ContractError(path.string() + ": network shapes do not match '" +
                        spec.name + "'");
  }
  return agent;
}

Trainer::Trainer(const TrainConfig& config,
                 const std::filesystem::path& run_dir)
    : config_(config),
      run_dir_(run_dir),
      env_((config.Validate(), RequireEnvironment(config.env))),
      plan_(config.Planner()),
      coeffs_(config.Coefficients()),
      model_(MakeModel(config, env_->spec())),
      optimizer_(model_, config.learning_rate),
      buffer_(env_->spec().obs_dim, env_->spec().action_dim,
              static_cast<int>(config.planning_horizon), config.Per(),
              config.replay_buffer_size),
      env_rng_(DeriveSeed(static_cast<uint64_t>(config.seed), kEnvStream)),
      action_rng_(
          DeriveSeed(static_cast<uint64_t>(config.seed), kActionStream)),
      replay_rng_(
          DeriveSeed(static_cast<uint64_t>(config.seed), kReplayStream)) {
  metrics_ = run_dir_.empty() ? std::make_unique<MetricsLog>()
                              : std::make_unique<MetricsLog>(run_dir_);
}

Vector Trainer::SelectAction(const Vector& state, Matrix* warm_start,
                             EpisodeRecord* record) {
  const int m = env_->spec().action_dim;
  if (env_step_ < config_.seed_steps) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Vector a(m);
    for (int k = 0; k < m; ++k) a(k) = uniform(action_rng_);
    return a;
  }
  ++model_queries_;
  ToldPlanningModel planning_model(model_);
  PlanResult p =
      Plan(planning_model, state, *warm_start, env_step_, plan_, action_rng_);
  if (record != nullptr) {
    ++record->plan_calls;
    record->plan_horizon += p.telemetry.horizon;
    record->plan_elite_return += p.telemetry.elite_phi_mean;
    record->plan_std += p.telemetry.final_std_mean;
    record->plan_discarded += p.telemetry.discarded;
  }
  if (p.ok) {
    *warm_start = std::move(p.mean);
    return p.action;
  }
  if (record != nullptr) ++record->plan_failures;
  warm_start->resize(0, 0);
  return PolicyOnlyAction(model_, state, plan_.min_std.At(env_step_),
                          action_rng_);
}

Episode Trainer::CollectEpisode(EpisodeRecord* record) {
  const EnvSpec& spec = env_->spec();
  const int64_t start_step = env_step_;
  Episode ep;
  ep.states.resize(spec.obs_dim, spec.episode_length + 1);
  ep.actions.resize(spec.action_dim, spec.episode_length);
  ep.rewards.resize(spec.episode_length);

  Vector s = env_->Reset(env_rng_);
  ep.states.col(0) = s;
  Matrix warm_start;  // empty: the planner starts from zeros
  for (int t = 0; t < spec.episode_length; ++t) {
    const bool post_seed = env_step_ >= config_.seed_steps;
    Vector a = SelectAction(s, &warm_start, record);
    StepResult r = env_->Step(s, a);
    if (!r.finite) {
      throw DivergenceError(spec.name + ": non-finite state at env step " +
                            std::to_string(env_step_));
    }
    ep.actions.col(t) = a.cwiseMax(-1.0).cwiseMin(1.0);
    ep.rewards(t) = r.reward;
    s = std::move(r.next_state);
    ep.states.col(t + 1) = s;
    ++env_step_;
    if (post_seed) {
      const int64_t post = env_step_ - config_.seed_steps;
      if (post % config_.steps_per_gradient_update == 0) ++updates_owed_;
    }
  }
  buffer_.PushEpisode(ep.states, ep.actions, ep.rewards);
  ++episodes_;

  if (record != nullptr) {
    record->episode = episodes_;
    record->env_step = env_step_;
    record->episode_return = ep.Return();
    record->seed_phase = start_step < config_.seed_steps;
    record->exploration_std = plan_.min_std.At(env_step_);
    if (record->plan_calls > 0) {
      const double n = static_cast<double>(record->plan_calls);
      record->plan_horizon /= n;
      record->plan_elite_return /= n;
      record->plan_std /= n;
    }
  }
  return ep;
}

void Trainer::WriteDivergenceDump(const LossBreakdown& loss) const {
  if (run_dir_.empty()) return;
  ordered_json j;
  j["env_step"] = env_step_;
  j["updates"] = num_updates_;
  j["nonfinite_streak"] = nonfinite_streak_;
  j["last_loss"] = {{"reward", loss.reward_loss},
                    {"value", loss.value_loss},
                    {"consistency", loss.consistency_loss},
                    {"total", loss.total}};
  std::ofstream(run_dir_ / "divergence.json") << j.dump(2) << '\n';
}

void Trainer::Update(EpisodeRecord* record) {
  const int batch = static_cast<int>(config_.batch_size);
  const double zeta = config_.target_momentum_coefficient;
  int64_t finite = 0;
  for (; updates_owed_ > 0; --updates_owed_) {
    std::optional<SegmentBatch> segments = buffer_.Sample(batch, replay_rng_);
    if (!segments) break;
    std::vector<Matrix> latents;
    LossBreakdown loss =
        ToldUpdate(model_, optimizer_, *segments, coeffs_, &latents);
    ++num_updates_;
    if (loss.finite) {
      nonfinite_streak_ = 0;
      double pi_loss =
          PolicyUpdate(model_, optimizer_, latents, coeffs_.rho);
      buffer_.UpdatePriorities(segments->indices, loss.SegmentPriorities());
      ++finite;
      if (record != nullptr) {
        record->reward_loss += loss.reward_loss;
        record->value_loss += loss.value_loss;
        record->consistency_loss += loss.consistency_loss;
        record->total_loss += loss.total;
        record->policy_loss += pi_loss;
      }
    } else {
      ++nonfinite_streak_;
      if (record != nullptr) ++record->nonfinite_updates;
      if (nonfinite_streak_ > kMaxNonFiniteStreak) {
        WriteDivergenceDump(loss);
        throw DivergenceError(
            "training diverged: " + std::to_string(nonfinite_streak_) +
            " consecutive non-finite losses at env step " +
            std::to_string(env_step_));
      }
    }
    if (num_updates_ % config_.target_update_frequency == 0) {
      UpdateTargets(model_, zeta);
      ++num_ema_updates_;
    }
    if (record != nullptr) ++record->updates;
  }
  if (record != nullptr && finite > 0) {
    const double n = static_cast<double>(finite);
    record->reward_loss /= n;
    record->value_loss /= n;
    record->consistency_loss /= n;
    record->total_loss /= n;
    record->policy_loss /= n;
  }
}

EvalResult Trainer::EvaluateNow(EvalMode mode) const {
  return Evaluate(model_, *env_, mode, static_cast<int>(config_.eval_episodes),
                  DeriveSeed(static_cast<uint64_t>(config_.seed), kEvalStream,
                             static_cast<uint64_t>(env_step_)),
                  plan_, env_step_);
}

void Trainer::SaveCheckpoint(const std::filesystem::path& path) const {
  SaveAgent(path, model_, config_, env_->spec(), env_step_);
}

TrainResult Trainer::Run() {
  TrainResult result;
  auto log_eval = [&](EvalMode mode) {
    EvalResult r = EvaluateNow(mode);
    EvalRecord rec;
    rec.env_step = env_step_;
    rec.mode = EvalModeName(mode);
    rec.returns = r.returns;
    rec.mean = r.mean;
    rec.std = r.std;
    metrics_->Append(rec);
    return r;
  };

  while (env_step_ < config_.total_steps) {
    const int64_t before = env_step_;
    EpisodeRecord record;
    auto t0 = Clock::now();
    CollectEpisode(&record);
    auto t1 = Clock::now();
    Update(&record);
    auto t2 = Clock::now();
    metrics_->Append(record);
    TimingRecord timing;
    timing.episode = episodes_;
    timing.env_step = env_step_;
    timing.ms_per_decision_step =
        Millis(t1 - t0) / static_cast<double>(env_step_ - before);
    timing.ms_per_update =
        record.updates > 0
            ? Millis(t2 - t1) / static_cast<double>(record.updates)
            : 0.0;
    metrics_->Append(timing);

    const int64_t f = config_.eval_frequency;
    if (f > 0 && env_step_ < config_.total_steps &&
        before / f != env_step_ / f) {
      log_eval(EvalMode::kPlan);
      log_eval(EvalMode::kPolicy);
      if (!run_dir_.empty()) {
        SaveCheckpoint(run_dir_ /
                       ("checkpoint_" + std::to_string(env_step_) + ".ckpt"));
      }
    }
    metrics_->Flush();
  }

  result.final_plan = log_eval(EvalMode::kPlan);
  result.final_policy = log_eval(EvalMode::kPolicy);
  if (!run_dir_.empty()) SaveCheckpoint(run_dir_ / "checkpoint_final.ckpt");
  metrics_->Close();

  result.env_steps = env_step_;
  result.episodes = episodes_;
  result.updates = num_updates_;
  result.ema_updates = num_ema_updates_;
  return result;
}

}  // namespace tdmpc
