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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.h"

namespace tdmpc {
namespace {

using ::tdmpc::testing::ReadFile;
using ::tdmpc::testing::TempDir;
using ::tdmpc::testing::UniformMatrix;

TrainConfig TinyConfig() {
  TrainConfig c;
  c.env = "point_mass";
  c.seed = 3;
  c.total_steps = 1000;
  c.seed_steps = 500;
  c.eval_frequency = 0;
  c.eval_episodes = 1;
  c.mlp_hidden_size = 8;
  c.encoder_hidden_size = 8;
  c.latent_dimension = 4;
  c.batch_size = 4;
  c.population_size = 16;
  c.elite_fraction = 2;
  c.iterations = 2;
  c.planning_horizon = 3;
  c.policy_fraction = 0.125;
  return c;
}

TEST(TrainerTest, SeedPhaseMakesNoModelQueries) {
  Trainer trainer(TinyConfig());
  trainer.CollectEpisode();
  trainer.CollectEpisode();
  EXPECT_EQ(trainer.env_step(), 500);
  EXPECT_EQ(trainer.model_queries(), 0);
  trainer.CollectEpisode();
  EXPECT_EQ(trainer.model_queries(), 250);
}

TEST(TrainerTest, EpisodeLengthMatchesEnvironment) {
  Trainer trainer(TinyConfig());
  const Episode episode = trainer.CollectEpisode();
  EXPECT_EQ(episode.rewards.size(), 250);
  EXPECT_EQ(episode.states.cols(), 251);
  EXPECT_EQ(trainer.buffer().num_transitions(), 250);
  EXPECT_LE(episode.actions.cwiseAbs().maxCoeff(), 1.0);
}

TEST(TrainerTest, SeedOnlyRunMakesNoUpdates) {
  TrainConfig c = TinyConfig();
  c.seed_steps = 5000;
  c.total_steps = 5000;
  Trainer trainer(c);
  const TrainResult result = trainer.Run();
  EXPECT_EQ(result.updates, 0);
  EXPECT_EQ(result.ema_updates, 0);
  EXPECT_EQ(trainer.buffer().num_transitions(), 5000);
  EXPECT_EQ(trainer.model_queries(), 0);
}

TEST(TrainerTest, OneUpdatePerPostSeedStepAndEmaEveryOther) {
  TrainConfig c = TinyConfig();
  c.seed_steps = 300;
  Trainer trainer(c);
  int64_t post_seed = 0;
  for (int e = 0; e < 4; ++e) {
    trainer.CollectEpisode();
    trainer.Update();
    post_seed = std::max<int64_t>(0, trainer.env_step() - c.seed_steps);
    EXPECT_EQ(trainer.num_updates(), post_seed) << e;
    EXPECT_EQ(trainer.num_ema_updates(), post_seed / 2) << e;
  }
  EXPECT_EQ(post_seed, 700);
}

TEST(TrainerTest, GradientStepCadenceFollowsConfig) {
  TrainConfig c = TinyConfig();
  c.seed_steps = 250;
  c.steps_per_gradient_update = 4;
  c.target_update_frequency = 3;
  Trainer trainer(c);
  for (int e = 0; e < 3; ++e) {
    trainer.CollectEpisode();
    trainer.Update();
  }
  EXPECT_EQ(trainer.num_updates(), 500 / 4);
  EXPECT_EQ(trainer.num_ema_updates(), 500 / 4 / 3);
}

TEST(TrainerTest, SameConfigSameBytes) {
  TrainConfig c = TinyConfig();
  c.eval_frequency = 500;
  TempDir a, b;
  Trainer(c, a.path()).Run();
  Trainer(c, b.path()).Run();
  for (const char* name :
       {"metrics.jsonl", "summary.csv", "checkpoint_500.ckpt",
        "checkpoint_final.ckpt"}) {
    const std::string x = ReadFile(a / name);
    ASSERT_FALSE(x.empty()) << name;
    EXPECT_EQ(x, ReadFile(b / name)) << name;
  }
  EXPECT_TRUE(std::filesystem::exists(a / "timing.jsonl"));
}

TEST(TrainerTest, DifferentSeedsDiffer) {
  TrainConfig c = TinyConfig();
  TempDir a, b;
  Trainer(c, a.path()).Run();
  c.seed = 4;
  Trainer(c, b.path()).Run();
  EXPECT_NE(ReadFile(a / "metrics.jsonl"), ReadFile(b / "metrics.jsonl"));
}

TEST(TrainerTest, C3ZeroDropsConsistencyFromTotal) {
  TrainConfig c = TinyConfig();
  c.c3_zero = true;
  Trainer trainer(c);
  trainer.Run();
  int checked = 0;
  for (const EpisodeRecord& r : trainer.metrics().episodes()) {
    if (r.updates == 0) continue;
    EXPECT_GT(r.consistency_loss, 0.0);
    EXPECT_NEAR(r.total_loss, 0.5 * r.reward_loss + 0.1 * r.value_loss,
                1e-12 * (1.0 + std::abs(r.total_loss)));
    ++checked;
  }
  EXPECT_EQ(checked, 2);
}

TEST(TrainerTest, IdentityEncoderRunCompletes) {
  TrainConfig c = TinyConfig();
  c.identity_encoder = true;
  const TrainResult result = Trainer(c).Run();
  EXPECT_EQ(result.updates, 500);
  EXPECT_TRUE(std::isfinite(result.final_plan.mean));
}

TEST(TrainerTest, EvaluationLeavesTrainingStateAlone) {
  Trainer trainer(TinyConfig());
  for (int e = 0; e < 3; ++e) {
    trainer.CollectEpisode();
    trainer.Update();
  }
  const int64_t transitions = trainer.buffer().num_transitions();
  const Vector params = trainer.model().q1.params();
  const EvalResult plan = trainer.EvaluateNow(EvalMode::kPlan);
  const EvalResult policy = trainer.EvaluateNow(EvalMode::kPolicy);
  EXPECT_EQ(plan.returns.size(), 1u);
  EXPECT_EQ(policy.returns.size(), 1u);
  EXPECT_EQ(trainer.buffer().num_transitions(), transitions);
  EXPECT_EQ(trainer.env_step(), 750);
  EXPECT_EQ(trainer.model().q1.params(), params);
  // Evaluation draws from its own stream: collection is unaffected.
  Trainer twin(TinyConfig());
  for (int e = 0; e < 3; ++e) {
    twin.CollectEpisode();
    twin.Update();
  }
  EXPECT_EQ(twin.CollectEpisode().actions, trainer.CollectEpisode().actions);
}

TEST(TrainerTest, DivergenceAborts) {
  TrainConfig c = TinyConfig();
  c.learning_rate = 1e300;
  TempDir dir;
  EXPECT_THROW(Trainer(c, dir.path()).Run(), DivergenceError);
  const auto dump = nlohmann::json::parse(ReadFile(dir / "divergence.json"));
  EXPECT_EQ(dump["nonfinite_streak"], Trainer::kMaxNonFiniteStreak + 1);
}

TEST(EvaluateTest, SeededAndReportsEveryEpisode) {
  const TrainConfig c = TinyConfig();
  const auto env = MakeEnvironment(c.env);
  Rng rng(1);
  const ToldModel model(c.Dims(4, 2), false, rng);
  const EvalResult a =
      Evaluate(model, *env, EvalMode::kPlan, 3, 11, c.Planner(), 0);
  const EvalResult b =
      Evaluate(model, *env, EvalMode::kPlan, 3, 11, c.Planner(), 0);
  ASSERT_EQ(a.returns.size(), 3u);
  EXPECT_EQ(a.returns, b.returns);
  double mean = 0.0;
  for (double r : a.returns) mean += r / 3;
  EXPECT_NEAR(a.mean, mean, 1e-12);
  EXPECT_GT(a.ms_per_step, 0.0);
}

TEST(EvaluateTest, UntrainedPolicyScoresLikeRandomActions) {
  const TrainConfig c = TinyConfig();
  const auto env = MakeEnvironment(c.env);
  const int episodes = 20;
  double random_total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(DeriveSeed(99, e));
    Vector s = env->Reset(rng);
    for (int t = 0; t < env->spec().episode_length; ++t) {
      const StepResult step = env->Step(s, UniformMatrix(2, 1, rng));
      random_total += step.reward;
      s = step.next_state;
    }
  }
  const double random_mean = random_total / episodes;
  Rng rng(1);
  const ToldModel model(c.Dims(4, 2), false, rng);
  const EvalResult untrained =
      Evaluate(model, *env, EvalMode::kPolicy, episodes, 7, c.Planner(), 0);
  EXPECT_NEAR(untrained.mean, random_mean,
              0.05 * env->spec().episode_length);
}

TEST(EvalModeTest, ParsesNames) {
  EXPECT_EQ(ParseEvalMode("plan"), EvalMode::kPlan);
  EXPECT_EQ(ParseEvalMode("policy"), EvalMode::kPolicy);
  EXPECT_STREQ(EvalModeName(EvalMode::kPolicy), "policy");
  EXPECT_THROW(ParseEvalMode("greedy"), ContractError);
}

TEST(BudgetSweepTest, FullGridPlusPolicyRow) {
  const TrainConfig c = TinyConfig();
  const auto env = MakeEnvironment(c.env);
  Rng rng(1);
  const ToldModel model(c.Dims(4, 2), false, rng);
  const std::vector<SweepRow> rows = BudgetSweep(
      model, *env, c.Planner(), 0, {1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5}, 1, 5);
  ASSERT_EQ(rows.size(), 31u);
  int i = 0;
  for (int j = 1; j <= 6; ++j) {
    for (int h = 1; h <= 5; ++h, ++i) {
      EXPECT_EQ(rows[i].iterations, j);
      EXPECT_EQ(rows[i].horizon, h);
      EXPECT_GT(rows[i].ms_per_step, 0.0);
    }
  }
  EXPECT_EQ(rows.back().iterations, 0);
  EXPECT_EQ(rows.back().horizon, 0);

  TempDir dir;
  WriteSweepCsv(dir / "sweep.csv", rows);
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "J,H,mean_return,std_return,ms_per_step");
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 31);
}

TEST(BudgetSweepTest, EmptyGridRejected) {
  const TrainConfig c = TinyConfig();
  const auto env = MakeEnvironment(c.env);
  Rng rng(1);
  const ToldModel model(c.Dims(4, 2), false, rng);
  EXPECT_THROW(BudgetSweep(model, *env, c.Planner(), 0, {}, {1}, 1, 5),
               ContractError);
  EXPECT_THROW(BudgetSweep(model, *env, c.Planner(), 0, {1}, {}, 1, 5),
               ContractError);
}

TEST(AgentCheckpointTest, RoundTripRestoresModelAndConfig) {
  TrainConfig c = TinyConfig();
  c.learning_rate = 3e-4;
  Trainer trainer(c);
  for (int e = 0; e < 3; ++e) {
    trainer.CollectEpisode();
    trainer.Update();
  }
  TempDir dir;
  trainer.SaveCheckpoint(dir / "agent.ckpt");
  const AgentCheckpoint loaded = LoadAgent(dir / "agent.ckpt");
  EXPECT_EQ(loaded.env_step, 750);
  EXPECT_EQ(loaded.config.learning_rate, 3e-4);
  EXPECT_EQ(ConfigToText(loaded.config), ConfigToText(c));
  EXPECT_EQ(loaded.model.policy.params(), trainer.model().policy.params());
  EXPECT_EQ(loaded.model.q2_target.params(),
            trainer.model().q2_target.params());
  EXPECT_EQ(loaded.model.encoder.params(), trainer.model().encoder.params());
}

TEST(AgentCheckpointTest, MetadataRecordsVersionAndEnv) {
  const TrainConfig c = TinyConfig();
  const auto env = MakeEnvironment(c.env);
  const auto meta = nlohmann::json::parse(AgentMetadata(c, env->spec(), 42));
  EXPECT_EQ(meta["artifact_version"], kArtifactVersion);
  EXPECT_EQ(meta["env_step"], 42);
  EXPECT_EQ(meta["env"]["name"], "point_mass");
}

TEST(AgentCheckpointTest, EnvSpecMismatchRejected) {
  const TrainConfig c = TinyConfig();
  const auto env = MakeEnvironment(c.env);
  EnvSpec wrong = env->spec();
  wrong.obs_dim = 7;
  Rng rng(1);
  const ToldModel model(c.Dims(4, 2), false, rng);
  TempDir dir;
  SaveAgent(dir / "agent.ckpt", model, c, wrong, 0);
  EXPECT_THROW(LoadAgent(dir / "agent.ckpt"), ContractError);
}

}  // namespace
}  // namespace tdmpc
