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


#include "tdmpc/config.h"

#include <filesystem>
#include <functional>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "test_util.h"

namespace tdmpc {
namespace {

std::string ErrorOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, DefaultsMatchReferenceHyperparameters) {
  const TrainConfig c;
  EXPECT_EQ(c.discount_factor, 0.99);
  EXPECT_EQ(c.seed_steps, 5000);
  EXPECT_EQ(c.planning_horizon, 5);
  EXPECT_EQ(c.initial_std, 2.0);
  EXPECT_EQ(c.population_size, 512);
  EXPECT_EQ(c.elite_fraction, 64);
  EXPECT_EQ(c.iterations, 6);
  EXPECT_EQ(c.policy_fraction, 0.05);
  EXPECT_EQ(c.temperature, 0.5);
  EXPECT_EQ(c.momentum_coefficient, 0.1);
  EXPECT_EQ(c.temporal_coefficient, 0.5);
  EXPECT_EQ(c.reward_loss_coefficient, 0.5);
  EXPECT_EQ(c.value_loss_coefficient, 0.1);
  EXPECT_EQ(c.consistency_loss_coefficient, 2.0);
  EXPECT_EQ(c.exploration_start, 0.5);
  EXPECT_EQ(c.exploration_end, 0.05);
  EXPECT_EQ(c.exploration_steps, 25000);
  EXPECT_EQ(c.planning_horizon_schedule_steps, 25000);
  EXPECT_EQ(c.batch_size, 512);
  EXPECT_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.target_momentum_coefficient, 0.99);
  EXPECT_EQ(c.target_update_frequency, 2);
  EXPECT_EQ(c.steps_per_gradient_update, 1);
  EXPECT_EQ(c.per_alpha, 0.6);
  EXPECT_EQ(c.per_beta, 0.4);
  EXPECT_EQ(c.mlp_hidden_size, 512);
  EXPECT_EQ(c.encoder_hidden_size, 256);
  EXPECT_EQ(c.latent_dimension, 50);
  EXPECT_FALSE(c.identity_encoder);
  EXPECT_FALSE(c.c3_zero);
  EXPECT_NO_THROW(c.Validate());
}

TEST(ConfigTest, PlannerDerivedFromConfig) {
  const PlanConfig p = TrainConfig().Planner();
  EXPECT_EQ(p.horizon, 5);
  EXPECT_EQ(p.num_samples, 512);
  EXPECT_EQ(p.num_elites, 64);
  EXPECT_EQ(p.num_policy_samples, 25);
  EXPECT_EQ(p.min_std.start, 0.5);
  EXPECT_EQ(p.min_std.end, 0.05);
  EXPECT_EQ(p.horizon_schedule_steps, 25000);
}

TEST(ConfigTest, C3ZeroDropsConsistencyCoefficient) {
  TrainConfig c;
  EXPECT_EQ(c.Coefficients().consistency, 2.0);
  c.c3_zero = true;
  EXPECT_EQ(c.Coefficients().consistency, 0.0);
  EXPECT_EQ(c.Coefficients().reward, 0.5);
  EXPECT_EQ(c.Coefficients().value, 0.1);
}

TEST(ConfigTest, DimsFollowSizes) {
  TrainConfig c;
  c.latent_dimension = 7;
  const NetworkDims d = c.Dims(4, 2);
  EXPECT_EQ(d.obs_dim, 4);
  EXPECT_EQ(d.action_dim, 2);
  EXPECT_EQ(d.latent_dim, 7);
  EXPECT_EQ(d.encoder_hidden, 256);
  EXPECT_EQ(d.mlp_hidden, 512);
}

TEST(ConfigTest, EveryKeyRoundTripsThroughText) {
  TrainConfig c;
  c.env = "cartpole";
  c.learning_rate = 3.0e-4;
  c.temperature = 0.1 + 0.2;
  c.seed = 123456789;
  c.c3_zero = true;
  const TrainConfig back = ParseConfigText(ConfigToText(c));
  for (const std::string& key : ConfigKeyNames()) {
    EXPECT_EQ(GetConfigValue(back, key), GetConfigValue(c, key)) << key;
  }
  EXPECT_EQ(back.temperature, c.temperature);
}

TEST(ConfigTest, KeyListCoversEntries) {
  const auto names = ConfigKeyNames();
  EXPECT_EQ(names.size(), ConfigKeys().size());
  EXPECT_EQ(names.size(), ConfigEntries(TrainConfig()).size());
}

TEST(ConfigTest, ParsesCommentsAndWhitespace) {
  const TrainConfig c = ParseConfigText(
      "# comment\n"
      "  env = pendulum   # trailing\n"
      "\n"
      "batch_size=64\n"
      "identity_encoder = true\n");
  EXPECT_EQ(c.env, "pendulum");
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_TRUE(c.identity_encoder);
}

TEST(ConfigTest, LaterValuesOverrideBase) {
  TrainConfig base;
  base.batch_size = 8;
  base.seed = 4;
  const TrainConfig c = ParseConfigText("seed = 9\n", base);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_EQ(c.seed, 9);
}

TEST(ConfigTest, UnknownKeyListsValidKeys) {
  const std::string message =
      ErrorOf([] { ParseConfigText("bacth_size = 3\n"); });
  EXPECT_NE(message.find("bacth_size"), std::string::npos);
  for (const std::string& key : ConfigKeyNames()) {
    EXPECT_NE(message.find(key), std::string::npos) << key;
  }
}

TEST(ConfigTest, MalformedValuesRejected) {
  TrainConfig c;
  EXPECT_THROW(SetConfigValue(c, "batch_size", "12x"), ConfigError);
  EXPECT_THROW(SetConfigValue(c, "batch_size", "1.5"), ConfigError);
  EXPECT_THROW(SetConfigValue(c, "learning_rate", "fast"), ConfigError);
  EXPECT_THROW(SetConfigValue(c, "learning_rate", "inf"), ConfigError);
  EXPECT_THROW(SetConfigValue(c, "c3_zero", "yes"), ConfigError);
  EXPECT_THROW(ParseConfigText("batch_size 3\n"), ConfigError);
}

TEST(ConfigTest, ValidateNamesOffendingKey) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_NE(ErrorOf([&c] { c.Validate(); }).find("batch_size"),
            std::string::npos);
  c = TrainConfig();
  c.discount_factor = 1.5;
  EXPECT_NE(ErrorOf([&c] { c.Validate(); }).find("discount_factor"),
            std::string::npos);
  c = TrainConfig();
  c.env = "acrobot";
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TrainConfig();
  c.elite_fraction = 10000;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig();
  c.per_alpha = 2.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ConfigTest, MissingFileNamesPath) {
  const std::string message = ErrorOf(
      [] { LoadConfigFile("/nonexistent/dir/run.cfg"); });
  EXPECT_NE(message.find("/nonexistent/dir/run.cfg"), std::string::npos);
}

TEST(ConfigTest, LoadsFile) {
  const testing::TempDir dir;
  const auto path = dir / "run.cfg";
  {
    std::ofstream out(path);
    out << "env = cartpole_sparse\ntotal_steps = 1234\n";
  }
  const TrainConfig c = LoadConfigFile(path);
  EXPECT_EQ(c.env, "cartpole_sparse");
  EXPECT_EQ(c.total_steps, 1234);
}

}  // namespace
}  // namespace tdmpc
