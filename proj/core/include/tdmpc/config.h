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


#ifndef TDMPC_CONFIG_H_
#define TDMPC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdmpc/network.h"
#include "tdmpc/planner.h"
#include "tdmpc/replay_buffer.h"
#include "tdmpc/told.h"

namespace tdmpc {

// Raised for malformed or unknown configuration entries.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Every knob of a training run. Defaults follow the reference hyperparameter
// table; key names are the snake_case form of the table rows.
struct TrainConfig {
  // Run.
  std::string env = "point_mass";
  int64_t seed = 1;
  int64_t total_steps = 100000;
  int64_t eval_frequency = 2500;
  int64_t eval_episodes = 10;

  // Learning.
  double discount_factor = 0.99;
  int64_t seed_steps = 5000;
  int64_t replay_buffer_size = 1000000;
  double per_alpha = 0.6;
  double per_beta = 0.4;
  double per_eps = 1e-6;
  int64_t mlp_hidden_size = 512;
  int64_t encoder_hidden_size = 256;
  int64_t latent_dimension = 50;
  double learning_rate = 1e-3;
  double temporal_coefficient = 0.5;
  double reward_loss_coefficient = 0.5;
  double value_loss_coefficient = 0.1;
  double consistency_loss_coefficient = 2.0;
  int64_t batch_size = 512;
  double target_momentum_coefficient = 0.99;
  int64_t steps_per_gradient_update = 1;
  int64_t target_update_frequency = 2;

  // Planning.
  int64_t planning_horizon = 5;
  double initial_std = 2.0;
  int64_t population_size = 512;
  int64_t elite_fraction = 64;
  int64_t iterations = 6;
  double policy_fraction = 0.05;
  int64_t number_of_particles = 1;
  double momentum_coefficient = 0.1;
  double temperature = 0.5;
  double exploration_start = 0.5;
  double exploration_end = 0.05;
  int64_t exploration_steps = 25000;
  int64_t planning_horizon_schedule_steps = 25000;

  // Ablations.
  bool identity_encoder = false;
  bool c3_zero = false;

  // Throws ConfigError naming the offending key.
  void Validate() const;

  NetworkDims Dims(int obs_dim, int action_dim) const;
  LossCoefficients Coefficients() const;
  PlanConfig Planner() const;
  PerConfig Per() const;
};

enum class ConfigType { kInt, kReal, kBool, kString };

struct ConfigKeyInfo {
  std::string name;
  ConfigType type;
  std::string help;
};

// All keys in declaration order.
const std::vector<ConfigKeyInfo>& ConfigKeys();
std::vector<std::string> ConfigKeyNames();

// Parses `value` according to the key's type. Unknown keys raise a
// ConfigError that lists every valid key.
void SetConfigValue(TrainConfig& config, std::string_view key,
                    std::string_view value);
std::string GetConfigValue(const TrainConfig& config, std::string_view key);

// Flat `key = value` text with `#` comments.
TrainConfig ParseConfigText(std::string_view text,
                            const TrainConfig& base = {});
TrainConfig LoadConfigFile(const std::filesystem::path& path,
                           const TrainConfig& base = {});
// Round-trips through ParseConfigText; every key is materialized.
std::string ConfigToText(const TrainConfig& config);

// Key/value pairs of the resolved config, as strings.
std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const TrainConfig& config);

}  // namespace tdmpc

#endif  // TDMPC_CONFIG_H_
