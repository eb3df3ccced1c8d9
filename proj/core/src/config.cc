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

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include "tdmpc/envs.h"

namespace tdmpc {
namespace {

using Member = std::variant<int64_t TrainConfig::*, double TrainConfig::*,
                            bool TrainConfig::*, std::string TrainConfig::*>;

struct KeyEntry {
  const char* name;
  Member member;
  const char* help;
};

const std::vector<KeyEntry>& Entries() {
  static const std::vector<KeyEntry> kEntries = {
      {"env", &TrainConfig::env, "environment name"},
      {"seed", &TrainConfig::seed, "base random seed"},
      {"total_steps", &TrainConfig::total_steps, "environment steps to train"},
      {"eval_frequency", &TrainConfig::eval_frequency,
       "environment steps between evaluations (0 disables)"},
      {"eval_episodes", &TrainConfig::eval_episodes,
       "episodes per evaluation"},
      {"discount_factor", &TrainConfig::discount_factor, "gamma"},
      {"seed_steps", &TrainConfig::seed_steps,
       "uniform-random steps before planning and learning"},
      {"replay_buffer_size", &TrainConfig::replay_buffer_size,
       "maximum stored transitions"},
      {"per_alpha", &TrainConfig::per_alpha, "priority exponent"},
      {"per_beta", &TrainConfig::per_beta, "importance-weight exponent"},
      {"per_eps", &TrainConfig::per_eps, "priority offset"},
      {"mlp_hidden_size", &TrainConfig::mlp_hidden_size,
       "hidden width of dynamics, reward, value and policy"},
      {"encoder_hidden_size", &TrainConfig::encoder_hidden_size,
       "hidden width of the encoder"},
      {"latent_dimension", &TrainConfig::latent_dimension, "latent size"},
      {"learning_rate", &TrainConfig::learning_rate, "Adam step size"},
      {"temporal_coefficient", &TrainConfig::temporal_coefficient,
       "lambda, per-step loss decay"},
      {"reward_loss_coefficient", &TrainConfig::reward_loss_coefficient,
       "c1"},
      {"value_loss_coefficient", &TrainConfig::value_loss_coefficient, "c2"},
      {"consistency_loss_coefficient",
       &TrainConfig::consistency_loss_coefficient, "c3"},
      {"batch_size", &TrainConfig::batch_size, "segments per update"},
      {"target_momentum_coefficient",
       &TrainConfig::target_momentum_coefficient, "zeta, target EMA"},
      {"steps_per_gradient_update", &TrainConfig::steps_per_gradient_update,
       "environment steps per gradient update"},
      {"target_update_frequency", &TrainConfig::target_update_frequency,
       "gradient updates between target EMA steps"},
      {"planning_horizon", &TrainConfig::planning_horizon, "H"},
      {"initial_std", &TrainConfig::initial_std,
       "sigma of the first planning iteration"},
      {"population_size", &TrainConfig::population_size,
       "Gaussian samples per iteration"},
      {"elite_fraction", &TrainConfig::elite_fraction,
       "elite count per iteration"},
      {"iterations", &TrainConfig::iterations, "planning iterations J"},
      {"policy_fraction", &TrainConfig::policy_fraction,
       "extra policy samples as a fraction of the population"},
      {"number_of_particles", &TrainConfig::number_of_particles,
       "model particles (only 1 is supported)"},
      {"momentum_coefficient", &TrainConfig::momentum_coefficient,
       "planner mean momentum"},
      {"temperature", &TrainConfig::temperature, "tau"},
      {"exploration_start", &TrainConfig::exploration_start,
       "epsilon at step 0"},
      {"exploration_end", &TrainConfig::exploration_end,
       "epsilon after the schedule"},
      {"exploration_steps", &TrainConfig::exploration_steps,
       "epsilon schedule length"},
      {"planning_horizon_schedule_steps",
       &TrainConfig::planning_horizon_schedule_steps,
       "steps to grow the horizon from 1 to H (0 disables)"},
      {"identity_encoder", &TrainConfig::identity_encoder,
       "ablation: encoder is the identity"},
      {"c3_zero", &TrainConfig::c3_zero,
       "ablation: drop the consistency loss"},
  };
  return kEntries;
}

const KeyEntry* FindEntry(std::string_view key) {
  for (const KeyEntry& e : Entries()) {
    if (key == e.name) return &e;
  }
  return nullptr;
}

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string UnknownKeyMessage(std::string_view key) {
  std::string msg = "unknown config key '" + std::string(key) +
                    "'; valid keys:";
  for (const KeyEntry& e : Entries()) msg += std::string(" ") + e.name;
  return msg;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + std::string(key) +
                      "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

void Require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(std::string("config key '") + key + "' " + what);
}

}  // namespace

void TrainConfig::Validate() const {
  Require(MakeEnvironment(env) != nullptr, "env", "names no environment");
  Require(total_steps >= 0, "total_steps", "must be >= 0");
  Require(eval_frequency >= 0, "eval_frequency", "must be >= 0");
  Require(eval_episodes > 0, "eval_episodes", "must be > 0");
  Require(discount_factor >= 0.0 && discount_factor <= 1.0, "discount_factor",
          "must lie in [0, 1]");
  Require(seed_steps >= 0, "seed_steps", "must be >= 0");
  Require(replay_buffer_size > 0, "replay_buffer_size", "must be > 0");
  Require(per_alpha >= 0.0, "per_alpha", "must be >= 0");
  Require(per_beta >= 0.0, "per_beta", "must be >= 0");
  Require(per_eps > 0.0, "per_eps", "must be > 0");
  Require(mlp_hidden_size > 0, "mlp_hidden_size", "must be > 0");
  Require(encoder_hidden_size > 0, "encoder_hidden_size", "must be > 0");
  Require(latent_dimension > 0, "latent_dimension", "must be > 0");
  Require(learning_rate > 0.0, "learning_rate", "must be > 0");
  Require(temporal_coefficient > 0.0, "temporal_coefficient", "must be > 0");
  Require(reward_loss_coefficient >= 0.0, "reward_loss_coefficient",
          "must be >= 0");
  Require(value_loss_coefficient >= 0.0, "value_loss_coefficient",
          "must be >= 0");
  Require(consistency_loss_coefficient >= 0.0,
          "consistency_loss_coefficient", "must be >= 0");
  Require(batch_size > 0, "batch_size", "must be > 0");
  Require(target_momentum_coefficient >= 0.0 &&
              target_momentum_coefficient <= 1.0,
          "target_momentum_coefficient", "must lie in [0, 1]");
  Require(steps_per_gradient_update > 0, "steps_per_gradient_update",
          "must be > 0");
  Require(target_update_frequency > 0, "target_update_frequency",
          "must be > 0");
  Require(number_of_particles == 1, "number_of_particles",
          "must be 1 (the model is deterministic)");
  Require(policy_fraction >= 0.0, "policy_fraction", "must be >= 0");
  Require(exploration_steps >= 0, "exploration_steps", "must be >= 0");
  Require(planning_horizon_schedule_steps >= 0,
          "planning_horizon_schedule_steps", "must be >= 0");
  try {
    Planner().Validate();
    Per().Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

NetworkDims TrainConfig::Dims(int obs_dim, int action_dim) const {
  NetworkDims dims;
  dims.obs_dim = obs_dim;
  dims.action_dim = action_dim;
  dims.latent_dim = static_cast<int>(latent_dimension);
  dims.encoder_hidden = static_cast<int>(encoder_hidden_size);
  dims.mlp_hidden = static_cast<int>(mlp_hidden_size);
  return dims;
}

LossCoefficients TrainConfig::Coefficients() const {
  LossCoefficients c;
  c.reward = reward_loss_coefficient;
  c.value = value_loss_coefficient;
  c.consistency = c3_zero ? 0.0 : consistency_loss_coefficient;
  c.rho = temporal_coefficient;
  c.discount = discount_factor;
  return c;
}

PlanConfig TrainConfig::Planner() const {
  PlanConfig p;
  p.horizon = static_cast<int>(planning_horizon);
  p.iterations = static_cast<int>(iterations);
  p.num_samples = static_cast<int>(population_size);
  p.num_elites = static_cast<int>(elite_fraction);
  p.num_policy_samples = static_cast<int>(
      std::floor(policy_fraction * static_cast<double>(population_size)));
  p.temperature = temperature;
  p.momentum = momentum_coefficient;
  p.init_std = initial_std;
  p.discount = discount_factor;
  p.min_std = {exploration_start, exploration_end, exploration_steps};
  p.horizon_schedule_steps = planning_horizon_schedule_steps;
  return p;
}

PerConfig TrainConfig::Per() const {
  PerConfig p;
  p.alpha = per_alpha;
  p.beta = per_beta;
  p.eps = per_eps;
  return p;
}

const std::vector<ConfigKeyInfo>& ConfigKeys() {
  static const std::vector<ConfigKeyInfo> kKeys = [] {
    std::vector<ConfigKeyInfo> keys;
    for (const KeyEntry& e : Entries()) {
      ConfigType type = std::visit(
          [](auto member) {
            using T = std::remove_reference_t<decltype(TrainConfig{}.*member)>;
            if constexpr (std::is_same_v<T, int64_t>) return ConfigType::kInt;
            if constexpr (std::is_same_v<T, double>) return ConfigType::kReal;
            if constexpr (std::is_same_v<T, bool>) return ConfigType::kBool;
            return ConfigType::kString;
          },
          e.member);
      keys.push_back({e.name, type, e.help});
    }
    return keys;
  }();
  return kKeys;
}

std::vector<std::string> ConfigKeyNames() {
  std::vector<std::string> names;
  for (const KeyEntry& e : Entries()) names.emplace_back(e.name);
  return names;
}

void SetConfigValue(TrainConfig& config, std::string_view key,
                    std::string_view value) {
  const KeyEntry* entry = FindEntry(key);
  if (entry == nullptr) throw ConfigError(UnknownKeyMessage(key));
  std::string text = Trim(value);
  std::visit(
      [&](auto member) {
        auto& field = config.*member;
        using T = std::remove_reference_t<decltype(field)>;
        if constexpr (std::is_same_v<T, int64_t>) {
          field = ParseNumber<int64_t>(key, text);
        } else if constexpr (std::is_same_v<T, double>) {
          double v = ParseNumber<double>(key, text);
          if (!std::isfinite(v)) {
            throw ConfigError("config key '" + std::string(key) +
                              "' must be finite");
          }
          field = v;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") {
            field = true;
          } else if (text == "false" || text == "0") {
            field = false;
          } else {
            throw ConfigError("config key '" + std::string(key) +
                              "' expects true or false, got '" + text + "'");
          }
        } else {
          field = text;
        }
      },
      entry->member);
}

std::string GetConfigValue(const TrainConfig& config, std::string_view key) {
  const KeyEntry* entry = FindEntry(key);
  if (entry == nullptr) throw ConfigError(UnknownKeyMessage(key));
  return std::visit(
      [&](auto member) -> std::string {
        const auto& field = config.*member;
        using T = std::remove_cvref_t<decltype(field)>;
        if constexpr (std::is_same_v<T, int64_t>) {
          return std::to_string(field);
        } else if constexpr (std::is_same_v<T, double>) {
          return FormatDouble(field);
        } else if constexpr (std::is_same_v<T, bool>) {
          return field ? "true" : "false";
        } else {
          return field;
        }
      },
      entry->member);
}

TrainConfig ParseConfigText(std::string_view text, const TrainConfig& base) {
  TrainConfig config = base;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": expected 'key = value'");
    }
    SetConfigValue(config, Trim(std::string_view(trimmed).substr(0, eq)),
                   std::string_view(trimmed).substr(eq + 1));
  }
  return config;
}

TrainConfig LoadConfigFile(const std::filesystem::path& path,
                           const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseConfigText(buffer.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> ConfigEntries(
    const TrainConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const KeyEntry& e : Entries()) {
    out.emplace_back(e.name, GetConfigValue(config, e.name));
  }
  return out;
}

std::string ConfigToText(const TrainConfig& config) {
  std::string text;
  for (const auto& [key, value] : ConfigEntries(config)) {
    text += key + " = " + value + "\n";
  }
  return text;
}

}  // namespace tdmpc
