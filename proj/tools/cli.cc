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


#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdmpc/config.h"
#include "tdmpc/envs.h"
#include "tdmpc/network.h"
#include "tdmpc/rng.h"
#include "tdmpc/trainer.h"

namespace tdmpc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr char kOutputRootEnv[] = "TDMPC_OUTPUT_ROOT";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path OutputRoot() {
  const char* root = std::getenv(kOutputRootEnv);
  return root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
}

// Run directories are write-once: an explicit --out must be new or empty,
// and generated names get a numeric suffix until they are unused.
fs::path MakeRunDir(const std::string& explicit_dir,
                    const std::string& default_name) {
  fs::path dir;
  if (!explicit_dir.empty()) {
    dir = explicit_dir;
    if (fs::exists(dir) &&
        (!fs::is_directory(dir) || !fs::is_empty(dir))) {
      throw UsageError("refusing to reuse output directory " + dir.string());
    }
  } else {
    fs::path root = OutputRoot();
    dir = root / default_name;
    for (int k = 2; fs::exists(dir); ++k) {
      dir = root / (default_name + "-" + std::to_string(k));
    }
  }
  fs::create_directories(dir);
  return dir;
}

void WriteManifest(const fs::path& dir, const std::string& command,
                   const TrainConfig& config, const std::vector<int64_t>& seeds,
                   ordered_json extra = ordered_json::object()) {
  ordered_json j;
  j["command"] = command;
  j["artifact_version"] = kArtifactVersion;
  j["env"] = config.env;
  j["seeds"] = seeds;
  j["output_dir"] = fs::absolute(dir).string();
  ordered_json c = ordered_json::object();
  for (const auto& [key, value] : ConfigEntries(config)) c[key] = value;
  j["config"] = c;
  for (auto& [key, value] : extra.items()) j[key] = value;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

// A .json path is read as a run manifest (its "config" object); anything
// else as flat key = value text.
TrainConfig LoadConfigOrManifest(const std::string& path) {
  if (fs::path(path).extension() != ".json") return LoadConfigFile(path);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) {
    throw ConfigError(path + ": manifest has no config object");
  }
  TrainConfig config;
  for (const auto& [key, value] : j["config"].items()) {
    SetConfigValue(config, key,
                   value.is_string() ? value.get<std::string>() : value.dump());
  }
  return config;
}

const char* TypeName(ConfigType type) {
  switch (type) {
    case ConfigType::kInt:
      return "INT";
    case ConfigType::kReal:
      return "REAL";
    case ConfigType::kBool:
      return "";
    case ConfigType::kString:
      return "TEXT";
  }
  return "TEXT";
}

std::string Dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

// Registers one override option per config key and collects the values
// given on the command line, in key order.
class ConfigOverrides {
 public:
  void Register(CLI::App* app) {
    const TrainConfig defaults;
    values_.reserve(ConfigKeys().size());
    for (const ConfigKeyInfo& key : ConfigKeys()) {
      std::string names = "--" + key.name;
      if (key.name.find('_') != std::string::npos) {
        names = "--" + Dashed(key.name) + "," + names;
      }
      if (key.name == "consistency_loss_coefficient") names += ",--c3";
      if (key.name == "reward_loss_coefficient") names += ",--c1";
      if (key.name == "value_loss_coefficient") names += ",--c2";
      values_.push_back({key.name, ""});
      std::string* target = &values_.back().second;
      CLI::Option* opt =
          key.type == ConfigType::kBool
              ? app->add_flag(names, *target, key.help)
              : app->add_option(names, *target, key.help);
      opt->default_str(GetConfigValue(defaults, key.name))
          ->type_name(TypeName(key.type))
          ->group("Config keys");
    }
  }

  void Apply(TrainConfig& config) const {
    for (const auto& [key, value] : values_) {
      if (!value.empty()) SetConfigValue(config, key, value);
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> values_;
};

struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> ablations;
  ConfigOverrides overrides;
};

TrainConfig ResolveTrainConfig(const TrainArgs& args) {
  TrainConfig config;
  if (!args.config_path.empty()) config = LoadConfigOrManifest(args.config_path);
  args.overrides.Apply(config);
  for (const std::string& a : args.ablations) {
    if (a == "c3_zero" || a == "c3-zero") {
      config.c3_zero = true;
    } else if (a == "identity_encoder" || a == "identity-encoder") {
      config.identity_encoder = true;
    } else {
      throw UsageError("unknown ablation '" + a +
                       "'; expected c3_zero or identity_encoder");
    }
  }
  config.Validate();
  return config;
}

int CmdTrain(const std::string& command, const TrainArgs& args,
             std::ostream& out) {
  TrainConfig config = ResolveTrainConfig(args);
  std::string name = command + "-" + config.env + "-seed" +
                     std::to_string(config.seed);
  fs::path dir = MakeRunDir(args.out_dir, name);
  WriteManifest(dir, command, config, {config.seed});
  out << "run directory: " << dir.string() << "\n";
  Trainer trainer(config, dir);
  TrainResult r = trainer.Run();
  out << std::fixed << std::setprecision(2);
  out << "env steps " << r.env_steps << ", updates " << r.updates
      << ", target updates " << r.ema_updates << "\n";
  out << "eval plan:   " << r.final_plan.mean << " +/- " << r.final_plan.std
      << "\n";
  out << "eval policy: " << r.final_policy.mean << " +/- "
      << r.final_policy.std << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string mode = "plan";
  int episodes = 10;
  int64_t seed = 1;
  std::string out_dir;
};

int CmdEval(const EvalArgs& args, std::ostream& out) {
  EvalMode mode = ParseEvalMode(args.mode);
  AgentCheckpoint agent = LoadAgent(args.checkpoint);
  std::unique_ptr<Environment> env = MakeEnvironment(agent.config.env);
  fs::path dir = MakeRunDir(args.out_dir, "eval-" + agent.config.env + "-" +
                                              args.mode + "-seed" +
                                              std::to_string(args.seed));
  ordered_json extra;
  extra["checkpoint"] = fs::absolute(args.checkpoint).string();
  extra["mode"] = args.mode;
  extra["episodes"] = args.episodes;
  WriteManifest(dir, "eval", agent.config, {args.seed}, extra);

  EvalResult r = Evaluate(agent.model, *env, mode, args.episodes,
                          static_cast<uint64_t>(args.seed),
                          agent.config.Planner(), agent.env_step);
  std::ofstream csv(dir / "eval.csv");
  csv.precision(17);
  csv << "episode,return\n";
  out << "episode  return\n";
  for (size_t e = 0; e < r.returns.size(); ++e) {
    csv << e << ',' << r.returns[e] << '\n';
    out << std::setw(7) << e << "  " << std::fixed << std::setprecision(2)
        << r.returns[e] << "\n";
  }
  out << std::fixed << std::setprecision(2) << args.mode << " return "
      << r.mean << " +/- " << r.std << " over " << r.returns.size()
      << " episode(s)\n";
  out << "csv: " << (dir / "eval.csv").string() << "\n";
  return kExitOk;
}

std::vector<int> ParseIntList(const std::string& text, const char* what) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t dash = item.find('-', 1);
    try {
      if (dash != std::string::npos) {
        int lo = std::stoi(item.substr(0, dash));
        int hi = std::stoi(item.substr(dash + 1));
        for (int v = lo; v <= hi; ++v) values.push_back(v);
      } else {
        values.push_back(std::stoi(item));
      }
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " list '" + text + "'");
    }
  }
  for (int v : values) {
    if (v < 1) throw UsageError(std::string(what) + " values must be >= 1");
  }
  return values;
}

struct SweepArgs {
  std::string checkpoint;
  std::string iterations = "1-6";
  std::string horizons = "1-5";
  int episodes = 10;
  int64_t seed = 1;
  std::string out_dir;
};

int CmdSweep(const SweepArgs& args, std::ostream& out) {
  std::vector<int> iterations = ParseIntList(args.iterations, "iterations");
  std::vector<int> horizons = ParseIntList(args.horizons, "horizons");
  if (iterations.empty() || horizons.empty()) {
    throw UsageError("sweep grid is empty");
  }
  AgentCheckpoint agent = LoadAgent(args.checkpoint);
  std::unique_ptr<Environment> env = MakeEnvironment(agent.config.env);
  fs::path dir = MakeRunDir(args.out_dir, "sweep-" + agent.config.env +
                                              "-seed" +
                                              std::to_string(args.seed));
  ordered_json extra;
  extra["checkpoint"] = fs::absolute(args.checkpoint).string();
  extra["iterations"] = iterations;
  extra["horizons"] = horizons;
  extra["episodes"] = args.episodes;
  WriteManifest(dir, "sweep", agent.config, {args.seed}, extra);

  std::vector<SweepRow> rows = BudgetSweep(
      agent.model, *env, agent.config.Planner(), agent.env_step, iterations,
      horizons, args.episodes, static_cast<uint64_t>(args.seed));
  WriteSweepCsv(dir / "sweep.csv", rows);
  out << "    J    H      return       std   ms/step\n";
  for (const SweepRow& r : rows) {
    out << std::setw(5) << r.iterations << std::setw(5) << r.horizon
        << std::fixed << std::setprecision(2) << std::setw(12)
        << r.mean_return << std::setw(10) << r.std_return
        << std::setprecision(3) << std::setw(10) << r.ms_per_step
        << (r.iterations == 0 ? "  (policy)" : "") << "\n";
  }
  out << "csv: " << (dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

struct BaselineArgs {
  std::string env;
  int64_t seed = 1;
  int episodes = 5;
  std::string trajectory_dir;
};

int CmdBaseline(const BaselineArgs& args, std::ostream& out) {
  std::unique_ptr<Environment> env = MakeEnvironment(args.env);
  std::vector<Episode> episodes;
  EvalResult r = MpcSimBaseline(*env, static_cast<uint64_t>(args.seed),
                                args.episodes,
                                args.trajectory_dir.empty() ? nullptr
                                                            : &episodes);
  out << std::fixed << std::setprecision(2);
  for (size_t i = 0; i < r.returns.size(); ++i) {
    out << "seed " << i << ": " << r.returns[i] << "\n";
  }
  out << args.env << " MPC:sim baseline " << r.mean << " +/- " << r.std
      << " (T = " << env->spec().episode_length << ")\n";
  if (!args.trajectory_dir.empty()) {
    fs::path dir = MakeRunDir(args.trajectory_dir, "");
    for (size_t i = 0; i < episodes.size(); ++i) {
      WriteTrajectoryCsv(dir / ("trajectory_" + std::to_string(i) + ".csv"),
                         episodes[i]);
    }
  }
  return kExitOk;
}

void AddTrainOptions(CLI::App* app, TrainArgs* args) {
  app->add_option("-c,--config", args->config_path,
                  "key = value config file, or a run manifest (.json)")
      ->check(CLI::ExistingFile);
  app->add_option("-o,--out", args->out_dir,
                  std::string("run directory (default: $") + kOutputRootEnv +
                      "/<name>, root falls back to ./runs)");
  args->overrides.Register(app);
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"TD-MPC: temporal-difference learning for model predictive "
               "control on small continuous-control tasks",
               "tdmpc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train an agent");
  AddTrainOptions(train, &train_args);

  TrainArgs ablate_args;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "train with ablation flags (c3_zero, identity_encoder)");
  AddTrainOptions(ablate, &ablate_args);
  ablate->add_option("--ablation", ablate_args.ablations,
                     "c3_zero and/or identity_encoder")
      ->required();

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--mode", eval_args.mode, "plan or policy")
      ->capture_default_str();
  eval->add_option("--episodes", eval_args.episodes, "episodes to run")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_args.seed, "evaluation seed")
      ->capture_default_str();
  eval->add_option("-o,--out", eval_args.out_dir, "run directory");

  SweepArgs sweep_args;
  CLI::App* sweep =
      app.add_subcommand("sweep", "planning-budget sweep of a checkpoint");
  sweep->add_option("--checkpoint", sweep_args.checkpoint, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--iterations", sweep_args.iterations,
                    "iteration counts J, e.g. 1-6 or 1,2,4")
      ->capture_default_str();
  sweep->add_option("--horizons", sweep_args.horizons,
                    "planning horizons H, e.g. 1-5")
      ->capture_default_str();
  sweep->add_option("--episodes", sweep_args.episodes, "episodes per cell")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sweep_args.seed, "evaluation seed")
      ->capture_default_str();
  sweep->add_option("-o,--out", sweep_args.out_dir, "run directory");

  BaselineArgs baseline_args;
  CLI::App* baseline = app.add_subcommand(
      "baseline", "MPC with the true simulator and no value function");
  baseline->add_option("--env", baseline_args.env, "environment name")
      ->required();
  baseline->add_option("--seed", baseline_args.seed, "base seed")
      ->capture_default_str();
  baseline->add_option("--episodes", baseline_args.episodes,
                       "episodes (one per derived seed)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  baseline->add_option("--trajectory-dir", baseline_args.trajectory_dir,
                       "write per-episode (t, s, a, r) CSV files here");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return CmdTrain("train", train_args, out);
    if (ablate->parsed()) return CmdTrain("ablate", ablate_args, out);
    if (eval->parsed()) return CmdEval(eval_args, out);
    if (sweep->parsed()) return CmdSweep(sweep_args, out);
    if (baseline->parsed()) return CmdBaseline(baseline_args, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tdmpc::cli
