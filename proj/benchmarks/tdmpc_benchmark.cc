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


// Micro benchmarks at the desk preset sizes (hidden 64, latent 16).

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "tdmpc/envs.h"
#include "tdmpc/network.h"
#include "tdmpc/planner.h"
#include "tdmpc/replay_buffer.h"
#include "tdmpc/rng.h"
#include "tdmpc/told.h"

namespace tdmpc {
namespace {

NetworkDims DeskDims(int obs_dim, int action_dim) {
  NetworkDims dims;
  dims.obs_dim = obs_dim;
  dims.action_dim = action_dim;
  dims.latent_dim = 16;
  dims.encoder_hidden = 64;
  dims.mlp_hidden = 64;
  return dims;
}

Matrix Gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

void BM_DynamicsForward(benchmark::State& state) {
  Rng rng(1);
  const Network net = InitNetwork(NetworkRole::kDynamics, DeskDims(5, 1), rng);
  const Matrix x = Gaussian(net.input_dim(), static_cast<int>(state.range(0)),
                            rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.Forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DynamicsForward)->RangeMultiplier(4)->Range(1, 256);

void BM_DynamicsForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const Network net = InitNetwork(NetworkRole::kDynamics, DeskDims(5, 1), rng);
  const int batch = static_cast<int>(state.range(0));
  const Matrix x = Gaussian(net.input_dim(), batch, rng);
  const Matrix dy = Gaussian(net.output_dim(), batch, rng);
  Vector grad = Vector::Zero(net.num_params());
  Tape tape;
  for (auto _ : state) {
    net.Forward(x, &tape);
    benchmark::DoNotOptimize(net.Backward(tape, dy, &grad));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DynamicsForwardBackward)->RangeMultiplier(4)->Range(1, 256);

// One decision step of the planner on the cartpole dims; args are
// (iterations, horizon).
void BM_PlanStep(benchmark::State& state) {
  Rng rng(3);
  const ToldModel model(DeskDims(5, 1), false, rng);
  const ToldPlanningModel planning(model);
  PlanConfig config;
  config.iterations = static_cast<int>(state.range(0));
  config.horizon = static_cast<int>(state.range(1));
  config.num_samples = 64;
  config.num_elites = 8;
  config.num_policy_samples = 3;
  config.horizon_schedule_steps = 0;
  const Vector s = Gaussian(5, 1, rng);
  Matrix warm;
  for (auto _ : state) {
    PlanResult r = Plan(planning, s, warm, 30000, config, rng);
    warm = r.mean;
    benchmark::DoNotOptimize(r.action);
  }
}
BENCHMARK(BM_PlanStep)
    ->ArgsProduct({{1, 3, 6}, {1, 3, 5}})
    ->Unit(benchmark::kMicrosecond);

void BM_PlanStepSimulator(benchmark::State& state) {
  const CartpoleSwingup env(false);
  const SimulatorModel model(env);
  const PlanConfig config = MpcSimConfig();
  Rng rng(4);
  const Vector s = env.Reset(rng);
  Matrix warm;
  for (auto _ : state) {
    PlanResult r = Plan(model, s, warm, 0, config, rng);
    warm = r.mean;
    benchmark::DoNotOptimize(r.action);
  }
}
BENCHMARK(BM_PlanStepSimulator)->Unit(benchmark::kMicrosecond);

ReplayBuffer FilledBuffer(int obs_dim, int action_dim, int horizon, Rng& rng) {
  ReplayBuffer buffer(obs_dim, action_dim, horizon);
  for (int e = 0; e < 40; ++e) {
    buffer.PushEpisode(Gaussian(obs_dim, 251, rng),
                       Gaussian(action_dim, 250, rng), Gaussian(250, 1, rng));
  }
  return buffer;
}

// One TOLD gradient step plus the policy step, batch = range(0).
void BM_ToldUpdate(benchmark::State& state) {
  Rng rng(5);
  ToldModel model(DeskDims(5, 1), false, rng);
  ToldOptimizer optimizer(model, 1e-3);
  const ReplayBuffer buffer = FilledBuffer(5, 1, 5, rng);
  const SegmentBatch batch =
      *buffer.Sample(static_cast<int>(state.range(0)), rng);
  const LossCoefficients coeffs;
  std::vector<Matrix> latents;
  for (auto _ : state) {
    const LossBreakdown loss =
        ToldUpdate(model, optimizer, batch, coeffs, &latents);
    benchmark::DoNotOptimize(loss.total);
    benchmark::DoNotOptimize(
        PolicyUpdate(model, optimizer, latents, coeffs.rho));
  }
}
BENCHMARK(BM_ToldUpdate)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_ReplaySample(benchmark::State& state) {
  Rng rng(6);
  const ReplayBuffer buffer = FilledBuffer(5, 1, 5, rng);
  const int batch = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(buffer.Sample(batch, rng));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ReplaySample)->Arg(32)->Arg(512);

void BM_EnvStepBatch(benchmark::State& state) {
  const CartpoleSwingup env(false);
  Rng rng(7);
  const int batch = static_cast<int>(state.range(0));
  Matrix s(5, batch);
  for (int c = 0; c < batch; ++c) s.col(c) = env.Reset(rng);
  const Matrix a = Gaussian(1, batch, rng);
  Matrix next;
  RowVector reward;
  for (auto _ : state) {
    env.StepBatch(s, a, &next, &reward);
    benchmark::DoNotOptimize(next.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_EnvStepBatch)->Arg(200);

}  // namespace
}  // namespace tdmpc

BENCHMARK_MAIN();
