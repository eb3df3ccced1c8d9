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


#include "planner_oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tdmpc/envs.h"
#include "test_util.h"

namespace tdmpc::testing {

PlanDistribution BruteForceRefit(const std::vector<ScoredTrajectory>& elites,
                                 const PlanDistribution& prev,
                                 double temperature, double momentum,
                                 double min_std) {
  const Eigen::Index m = elites.front().actions.rows();
  const Eigen::Index h = elites.front().actions.cols();
  PlanDistribution out;
  out.mean.resize(m, h);
  out.std.resize(m, h);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index t = 0; t < h; ++t) {
      long double total = 0.0L, first = 0.0L;
      for (const ScoredTrajectory& e : elites) {
        const long double w =
            std::exp(static_cast<long double>(temperature) * e.phi);
        total += w;
        first += w * e.actions(i, t);
      }
      const long double mu = first / total;
      long double second = 0.0L;
      for (const ScoredTrajectory& e : elites) {
        const long double w =
            std::exp(static_cast<long double>(temperature) * e.phi);
        const long double d = e.actions(i, t) - mu;
        second += w * d * d;
      }
      const double sigma = static_cast<double>(std::sqrt(second / total));
      out.std(i, t) = std::max(sigma, min_std);
      const double blended =
          momentum * prev.mean(i, t) + (1.0 - momentum) * static_cast<double>(mu);
      out.mean(i, t) = std::clamp(blended, -1.0, 1.0);
    }
  }
  return out;
}

std::vector<ScoredTrajectory> RandomElites(int k, int m, int h,
                                           double phi_scale, Rng& rng) {
  std::uniform_real_distribution<double> phi(-phi_scale, phi_scale);
  std::vector<ScoredTrajectory> elites(k);
  for (ScoredTrajectory& e : elites) {
    e.actions = UniformMatrix(m, h, rng);
    e.phi = phi(rng);
  }
  return elites;
}

RefitOracleReport CheckRefit(int sets, uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> k_dist(1, 64), m_dist(1, 4),
      h_dist(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RefitOracleReport report;
  for (int s = 0; s < sets; ++s) {
    const int k = k_dist(rng), m = m_dist(rng), h = h_dist(rng);
    std::vector<ScoredTrajectory> elites = RandomElites(k, m, h, 10.0, rng);
    PlanDistribution prev;
    prev.mean = UniformMatrix(m, h, rng);
    prev.std = Matrix::Constant(m, h, 2.0);
    const double tau = 0.05 + 2.0 * unit(rng);
    const double momentum = 0.5 * unit(rng);
    const double min_std = 0.1 * unit(rng);

    PlanDistribution got = Refit(elites, prev, tau, momentum, min_std);
    PlanDistribution want = BruteForceRefit(elites, prev, tau, momentum, min_std);
    report.max_oracle_error =
        std::max({report.max_oracle_error,
                  (got.mean - want.mean).cwiseAbs().maxCoeff(),
                  (got.std - want.std).cwiseAbs().maxCoeff()});

    // Dyadic returns and shift keep every subtraction exact.
    std::vector<ScoredTrajectory> dyadic = elites;
    for (ScoredTrajectory& e : dyadic) e.phi = std::round(e.phi * 1024) / 1024;
    std::vector<ScoredTrajectory> shifted = dyadic;
    for (ScoredTrajectory& e : shifted) e.phi += 64.0;
    PlanDistribution a = Refit(dyadic, prev, tau, momentum, min_std);
    PlanDistribution b = Refit(shifted, prev, tau, momentum, min_std);
    if (a.mean != b.mean || a.std != b.std) report.shift_invariant = false;

    // Sharp limit: returns at least 1 apart, tau = 100 picks the best.
    std::vector<ScoredTrajectory> spaced = elites;
    for (int i = 0; i < k; ++i) spaced[i].phi = 1.5 * i - 0.3 * (i % 3);
    const auto best = std::max_element(
        spaced.begin(), spaced.end(),
        [](const auto& x, const auto& y) { return x.phi < y.phi; });
    PlanDistribution sharp = Refit(spaced, prev, 100.0, 0.0, 0.0);
    report.argmax_error = std::max(
        report.argmax_error, (sharp.mean - best->actions).cwiseAbs().maxCoeff());

    // Flat limit: tau = 1e-6 averages. The weights lie in
    // [exp(-tau * range), 1], which bounds the deviation from the average.
    const double flat_tau = 1e-6;
    PlanDistribution flat = Refit(elites, prev, flat_tau, 0.0, 0.0);
    Matrix avg = Matrix::Zero(m, h);
    double lo = elites[0].phi, hi = elites[0].phi;
    for (const ScoredTrajectory& e : elites) {
      avg += e.actions / k;
      lo = std::min(lo, e.phi);
      hi = std::max(hi, e.phi);
    }
    const double bound = 2.0 * (1.0 - std::exp(-flat_tau * (hi - lo))) + 1e-15;
    report.mean_limit_error =
        std::max(report.mean_limit_error,
                 (flat.mean - avg).cwiseAbs().maxCoeff() - bound);
  }
  return report;
}

double OneStepPlanningError(int states, int samples, uint64_t seed) {
  OneDimToy env;
  SimulatorModel model(env);
  PlanConfig config;
  config.horizon = 1;
  config.iterations = 6;
  config.num_samples = samples;
  config.num_elites = std::max(1, samples / 20);
  config.num_policy_samples = 0;
  config.discount = 1.0;
  config.min_std = {1e-3, 1e-3, 0};
  config.horizon_schedule_steps = 0;

  constexpr int kGrid = 201;  // pitch 0.01
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < states; ++i) {
    const Vector s = env.Reset(rng);
    double best_a = -1.0, best_r = -1.0;
    for (int g = 0; g < kGrid; ++g) {
      const double a = -1.0 + 2.0 * g / (kGrid - 1);
      const double r = OneDimToy::Reward(s.data(), a);
      if (r > best_r) {
        best_r = r;
        best_a = a;
      }
    }
    PlanResult plan = Plan(model, s, Matrix(), 0, config, rng);
    if (!plan.ok) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(plan.action(0) - best_a));
  }
  return worst;
}

}  // namespace tdmpc::testing
