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


#include "replay_oracles.h"

#include <algorithm>
#include <cmath>

namespace tdmpc::testing {

ReplayBuffer BufferWithPriorities(const std::vector<double>& priorities,
                                  PerConfig per, int horizon) {
  ReplayBuffer buffer(1, 1, horizon, per);
  const int n = static_cast<int>(priorities.size());
  const int length = n + horizon - 1;
  Matrix states(1, length + 1);
  for (int t = 0; t <= length; ++t) states(0, t) = t;
  buffer.PushEpisode(states, Matrix::Zero(1, length), Vector::Zero(length));
  if (horizon > 1) {
    // Too short to hold a segment.
    buffer.PushEpisode(Matrix::Zero(1, horizon), Matrix::Zero(1, horizon - 1),
                       Vector::Zero(horizon - 1));
  }
  std::vector<int64_t> indices(n);
  Vector td(n);
  for (int i = 0; i < n; ++i) {
    indices[i] = i;
    td(i) = priorities[i] - per.eps;
  }
  buffer.UpdatePriorities(indices, td);
  return buffer;
}

std::vector<double> EnumeratedProbabilities(
    const std::vector<double>& priorities, double alpha) {
  long double total = 0.0L;
  for (double p : priorities) total += std::pow(static_cast<long double>(p), alpha);
  std::vector<double> out;
  for (double p : priorities) {
    out.push_back(static_cast<double>(
        std::pow(static_cast<long double>(p), alpha) / total));
  }
  return out;
}

PerSamplingReport SamplePerProfile(const std::vector<double>& priorities,
                                   PerConfig per, int64_t draws,
                                   int batch_size, uint64_t seed) {
  const ReplayBuffer buffer = BufferWithPriorities(priorities, per, 3);
  const std::vector<double> want =
      EnumeratedProbabilities(priorities, per.alpha);
  const int n = static_cast<int>(priorities.size());
  const double m = static_cast<double>(buffer.num_valid_starts());

  PerSamplingReport report;
  double sum = 0.0;
  for (int64_t i = 0; i < buffer.num_transitions(); ++i) {
    sum += buffer.Probability(i);
  }
  report.normalization_error = std::abs(sum - 1.0);
  for (int i = 0; i < n; ++i) {
    report.max_probability_error = std::max(
        report.max_probability_error, std::abs(buffer.Probability(i) - want[i]));
  }

  Rng rng(seed);
  std::vector<int64_t> counts(buffer.num_transitions(), 0);
  int64_t drawn = 0;
  while (drawn < draws) {
    const int b = static_cast<int>(std::min<int64_t>(batch_size, draws - drawn));
    const SegmentBatch batch = *buffer.Sample(b, rng);
    double max_raw = 0.0;
    for (int64_t i : batch.indices) {
      max_raw = std::max(max_raw, std::pow(m * want[i], -per.beta));
    }
    for (int k = 0; k < b; ++k) {
      const int64_t i = batch.indices[k];
      ++counts[i];
      const double w = std::pow(m * want[i], -per.beta) / max_raw;
      report.max_weight_error =
          std::max(report.max_weight_error, std::abs(batch.weights(k) - w));
    }
    drawn += b;
  }
  for (int64_t i = 0; i < static_cast<int64_t>(counts.size()); ++i) {
    if (i >= n) {
      // Invalid starts must never be drawn.
      if (counts[i] > 0) report.max_frequency_error = 1.0;
      continue;
    }
    const double freq = static_cast<double>(counts[i]) / draws;
    report.max_frequency_error =
        std::max(report.max_frequency_error, std::abs(freq - want[i]) / want[i]);
  }
  return report;
}

PerOracleReport CheckPer(int64_t draws, uint64_t seed) {
  PerOracleReport report;
  const std::vector<std::pair<std::vector<double>, double>> profiles = {
      {{1.0, 3.0}, 1.0},
      {{1.0, 2.0, 3.0}, 0.6},
      {{0.5, 1.0, 2.0, 4.0}, 0.6},
  };
  uint64_t stream = 0;
  for (const auto& [priorities, alpha] : profiles) {
    const PerSamplingReport r = SamplePerProfile(
        priorities, {alpha, 0.4, 1e-6}, draws, 1000, DeriveSeed(seed, stream++));
    report.max_frequency_error =
        std::max(report.max_frequency_error, r.max_frequency_error);
    report.max_probability_error =
        std::max({report.max_probability_error, r.max_probability_error,
                  r.normalization_error});
    report.max_weight_error =
        std::max(report.max_weight_error, r.max_weight_error);
  }

  const std::vector<double> uneven = {0.5, 1.0, 2.0, 4.0};
  const PerSamplingReport uniform = SamplePerProfile(
      uneven, {0.0, 0.4, 1e-6}, draws, 1000, DeriveSeed(seed, stream++));
  report.uniform_error = uniform.max_frequency_error;

  const ReplayBuffer buffer = BufferWithPriorities(uneven, {0.6, 0.0, 1e-6});
  Rng rng(DeriveSeed(seed, stream++));
  const SegmentBatch batch = *buffer.Sample(4096, rng);
  report.unit_weight_error = (batch.weights.array() - 1.0).abs().maxCoeff();
  return report;
}

}  // namespace tdmpc::testing
