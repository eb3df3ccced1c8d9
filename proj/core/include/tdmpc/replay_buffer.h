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

#ifndef TDMPC_REPLAY_BUFFER_H_
#define TDMPC_REPLAY_BUFFER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tdmpc/network.h"
#include "tdmpc/rng.h"
#include "tdmpc/segment.h"

namespace tdmpc {

struct PerConfig {
  double alpha = 0.6;
  double beta = 0.4;
  double eps = 1e-6;  // priority floor added to |td error|

  void Validate() const;
};

// Binary tree of partial sums over leaf weights; O(log n) update and
// proportional lookup. Internal nodes are recomputed from their children on
// every update so the root is always an exact function of the leaves.
class SumTree {
 public:
  SumTree() = default;

  int64_t size() const { return size_; }
  double total() const { return nodes_.empty() ? 0.0 : nodes_[1]; }
  double Get(int64_t index) const { return nodes_[capacity_ + index]; }

  // Appends a leaf (growing the tree as needed).
  void Push(double weight);
  void Set(int64_t index, double weight);
  // Leaf whose prefix-sum interval contains `u` in [0, total()). Never
  // returns a zero-weight leaf while total() > 0.
  int64_t Find(double u) const;

 private:
  void Grow();

  int64_t capacity_ = 0;
  int64_t size_ = 0;
  std::vector<double> nodes_;
};

// Episode store with prioritized sampling of H-step segments. Every
// transition index carries a priority; only indices with H successors inside
// their own episode are eligible segment starts.
class ReplayBuffer {
 public:
  struct IndexRange {
    int64_t begin = 0;
    int64_t end = 0;
  };

  ReplayBuffer(int obs_dim, int action_dim, int horizon, PerConfig per = {},
               int64_t capacity = 1'000'000);

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  int horizon() const { return horizon_; }
  const PerConfig& per() const { return per_; }
  int64_t capacity() const { return capacity_; }

  // states: obs_dim x (T+1); actions: action_dim x T; rewards: T.
  // Returns the range of new transition indices. Throws if the hard capacity
  // would be exceeded.
  IndexRange PushEpisode(const Matrix& states, const Matrix& actions,
                         const Vector& rewards);

  int64_t num_transitions() const {
    return static_cast<int64_t>(rewards_.size());
  }
  int64_t num_episodes() const {
    return static_cast<int64_t>(episode_starts_.size());
  }
  int64_t num_valid_starts() const { return num_valid_; }
  bool ready() const { return num_valid_ > 0; }

  double priority(int64_t index) const;
  double max_priority() const { return max_priority_; }
  bool is_valid_start(int64_t index) const;
  // Sampling probability p_i^alpha / sum_j p_j^alpha over valid starts.
  double Probability(int64_t index) const;

  // Draws `batch_size` segment starts with replacement. Returns nullopt while
  // no valid start exists.
  std::optional<SegmentBatch> Sample(int batch_size, Rng& rng) const;

  // p_i <- |td_i| + eps for each sampled index.
  void UpdatePriorities(std::span<const int64_t> indices,
                        const Vector& td_errors);

  // Stored transition i: (state, action, reward, next state).
  Vector state(int64_t index) const;
  Vector next_state(int64_t index) const;
  Vector action(int64_t index) const;
  double reward(int64_t index) const;

  void Save(const std::filesystem::path& path) const;
  static ReplayBuffer Load(const std::filesystem::path& path);

 private:
  void CheckIndex(int64_t index) const;
  double LeafWeight(double priority) const;

  int obs_dim_;
  int action_dim_;
  int horizon_;
  PerConfig per_;
  int64_t capacity_;

  std::vector<double> states_;     // obs_dim per stored state
  std::vector<double> actions_;    // action_dim per transition
  std::vector<double> rewards_;    // one per transition
  std::vector<int64_t> state_row_; // transition -> row of its state
  std::vector<uint8_t> valid_;     // transition is a valid segment start
  std::vector<double> priorities_;
  std::vector<int64_t> episode_starts_;
  int64_t num_states_ = 0;
  int64_t num_valid_ = 0;
  double max_priority_ = 1.0;
  SumTree tree_;
};

}  // namespace tdmpc

#endif  // TDMPC_REPLAY_BUFFER_H_
