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

#include "tdmpc/replay_buffer.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tdmpc {

void PerConfig::Validate() const {
  if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) {
    throw ContractError("PER alpha and beta must lie in [0, 1]");
  }
  if (!(eps > 0.0)) throw ContractError("PER eps must be positive");
}

void SumTree::Grow() {
  const int64_t new_capacity = capacity_ == 0 ? 1024 : 2 * capacity_;
  std::vector<double> nodes(2 * new_capacity, 0.0);
  for (int64_t i = 0; i < size_; ++i) {
    nodes[new_capacity + i] = nodes_[capacity_ + i];
  }
  for (int64_t n = new_capacity - 1; n >= 1; --n) {
    nodes[n] = nodes[2 * n] + nodes[2 * n + 1];
  }
  nodes_.swap(nodes);
  capacity_ = new_capacity;
}

void SumTree::Push(double weight) {
  if (size_ == capacity_) Grow();
  ++size_;
  Set(size_ - 1, weight);
}

void SumTree::Set(int64_t index, double weight) {
  if (index < 0 || index >= size_) {
    throw ContractError("sum tree index out of range");
  }
  int64_t n = capacity_ + index;
  nodes_[n] = weight;
  for (n /= 2; n >= 1; n /= 2) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
}

int64_t SumTree::Find(double u) const {
  if (!(total() > 0.0)) throw ContractError("sum tree is empty");
  int64_t n = 1;
  while (n < capacity_) {
    const int64_t left = 2 * n;
    const int64_t right = left + 1;
    if ((u >= nodes_[left] && nodes_[right] > 0.0) || !(nodes_[left] > 0.0)) {
      u -= nodes_[left];
      n = right;
    } else {
      n = left;
    }
  }
  return n - capacity_;
}

ReplayBuffer::ReplayBuffer(int obs_dim, int action_dim, int horizon,
                           PerConfig per, int64_t capacity)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      horizon_(horizon),
      per_(per),
      capacity_(capacity) {
  if (obs_dim <= 0 || action_dim <= 0 || horizon < 1 || capacity <= 0) {
    throw ContractError("replay buffer dimensions must be positive");
  }
  per_.Validate();
}

double ReplayBuffer::LeafWeight(double priority) const {
  return std::pow(priority, per_.alpha);
}

ReplayBuffer::IndexRange ReplayBuffer::PushEpisode(const Matrix& states,
                                                   const Matrix& actions,
                                                   const Vector& rewards) {
  const int64_t length = rewards.size();
  if (length < 1 || states.rows() != obs_dim_ ||
      states.cols() != length + 1 || actions.rows() != action_dim_ ||
      actions.cols() != length) {
    throw ContractError(
        "episode needs T+1 states, T actions and T rewards of matching dims");
  }
  if (num_transitions() + length > capacity_) {
    throw std::length_error("replay buffer capacity of " +
                            std::to_string(capacity_) +
                            " transitions exceeded");
  }
  IndexRange range{num_transitions(), num_transitions() + length};
  episode_starts_.push_back(range.begin);
  states_.insert(states_.end(), states.data(), states.data() + states.size());
  actions_.insert(actions_.end(), actions.data(),
                  actions.data() + actions.size());
  for (int64_t t = 0; t < length; ++t) {
    rewards_.push_back(rewards(t));
    state_row_.push_back(num_states_ + t);
    const bool valid = t + horizon_ <= length;
    valid_.push_back(valid ? 1 : 0);
    priorities_.push_back(max_priority_);
    tree_.Push(valid ? LeafWeight(max_priority_) : 0.0);
    if (valid) ++num_valid_;
  }
  num_states_ += length + 1;
  return range;
}

void ReplayBuffer::CheckIndex(int64_t index) const {
  if (index < 0 || index >= num_transitions()) {
    throw ContractError("replay index " + std::to_string(index) +
                        " is not stored");
  }
}

double ReplayBuffer::priority(int64_t index) const {
  CheckIndex(index);
  return priorities_[index];
}

bool ReplayBuffer::is_valid_start(int64_t index) const {
  CheckIndex(index);
  return valid_[index] != 0;
}

double ReplayBuffer::Probability(int64_t index) const {
  CheckIndex(index);
  if (!valid_[index] || !(tree_.total() > 0.0)) return 0.0;
  return tree_.Get(index) / tree_.total();
}

std::optional<SegmentBatch> ReplayBuffer::Sample(int batch_size,
                                                 Rng& rng) const {
  if (batch_size < 1) throw ContractError("batch size must be >= 1");
  if (!ready()) return std::nullopt;

  SegmentBatch batch;
  batch.states.assign(horizon_ + 1, Matrix(obs_dim_, batch_size));
  batch.actions.assign(horizon_, Matrix(action_dim_, batch_size));
  batch.rewards.assign(horizon_, RowVector(batch_size));
  batch.weights.resize(batch_size);
  batch.indices.resize(batch_size);

  const double total = tree_.total();
  const double m = static_cast<double>(num_valid_);
  std::uniform_real_distribution<double> uniform(0.0, total);
  for (int b = 0; b < batch_size; ++b) {
    const int64_t i = tree_.Find(uniform(rng));
    batch.indices[b] = i;
    batch.weights(b) = std::pow(m * tree_.Get(i) / total, -per_.beta);
    const int64_t row = state_row_[i];
    for (int t = 0; t <= horizon_; ++t) {
      batch.states[t].col(b) = Eigen::Map<const Vector>(
          states_.data() + (row + t) * obs_dim_, obs_dim_);
    }
    for (int t = 0; t < horizon_; ++t) {
      batch.actions[t].col(b) = Eigen::Map<const Vector>(
          actions_.data() + (i + t) * action_dim_, action_dim_);
      batch.rewards[t](b) = rewards_[i + t];
    }
  }
  batch.weights /= batch.weights.maxCoeff();
  return batch;
}

void ReplayBuffer::UpdatePriorities(std::span<const int64_t> indices,
                                    const Vector& td_errors) {
  if (static_cast<Eigen::Index>(indices.size()) != td_errors.size()) {
    throw ContractError("one TD error per index is required");
  }
  for (size_t k = 0; k < indices.size(); ++k) CheckIndex(indices[k]);
  for (size_t k = 0; k < indices.size(); ++k) {
    const int64_t i = indices[k];
    const double p = std::abs(td_errors(static_cast<Eigen::Index>(k))) +
                     per_.eps;
    if (!std::isfinite(p)) continue;
    priorities_[i] = p;
    max_priority_ = std::max(max_priority_, p);
    if (valid_[i]) tree_.Set(i, LeafWeight(p));
  }
}

Vector ReplayBuffer::state(int64_t index) const {
  CheckIndex(index);
  return Eigen::Map<const Vector>(states_.data() + state_row_[index] * obs_dim_,
                                  obs_dim_);
}

Vector ReplayBuffer::next_state(int64_t index) const {
  CheckIndex(index);
  return Eigen::Map<const Vector>(
      states_.data() + (state_row_[index] + 1) * obs_dim_, obs_dim_);
}

Vector ReplayBuffer::action(int64_t index) const {
  CheckIndex(index);
  return Eigen::Map<const Vector>(actions_.data() + index * action_dim_,
                                  action_dim_);
}

double ReplayBuffer::reward(int64_t index) const {
  CheckIndex(index);
  return rewards_[index];
}

namespace {

constexpr char kBufferMagic[8] = {'T', 'D', 'M', 'P', 'C', 'R', 'B', '1'};

template <typename T>
void WritePod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void WriteVec(std::ostream& out, const std::vector<T>& v) {
  WritePod<uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T ReadPod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("replay snapshot: truncated");
  return value;
}

template <typename T>
std::vector<T> ReadVec(std::istream& in) {
  const uint64_t n = ReadPod<uint64_t>(in);
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw std::runtime_error("replay snapshot: truncated");
  return v;
}

}  // namespace

void ReplayBuffer::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kBufferMagic, sizeof(kBufferMagic));
  WritePod<int32_t>(out, obs_dim_);
  WritePod<int32_t>(out, action_dim_);
  WritePod<int32_t>(out, horizon_);
  WritePod(out, per_.alpha);
  WritePod(out, per_.beta);
  WritePod(out, per_.eps);
  WritePod<int64_t>(out, capacity_);
  WritePod(out, max_priority_);
  // Episodes are replayed on load; priorities are restored afterwards.
  std::vector<int64_t> lengths;
  for (size_t e = 0; e < episode_starts_.size(); ++e) {
    const int64_t end = e + 1 < episode_starts_.size()
                            ? episode_starts_[e + 1]
                            : num_transitions();
    lengths.push_back(end - episode_starts_[e]);
  }
  WriteVec(out, lengths);
  WriteVec(out, states_);
  WriteVec(out, actions_);
  WriteVec(out, rewards_);
  WriteVec(out, priorities_);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ReplayBuffer ReplayBuffer::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof(kBufferMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBufferMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("replay snapshot: bad magic");
  }
  const int obs_dim = ReadPod<int32_t>(in);
  const int action_dim = ReadPod<int32_t>(in);
  const int horizon = ReadPod<int32_t>(in);
  PerConfig per;
  per.alpha = ReadPod<double>(in);
  per.beta = ReadPod<double>(in);
  per.eps = ReadPod<double>(in);
  const int64_t capacity = ReadPod<int64_t>(in);
  const double max_priority = ReadPod<double>(in);
  const auto lengths = ReadVec<int64_t>(in);
  const auto states = ReadVec<double>(in);
  const auto actions = ReadVec<double>(in);
  const auto rewards = ReadVec<double>(in);
  const auto priorities = ReadVec<double>(in);

  ReplayBuffer buffer(obs_dim, action_dim, horizon, per, capacity);
  int64_t state_offset = 0, transition_offset = 0;
  for (int64_t length : lengths) {
    const Matrix s = Eigen::Map<const Matrix>(
        states.data() + state_offset * obs_dim, obs_dim, length + 1);
    const Matrix a = Eigen::Map<const Matrix>(
        actions.data() + transition_offset * action_dim, action_dim, length);
    const Vector r =
        Eigen::Map<const Vector>(rewards.data() + transition_offset, length);
    buffer.PushEpisode(s, a, r);
    state_offset += length + 1;
    transition_offset += length;
  }
  if (static_cast<int64_t>(priorities.size()) != buffer.num_transitions()) {
    throw std::runtime_error("replay snapshot: priority count mismatch");
  }
  for (int64_t i = 0; i < buffer.num_transitions(); ++i) {
    buffer.priorities_[i] = priorities[i];
    if (buffer.valid_[i]) buffer.tree_.Set(i, buffer.LeafWeight(priorities[i]));
  }
  buffer.max_priority_ = max_priority;
  return buffer;
}

}  // namespace tdmpc
