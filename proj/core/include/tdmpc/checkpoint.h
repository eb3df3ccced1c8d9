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

#ifndef TDMPC_CHECKPOINT_H_
#define TDMPC_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "tdmpc/network.h"

namespace tdmpc {

inline constexpr int kCheckpointVersion = 1;

struct NamedNetwork {
  std::string name;
  Network net;
};

// A set of named networks plus a free-form metadata string (JSON by
// convention: dims, seed, env, step counters).
//
// On-disk layout, little-endian:
//   "TDMPCCKP" | u32 version | u64 len | metadata bytes | u32 sections
//   per section: u32 len | name | u32 role | u32 input_dim | u32 layers
//                per layer: u32 in | u32 out | u32 activation | u32 norm
//                u64 count | count x f64 parameters
struct Checkpoint {
  std::string metadata;
  std::vector<NamedNetwork> sections;

  const Network& Get(const std::string& name) const;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DeserializeCheckpoint(const std::string& bytes);

void SaveCheckpoint(const std::filesystem::path& path,
                    const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace tdmpc

#endif  // TDMPC_CHECKPOINT_H_
