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

#ifndef TDMPC_SEGMENT_H_
#define TDMPC_SEGMENT_H_

#include <cstdint>
#include <vector>

#include "tdmpc/network.h"

namespace tdmpc {

// A batch of H-step trajectory segments, time-major. Column b of every
// matrix belongs to the same segment.
struct SegmentBatch {
  std::vector<Matrix> states;      // H + 1 entries, obs_dim x B
  std::vector<Matrix> actions;     // H entries, action_dim x B
  std::vector<RowVector> rewards;  // H entries, 1 x B
  Vector weights;                  // importance weights, B
  std::vector<int64_t> indices;    // replay start index per segment

  int horizon() const { return static_cast<int>(actions.size()); }
  int batch_size() const {
    return states.empty() ? 0 : static_cast<int>(states.front().cols());
  }
};

}  // namespace tdmpc

#endif  // TDMPC_SEGMENT_H_
