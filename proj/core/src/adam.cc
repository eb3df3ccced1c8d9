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

#include "tdmpc/adam.h"

#include <cmath>

namespace tdmpc {

UpdateStatus AdamStep(Eigen::Ref<Vector> params, const Vector& grad,
                      AdamState& state) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ContractError("adam: operand sizes differ");
  }
  if (!grad.allFinite()) return UpdateStatus::kNonFinite;

  const AdamOptions& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  state.m = o.beta1 * state.m + (1.0 - o.beta1) * grad;
  state.v = o.beta2 * state.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  const double step_size = o.lr / bc1;
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);
  params.array() -= step_size * state.m.array() /
                    (state.v.array().sqrt() * inv_sqrt_bc2 + o.eps);
  return UpdateStatus::kOk;
}

}  // namespace tdmpc
