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

#ifndef TDMPC_ADAM_H_
#define TDMPC_ADAM_H_

#include <cstdint>
#include <string>

#include "tdmpc/network.h"

namespace tdmpc {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment estimates for one flat parameter vector.
struct AdamState {
  AdamState() = default;
  AdamState(Eigen::Index size, AdamOptions options)
      : options(options), m(Vector::Zero(size)), v(Vector::Zero(size)) {}

  AdamOptions options;
  Vector m;
  Vector v;
  int64_t step = 0;
};

enum class UpdateStatus { kOk, kNonFinite };

// Inf entry leaves params and state untouched and returns kNonFinite.
// Inf entry leaves params, moments and step untouched and returns kNonFinite.
UpdateStatus AdamStep(Eigen::Ref<Vector> params, const Vector& grad,
                      AdamState& state);

}  // namespace tdmpc

#endif  // TDMPC_ADAM_H_
