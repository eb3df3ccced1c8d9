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

#ifndef TDMPC_NETWORK_H_
#define TDMPC_NETWORK_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tdmpc/rng.h"

namespace tdmpc {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

// Thrown when a caller breaks a shape or layout contract.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a model produces NaN/Inf where a finite value is required.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { kLinear = 0, kElu = 1, kTanh = 2 };
enum class NetworkRole {
  kEncoder = 0,
  kDynamics = 1,
  kReward = 2,
  kQ1 = 3,
  kQ2 = 4,
  kPolicy = 5,
};

std::string_view RoleName(NetworkRole role);

inline constexpr double kLayerNormEps = 1e-5;

// One dense layer: affine -> optional LayerNorm (with elementwise gain and
// shift) -> activation.
struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation activation = Activation::kLinear;
  bool layer_norm = false;

  bool operator==(const LayerSpec&) const = default;
};

// Cached intermediates of one batched forward pass. Columns are batch items.
struct Tape {
  struct Layer {
    Matrix input;           // in x B
    Matrix normalized;      // out x B, (x - mean) * inv_std; LayerNorm only
    RowVector inv_std;      // 1 x B; LayerNorm only
    Matrix pre_activation;  // out x B, input of the activation
    Matrix output;          // out x B; tanh layers only
  };
  std::vector<Layer> layers;
  // Number of parameters of the network that recorded the tape.
  Eigen::Index num_params = 0;
};

// A stack of dense layers whose parameters live in one flat vector, so
// gradients, Adam moments and EMA targets share a single index layout.
//
// Per layer the layout is: weight (out x in, column-major), bias (out), and
// for LayerNorm layers gain (out) then shift (out).
class Network {
 public:
  Network() = default;
  Network(NetworkRole role, std::vector<LayerSpec> layers);

  // A parameter-free network that returns its input (identity encoder).
  static Network Identity(NetworkRole role, int dim);

  NetworkRole role() const { return role_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  Eigen::Index num_params() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<Vector> bias(int layer);
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Vector> ln_gain(int layer);
  Eigen::Map<const Vector> ln_gain(int layer) const;
  Eigen::Map<Vector> ln_shift(int layer);
  Eigen::Map<const Vector> ln_shift(int layer) const;

  // Evaluates the network on a batch (input_dim x B). The overload without a
  // tape allocates no gradient bookkeeping.
  Matrix Forward(const Eigen::Ref<const Matrix>& input) const;
  Matrix Forward(const Eigen::Ref<const Matrix>& input, Tape* tape) const;

  // Reverse pass for the forward call that filled `tape`. Accumulates
  // d(sum(output .* output_grad))/d(params) into `param_grad` (which must have
  // num_params() entries) and returns the gradient w.r.t. the input.
  // `param_grad` may be null when only the input gradient is wanted.
  Matrix Backward(const Tape& tape, const Eigen::Ref<const Matrix>& output_grad,
                  Vector* param_grad) const;

  bool SameArchitecture(const Network& other) const {
    return role_ == other.role_ && layers_ == other.layers_ &&
           input_dim_ == other.input_dim_;
  }

 private:
  struct Offsets {
    Eigen::Index weight, bias, gain, shift;
  };

  NetworkRole role_ = NetworkRole::kEncoder;
  std::vector<LayerSpec> layers_;
  std::vector<Offsets> offsets_;
  int input_dim_ = 0;
  int output_dim_ = 0;
  Vector params_;
};

// Sizes shared by the TOLD networks.
struct NetworkDims {
  int obs_dim = 0;
  int action_dim = 0;
  int latent_dim = 50;
  int encoder_hidden = 256;
  int mlp_hidden = 512;
};

// Builds the architecture for `role` and initializes it: orthogonal weights
// (gain 1) and zero biases everywhere, except the last layer of the reward
// and Q networks which is all zeros.
Network InitNetwork(NetworkRole role, const NetworkDims& dims, Rng& rng);

// Fills `weight` with a (semi-)orthogonal matrix drawn from `rng`.
void OrthogonalInit(Eigen::Ref<Matrix> weight, Rng& rng);

}  // namespace tdmpc

#endif  // TDMPC_NETWORK_H_
