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

#include "tdmpc/network.h"

#include <cmath>
#include <string>
#include <utility>

namespace tdmpc {
namespace {

void CheckLayer(const std::vector<LayerSpec>& layers, int l) {
  if (l < 0 || l >= static_cast<int>(layers.size())) {
    throw ContractError("layer index " + std::to_string(l) + " out of range");
  }
}

void ApplyActivation(Activation act, const Matrix& x, Matrix* y) {
  switch (act) {
    case Activation::kLinear:
      *y = x;
      break;
    case Activation::kElu:
      *y = (x.array().max(0.0) + (x.array().min(0.0).exp() - 1.0)).matrix();
      break;
    case Activation::kTanh:
      // Eigen's double tanh is scalar; the exp form vectorizes.
      *y = (1.0 - 2.0 / ((2.0 * x.array().max(-20.0).min(20.0)).exp() + 1.0))
               .matrix();
      break;
  }
}

// dL/dx given dL/dy, the activation input x and its output y.
Matrix ActivationBackward(Activation act, const Matrix& x, const Matrix& y,
                          const Matrix& dy) {
  switch (act) {
    case Activation::kLinear:
      return dy;
    case Activation::kElu:
      return (dy.array() * x.array().min(0.0).exp()).matrix();
    case Activation::kTanh:
      return (dy.array() * (1.0 - y.array().square())).matrix();
  }
  return dy;
}

}  // namespace

std::string_view RoleName(NetworkRole role) {
  switch (role) {
    case NetworkRole::kEncoder:
      return "encoder";
    case NetworkRole::kDynamics:
      return "dynamics";
    case NetworkRole::kReward:
      return "reward";
    case NetworkRole::kQ1:
      return "q1";
    case NetworkRole::kQ2:
      return "q2";
    case NetworkRole::kPolicy:
      return "policy";
  }
  return "unknown";
}

Network::Network(NetworkRole role, std::vector<LayerSpec> layers)
    : role_(role), layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw ContractError("network needs at least one layer");
  }
  Eigen::Index offset = 0;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& spec = layers_[l];
    if (spec.in <= 0 || spec.out <= 0) {
      throw ContractError("layer dimensions must be positive");
    }
    if (l > 0 && layers_[l - 1].out != spec.in) {
      throw ContractError("layer " + std::to_string(l) + " expects " +
                          std::to_string(spec.in) + " inputs but layer " +
                          std::to_string(l - 1) + " emits " +
                          std::to_string(layers_[l - 1].out));
    }
    Offsets o;
    o.weight = offset;
    offset += static_cast<Eigen::Index>(spec.out) * spec.in;
    o.bias = offset;
    offset += spec.out;
    o.gain = o.shift = -1;
    if (spec.layer_norm) {
      o.gain = offset;
      offset += spec.out;
      o.shift = offset;
      offset += spec.out;
    }
    offsets_.push_back(o);
  }
  input_dim_ = layers_.front().in;
  output_dim_ = layers_.back().out;
  params_ = Vector::Zero(offset);
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].layer_norm) ln_gain(static_cast<int>(l)).setOnes();
  }
}

Network Network::Identity(NetworkRole role, int dim) {
  if (dim <= 0) throw ContractError("identity network needs a positive dim");
  Network net;
  net.role_ = role;
  net.input_dim_ = dim;
  net.output_dim_ = dim;
  return net;
}

Eigen::Map<Matrix> Network::weight(int l) {
  CheckLayer(layers_, l);
  return {params_.data() + offsets_[l].weight, layers_[l].out, layers_[l].in};
}
Eigen::Map<const Matrix> Network::weight(int l) const {
  CheckLayer(layers_, l);
  return {params_.data() + offsets_[l].weight, layers_[l].out, layers_[l].in};
}
Eigen::Map<Vector> Network::bias(int l) {
  CheckLayer(layers_, l);
  return {params_.data() + offsets_[l].bias, layers_[l].out};
}
Eigen::Map<const Vector> Network::bias(int l) const {
  CheckLayer(layers_, l);
  return {params_.data() + offsets_[l].bias, layers_[l].out};
}
Eigen::Map<Vector> Network::ln_gain(int l) {
  CheckLayer(layers_, l);
  if (!layers_[l].layer_norm) throw ContractError("layer has no LayerNorm");
  return {params_.data() + offsets_[l].gain, layers_[l].out};
}
Eigen::Map<const Vector> Network::ln_gain(int l) const {
  CheckLayer(layers_, l);
  if (!layers_[l].layer_norm) throw ContractError("layer has no LayerNorm");
  return {params_.data() + offsets_[l].gain, layers_[l].out};
}
Eigen::Map<Vector> Network::ln_shift(int l) {
  CheckLayer(layers_, l);
  if (!layers_[l].layer_norm) throw ContractError("layer has no LayerNorm");
  return {params_.data() + offsets_[l].shift, layers_[l].out};
}
Eigen::Map<const Vector> Network::ln_shift(int l) const {
  CheckLayer(layers_, l);
  if (!layers_[l].layer_norm) throw ContractError("layer has no LayerNorm");
  return {params_.data() + offsets_[l].shift, layers_[l].out};
}

Matrix Network::Forward(const Eigen::Ref<const Matrix>& input) const {
  return Forward(input, nullptr);
}

Matrix Network::Forward(const Eigen::Ref<const Matrix>& input,
                        Tape* tape) const {
  if (input.rows() != input_dim_) {
    throw ContractError(std::string(RoleName(role_)) + ": input has " +
                        std::to_string(input.rows()) + " rows, expected " +
                        std::to_string(input_dim_));
  }
  if (tape != nullptr) {
    tape->layers.clear();
    tape->layers.resize(layers_.size());
    tape->num_params = num_params();
  }
  Matrix x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const int li = static_cast<int>(l);
    const LayerSpec& spec = layers_[l];
    Matrix pre(spec.out, input.cols());
    if (l == 0) {
      pre.noalias() = weight(li) * input;
    } else {
      pre.noalias() = weight(li) * x;
    }
    pre.colwise() += bias(li);
    Matrix normalized;
    RowVector inv_std;
    if (spec.layer_norm) {
      const double n = spec.out;
      RowVector mean = pre.colwise().sum() / n;
      normalized = pre.rowwise() - mean;
      RowVector var = normalized.array().square().colwise().sum() / n;
      inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
      normalized = normalized * inv_std.asDiagonal();
      pre = ln_gain(li).asDiagonal() * normalized;
      pre.colwise() += ln_shift(li);
    }
    Matrix out;
    ApplyActivation(spec.activation, pre, &out);
    if (tape != nullptr) {
      Tape::Layer& cache = tape->layers[l];
      cache.input = l == 0 ? Matrix(input) : std::move(x);
      cache.normalized = std::move(normalized);
      cache.inv_std = std::move(inv_std);
      cache.pre_activation = std::move(pre);
      if (spec.activation == Activation::kTanh) cache.output = out;
    }
    x = std::move(out);
  }
  if (layers_.empty()) return input;
  return x;
}

Matrix Network::Backward(const Tape& tape,
                         const Eigen::Ref<const Matrix>& output_grad,
                         Vector* param_grad) const {
  if (tape.layers.size() != layers_.size() ||
      tape.num_params != num_params()) {
    throw ContractError(std::string(RoleName(role_)) +
                        ": tape was recorded by a different network");
  }
  if (output_grad.rows() != output_dim_) {
    throw ContractError(std::string(RoleName(role_)) +
                        ": output gradient has wrong row count");
  }
  if (param_grad != nullptr && param_grad->size() != num_params()) {
    throw ContractError(std::string(RoleName(role_)) +
                        ": gradient buffer layout does not match parameters");
  }
  if (layers_.empty()) return output_grad;
  if (output_grad.cols() != tape.layers.back().pre_activation.cols()) {
    throw ContractError(std::string(RoleName(role_)) +
                        ": output gradient batch size differs from tape");
  }

  Matrix grad = output_grad;
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const LayerSpec& spec = layers_[l];
    const Tape::Layer& cache = tape.layers[l];
    Matrix d_pre = ActivationBackward(spec.activation, cache.pre_activation,
                                      cache.output, grad);
    if (spec.layer_norm) {
      if (param_grad != nullptr) {
        const Offsets& o = offsets_[l];
        param_grad->segment(o.gain, spec.out) +=
            (d_pre.array() * cache.normalized.array()).rowwise().sum().matrix();
        param_grad->segment(o.shift, spec.out) += d_pre.rowwise().sum();
      }
      const double n = spec.out;
      Matrix d_norm = ln_gain(l).asDiagonal() * d_pre;
      RowVector sum_d = d_norm.colwise().sum();
      RowVector sum_dx =
          (d_norm.array() * cache.normalized.array()).colwise().sum().matrix();
      Matrix centered = (n * d_norm).rowwise() - sum_d;
      centered -= cache.normalized * sum_dx.asDiagonal();
      d_pre = centered * (cache.inv_std / n).asDiagonal();
    }
    if (param_grad != nullptr) {
      const Offsets& o = offsets_[l];
      Eigen::Map<Matrix> dw(param_grad->data() + o.weight, spec.out, spec.in);
      dw.noalias() += d_pre * cache.input.transpose();
      param_grad->segment(o.bias, spec.out) += d_pre.rowwise().sum();
    }
    grad = weight(l).transpose() * d_pre;
  }
  return grad;
}

void OrthogonalInit(Eigen::Ref<Matrix> weight, Rng& rng) {
  const Eigen::Index rows = weight.rows();
  const Eigen::Index cols = weight.cols();
  const bool transpose = rows < cols;
  const Eigen::Index tall = transpose ? cols : rows;
  const Eigen::Index wide = transpose ? rows : cols;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix draw(tall, wide);
  for (Eigen::Index j = 0; j < wide; ++j) {
    for (Eigen::Index i = 0; i < tall; ++i) draw(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(draw);
  Matrix q = qr.householderQ() * Matrix::Identity(tall, wide);
  Matrix r = qr.matrixQR().topRows(wide).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < wide; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  if (transpose) {
    weight = q.transpose();
  } else {
    weight = q;
  }
}

Network InitNetwork(NetworkRole role, const NetworkDims& dims, Rng& rng) {
  const int s = dims.obs_dim, z = dims.latent_dim, a = dims.action_dim;
  const int hid = dims.mlp_hidden;
  if (s <= 0 || z <= 0 || a <= 0 || hid <= 0 || dims.encoder_hidden <= 0) {
    throw ContractError("network dims must be positive");
  }
  std::vector<LayerSpec> layers;
  switch (role) {
    case NetworkRole::kEncoder:
      layers = {{s, dims.encoder_hidden, Activation::kElu},
                {dims.encoder_hidden, z, Activation::kLinear}};
      break;
    case NetworkRole::kDynamics:
      layers = {{z + a, hid, Activation::kElu},
                {hid, hid, Activation::kElu},
                {hid, z, Activation::kLinear}};
      break;
    case NetworkRole::kReward:
      layers = {{z + a, hid, Activation::kElu},
                {hid, hid, Activation::kElu},
                {hid, 1, Activation::kLinear}};
      break;
    case NetworkRole::kQ1:
    case NetworkRole::kQ2:
      layers = {{z + a, hid, Activation::kTanh, /*layer_norm=*/true},
                {hid, hid, Activation::kElu},
                {hid, 1, Activation::kLinear}};
      break;
    case NetworkRole::kPolicy:
      layers = {{z, hid, Activation::kElu},
                {hid, hid, Activation::kElu},
                {hid, a, Activation::kTanh}};
      break;
  }
  Network net(role, std::move(layers));
  const int n = static_cast<int>(net.layers().size());
  const bool zero_last = role == NetworkRole::kReward ||
                         role == NetworkRole::kQ1 || role == NetworkRole::kQ2;
  for (int l = 0; l < n; ++l) {
    if (zero_last && l == n - 1) continue;
    OrthogonalInit(net.weight(l), rng);
  }
  return net;
}

}  // namespace tdmpc
