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

#include <gtest/gtest.h>

#include "gradient_check.h"
#include "test_util.h"

namespace tdmpc {
namespace {

using ::tdmpc::testing::NetworkGradientError;
using ::tdmpc::testing::RandomMatrix;
using ::tdmpc::testing::TinyDims;

constexpr double kGradientTolerance = 1e-4;

class RoleGradientTest : public ::testing::TestWithParam<NetworkRole> {};

TEST_P(RoleGradientTest, MatchesCentralDifferences) {
  const double err = NetworkGradientError(GetParam(), /*draws=*/20,
                                          /*seed=*/static_cast<int>(GetParam()));
  EXPECT_LT(err, kGradientTolerance) << RoleName(GetParam());
}

INSTANTIATE_TEST_SUITE_P(
    AllRoles, RoleGradientTest,
    ::testing::Values(NetworkRole::kEncoder, NetworkRole::kDynamics,
                      NetworkRole::kReward, NetworkRole::kQ1,
                      NetworkRole::kQ2, NetworkRole::kPolicy),
    [](const auto& info) { return std::string(RoleName(info.param)); });

TEST(NetworkTest, IdentityLinearLayer) {
  Network net(NetworkRole::kEncoder, {{2, 2, Activation::kLinear, false}});
  net.weight(0).setIdentity();
  net.bias(0).setZero();
  Vector x(2);
  x << 3.0, -2.0;
  EXPECT_EQ(Vector(net.Forward(x)), x);
}

TEST(NetworkTest, EluClosedForm) {
  Network net(NetworkRole::kEncoder, {{3, 3, Activation::kElu, false}});
  net.weight(0).setIdentity();
  net.bias(0).setZero();
  Vector x(3);
  x << 0.0, 1.0, -1.0;
  Matrix y = net.Forward(x);
  EXPECT_EQ(y(0), 0.0);
  EXPECT_EQ(y(1), 1.0);
  EXPECT_NEAR(y(2), std::exp(-1.0) - 1.0, 1e-15);
}

TEST(NetworkTest, LayerNormOfConstantIsZero) {
  Network net(NetworkRole::kQ1, {{4, 4, Activation::kLinear, true}});
  net.weight(0).setIdentity();
  net.bias(0).setZero();
  net.ln_gain(0).setOnes();
  net.ln_shift(0).setZero();
  Tape tape;
  Matrix y = net.Forward(Vector::Constant(4, 5.0), &tape);
  EXPECT_TRUE(tape.layers[0].normalized.isZero(0.0));
  EXPECT_TRUE(y.isZero(0.0));
}

TEST(NetworkTest, LinearLayerCalculus) {
  Rng rng(9);
  Network net(NetworkRole::kReward, {{3, 2, Activation::kLinear, false}});
  net.params() = RandomMatrix(static_cast<int>(net.num_params()), 1, rng);
  Vector x = RandomMatrix(3, 1, rng);
  Vector g = RandomMatrix(2, 1, rng);
  Tape tape;
  net.Forward(x, &tape);
  Vector grad = Vector::Zero(net.num_params());
  Matrix input_grad = net.Backward(tape, g, &grad);
  Matrix dw = g * x.transpose();
  EXPECT_TRUE(grad.head(6).isApprox(dw.reshaped(), 1e-15));
  EXPECT_TRUE(grad.tail(2).isApprox(g, 1e-15));
  EXPECT_TRUE(input_grad.isApprox(net.weight(0).transpose() * g, 1e-15));
}

TEST(NetworkTest, ZeroOutputGradientGivesZeroGradients) {
  Rng rng(10);
  Network net = InitNetwork(NetworkRole::kQ1, TinyDims(), rng);
  testing::RandomizeParams(net, rng);
  Matrix x = RandomMatrix(net.input_dim(), 3, rng);
  Tape tape;
  net.Forward(x, &tape);
  Vector grad = Vector::Zero(net.num_params());
  Matrix input_grad = net.Backward(tape, Matrix::Zero(1, 3), &grad);
  EXPECT_TRUE(grad.isZero(0.0));
  EXPECT_TRUE(input_grad.isZero(0.0));
}

TEST(NetworkTest, SameSeedSameParameters) {
  for (NetworkRole role : {NetworkRole::kEncoder, NetworkRole::kPolicy}) {
    Rng a(42), b(42);
    EXPECT_EQ(InitNetwork(role, TinyDims(), a).params(),
              InitNetwork(role, TinyDims(), b).params());
  }
}

TEST(NetworkTest, ChainedDynamicsGradientMatchesCentralDifferences) {
  EXPECT_LT(testing::ChainedDynamicsGradientError(20, 7), kGradientTolerance);
}

TEST(NetworkTest, ArchitectureFollowsRoles) {
  Rng rng(1);
  NetworkDims dims = TinyDims();
  Network q = InitNetwork(NetworkRole::kQ1, dims, rng);
  ASSERT_EQ(q.layers().size(), 3u);
  EXPECT_TRUE(q.layers()[0].layer_norm);
  EXPECT_EQ(q.layers()[0].activation, Activation::kTanh);
  EXPECT_EQ(q.layers()[1].activation, Activation::kElu);
  EXPECT_EQ(q.layers()[2].activation, Activation::kLinear);
  EXPECT_EQ(q.input_dim(), dims.latent_dim + dims.action_dim);
  EXPECT_EQ(q.output_dim(), 1);

  Network pi = InitNetwork(NetworkRole::kPolicy, dims, rng);
  EXPECT_EQ(pi.layers().back().activation, Activation::kTanh);
  EXPECT_EQ(pi.output_dim(), dims.action_dim);

  Network h = InitNetwork(NetworkRole::kEncoder, dims, rng);
  EXPECT_EQ(h.input_dim(), dims.obs_dim);
  EXPECT_EQ(h.output_dim(), dims.latent_dim);
}

TEST(NetworkTest, RewardAndValueHeadsStartAtZero) {
  Rng rng(2);
  for (NetworkRole role :
       {NetworkRole::kReward, NetworkRole::kQ1, NetworkRole::kQ2}) {
    Network net = InitNetwork(role, TinyDims(), rng);
    const int last = static_cast<int>(net.layers().size()) - 1;
    EXPECT_TRUE(net.weight(last).isZero(0.0));
    EXPECT_TRUE(net.bias(last).isZero(0.0));
    EXPECT_TRUE(net.Forward(RandomMatrix(net.input_dim(), 4, rng)).isZero(0.0));
  }
}

TEST(NetworkTest, HiddenWeightsAreOrthogonal) {
  Rng rng(3);
  NetworkDims dims = TinyDims();
  dims.mlp_hidden = 8;
  Network dyn = InitNetwork(NetworkRole::kDynamics, dims, rng);
  for (int l = 0; l < static_cast<int>(dyn.layers().size()); ++l) {
    Matrix w = dyn.weight(l);
    // Orthonormal rows or columns, whichever is the smaller set.
    Matrix gram = w.rows() <= w.cols() ? Matrix(w * w.transpose())
                                       : Matrix(w.transpose() * w);
    EXPECT_TRUE(gram.isIdentity(1e-12)) << "layer " << l;
    EXPECT_TRUE(dyn.bias(l).isZero(0.0));
  }
}

TEST(NetworkTest, IdentityNetworkPassesThrough) {
  Network id = Network::Identity(NetworkRole::kEncoder, 3);
  Rng rng(4);
  Matrix x = RandomMatrix(3, 5, rng);
  EXPECT_EQ(id.Forward(x), x);
  EXPECT_EQ(id.num_params(), 0);
  Tape tape;
  id.Forward(x, &tape);
  Vector grad(0);
  EXPECT_EQ(id.Backward(tape, x, &grad), x);
}

TEST(NetworkTest, LayerNormOutputIsStandardized) {
  Rng rng(5);
  Network q = InitNetwork(NetworkRole::kQ1, TinyDims(), rng);
  Matrix x = RandomMatrix(q.input_dim(), 7, rng, 3.0);
  Tape tape;
  q.Forward(x, &tape);
  const Matrix& n = tape.layers[0].normalized;
  EXPECT_TRUE(n.colwise().mean().isZero(1e-12));
  const RowVector var = n.array().square().colwise().mean();
  EXPECT_TRUE(var.isOnes(1e-3));
}

TEST(NetworkTest, WrongInputWidthIsRejected) {
  Rng rng(6);
  Network net = InitNetwork(NetworkRole::kDynamics, TinyDims(), rng);
  EXPECT_THROW(net.Forward(Matrix::Zero(net.input_dim() + 1, 2)),
               ContractError);
  Tape tape;
  net.Forward(Matrix::Zero(net.input_dim(), 2), &tape);
  EXPECT_THROW(net.Backward(tape, Matrix::Zero(net.output_dim(), 3), nullptr),
               ContractError);
  Vector wrong = Vector::Zero(net.num_params() + 1);
  EXPECT_THROW(net.Backward(tape, Matrix::Zero(net.output_dim(), 2), &wrong),
               ContractError);
}

TEST(NetworkTest, BackwardAccumulatesIntoGradient) {
  Rng rng(7);
  Network net = InitNetwork(NetworkRole::kPolicy, TinyDims(), rng);
  Matrix x = RandomMatrix(net.input_dim(), 3, rng);
  Matrix probe = RandomMatrix(net.output_dim(), 3, rng);
  Tape tape;
  net.Forward(x, &tape);
  Vector once = Vector::Zero(net.num_params());
  net.Backward(tape, probe, &once);
  Vector twice = Vector::Zero(net.num_params());
  net.Backward(tape, probe, &twice);
  net.Backward(tape, probe, &twice);
  EXPECT_TRUE(twice.isApprox(2.0 * once, 1e-14));
}

TEST(NetworkTest, ForwardIsBatchIndependent) {
  Rng rng(8);
  Network net = InitNetwork(NetworkRole::kQ2, TinyDims(), rng);
  testing::RandomizeParams(net, rng);
  Matrix x = RandomMatrix(net.input_dim(), 6, rng);
  Matrix full = net.Forward(x);
  for (int j = 0; j < 6; ++j) {
    EXPECT_TRUE(net.Forward(x.col(j)).isApprox(full.col(j), 1e-14));
  }
}

}  // namespace
}  // namespace tdmpc
