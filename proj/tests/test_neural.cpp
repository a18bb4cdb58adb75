#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace derc;
using derc::testing::numeric_grad;
using derc::testing::random_matrix;
using derc::testing::rel_error;

std::vector<nn::DenseLayer> random_stack(const std::vector<Eigen::Index>& dims,
                                         const std::vector<nn::Activation>& acts, std::mt19937_64& rng) {
  std::vector<nn::DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    layers.push_back({random_matrix(dims[i + 1], dims[i], rng), random_matrix(dims[i + 1], 1, rng).col(0),
                      acts[i]});
  return layers;
}

TEST(Init, BoundFollowsFanIn) {
  EXPECT_NEAR(nn::init_bound(3), 0.57735, 1e-5);
  EXPECT_NEAR(nn::init_bound(10153), 1.0 / std::sqrt(10153.0), 1e-15);
  EXPECT_NEAR(nn::init_bound(10153), 0.0099246, 1e-6);
  EXPECT_THROW(nn::init_bound(0), ArgumentError);
}

TEST(Init, UniformWithinBoundAndZeroBias) {
  std::mt19937_64 rng(1);
  const auto layer = nn::make_dense(50, 20, nn::Activation::relu, rng);
  const double l = nn::init_bound(50);
  EXPECT_LE(layer.weights.cwiseAbs().maxCoeff(), l);
  EXPECT_GT(layer.weights.cwiseAbs().maxCoeff(), 0.9 * l);
  EXPECT_TRUE(layer.bias.isZero());
  EXPECT_EQ(nn::init_uniform(3, 4, 4, std::uint64_t{5}), nn::init_uniform(3, 4, 4, std::uint64_t{5}));
}

TEST(Forward, IdentityLinearReturnsInput) {
  const std::vector<nn::DenseLayer> layers{{Matrix::Identity(3, 3), Vector::Zero(3), nn::Activation::linear}};
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(4, 3, rng);
  EXPECT_EQ(nn::apply(layers, x), x);
  EXPECT_EQ(nn::forward(layers, x).output(), x);
}

TEST(Forward, ZeroWeightsSigmoidGivesHalf) {
  const std::vector<nn::DenseLayer> layers{{Matrix::Zero(2, 3), Vector::Zero(2), nn::Activation::sigmoid}};
  const Matrix out = nn::apply(layers, Matrix::Ones(5, 3));
  EXPECT_TRUE(out.isConstant(0.5));
}

TEST(Forward, MatchesHandRolledTwoLayerNetwork) {
  std::mt19937_64 rng(3);
  const auto layers = random_stack({4, 3, 2}, {nn::Activation::relu, nn::Activation::sigmoid}, rng);
  const Matrix x = random_matrix(5, 4, rng);
  const Matrix out = nn::apply(layers, x);
  for (Eigen::Index s = 0; s < x.rows(); ++s)
    for (Eigen::Index o = 0; o < 2; ++o) {
      double acc = layers[1].bias(o);
      for (Eigen::Index h = 0; h < 3; ++h) {
        double pre = layers[0].bias(h);
        for (Eigen::Index i = 0; i < 4; ++i) pre += layers[0].weights(h, i) * x(s, i);
        acc += layers[1].weights(o, h) * std::max(pre, 0.0);
      }
      EXPECT_NEAR(out(s, o), 1.0 / (1.0 + std::exp(-acc)), 1e-12);
    }
}

TEST(Forward, WidthMismatchRejected) {
  const std::vector<nn::DenseLayer> layers{{Matrix::Zero(2, 3), Vector::Zero(2), nn::Activation::linear}};
  EXPECT_THROW(nn::apply(layers, Matrix::Zero(1, 4)), ArgumentError);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(nn::sigmoid(-1000.0), 0.0);
  EXPECT_EQ(nn::sigmoid(1000.0), 1.0);
  EXPECT_DOUBLE_EQ(nn::sigmoid(0.0), 0.5);
}

TEST(Mse, ElementMean) {
  EXPECT_DOUBLE_EQ(nn::mse_loss(Matrix::Zero(1, 2), Matrix::Ones(1, 2)).value, 1.0);
  EXPECT_THROW(nn::mse_loss(Matrix::Zero(1, 2), Matrix::Zero(2, 1)), ArgumentError);
}

TEST(Mse, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(3, 4, rng);
  Matrix r = random_matrix(3, 4, rng);
  const Matrix analytic = nn::mse_loss(x, r).grad;
  const Matrix numeric = numeric_grad([&] { return nn::mse_loss(x, r).value; }, r, 1e-5);
  EXPECT_LT(rel_error(analytic, numeric), 1e-6);
}

TEST(Backward, LinearLayerClosedForm) {
  std::mt19937_64 rng(5);
  const Eigen::Index n = 4, d = 3;
  const std::vector<nn::DenseLayer> layer{{random_matrix(d, d, rng), Vector::Zero(d), nn::Activation::linear}};
  const Matrix x = random_matrix(n, d, rng);
  const auto cache = nn::forward(layer, x);
  const auto loss = nn::mse_loss(x, cache.output());
  const auto back = nn::backward(layer, cache, loss.grad);
  // sum over samples of 2 (W x - x) x^T / (n d)
  const Matrix expected = 2.0 * (x * layer[0].weights.transpose() - x).transpose() * x /
                          static_cast<double>(n * d);
  EXPECT_LT(rel_error(back.grads[0].weights, expected), 1e-12);
}

TEST(Backward, ThreeLayerFiniteDifferences) {
  std::mt19937_64 rng(6);
  auto layers = random_stack({5, 4, 3, 5},
                             {nn::Activation::sigmoid, nn::Activation::linear, nn::Activation::sigmoid}, rng);
  const Matrix x = random_matrix(3, 5, rng, 0.0, 1.0);
  auto loss = [&] { return nn::mse_loss(x, nn::apply(layers, x)).value; };
  const auto cache = nn::forward(layers, x);
  const auto back = nn::backward(layers, cache, nn::mse_loss(x, cache.output()).grad);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    EXPECT_LT(rel_error(back.grads[l].weights, numeric_grad(loss, layers[l].weights)), 1e-4) << l;
    EXPECT_LT(rel_error(back.grads[l].bias, numeric_grad(loss, layers[l].bias)), 1e-4) << l;
  }
}

TEST(Backward, InputGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const auto layers = random_stack({4, 3, 2}, {nn::Activation::sigmoid, nn::Activation::linear}, rng);
  Matrix x = random_matrix(2, 4, rng);
  const Matrix target = random_matrix(2, 2, rng);
  auto loss = [&] { return nn::mse_loss(target, nn::apply(layers, x)).value; };
  const auto cache = nn::forward(layers, x);
  const auto back = nn::backward(layers, cache, nn::mse_loss(target, cache.output()).grad);
  EXPECT_LT(rel_error(back.input_grad, numeric_grad(loss, x)), 1e-6);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(8);
  const auto layers = random_stack({3, 4, 3}, {nn::Activation::relu, nn::Activation::sigmoid}, rng);
  const Matrix x = random_matrix(2, 3, rng);
  const auto cache = nn::forward(layers, x);
  const auto back = nn::backward(layers, cache, Matrix::Zero(2, 3));
  for (const auto& g : back.grads) {
    EXPECT_TRUE(g.weights.isZero());
    EXPECT_TRUE(g.bias.isZero());
  }
}

TEST(Sgd, PlainStep) {
  nn::SgdMomentum opt{0.1, 0.0, {}};
  Vector p = Vector::Zero(1);
  opt.update(0, p, Vector::Ones(1));
  EXPECT_DOUBLE_EQ(p(0), -0.1);
}

TEST(Sgd, MomentumAccumulates) {
  nn::SgdMomentum opt{0.1, 0.9, {}};
  Vector p = Vector::Zero(1);
  opt.update(0, p, Vector::Ones(1));
  EXPECT_NEAR(opt.velocity[0](0), -0.1, 1e-15);
  opt.update(0, p, Vector::Ones(1));
  EXPECT_NEAR(opt.velocity[0](0), -0.19, 1e-15);
  EXPECT_NEAR(p(0), -0.29, 1e-15);
}

TEST(Sgd, ZeroGradientDecaysVelocityOnly) {
  nn::SgdMomentum opt{0.1, 0.5, {}};
  Vector p = Vector::Constant(1, 2.0);
  opt.update(0, p, Vector::Zero(1));
  EXPECT_EQ(p(0), 2.0);
  opt.velocity[0](0) = 1.0;
  opt.update(0, p, Vector::Zero(1));
  EXPECT_DOUBLE_EQ(opt.velocity[0](0), 0.5);
  opt.update(0, p, Vector::Zero(1));
  EXPECT_DOUBLE_EQ(opt.velocity[0](0), 0.25);
}

TEST(Sgd, ShapeChangeRejected) {
  nn::SgdMomentum opt{0.1, 0.9, {}};
  Vector p = Vector::Zero(2);
  opt.update(0, p, Vector::Ones(2));
  Vector q = Vector::Zero(3);
  EXPECT_THROW(opt.update(0, q, Vector::Ones(3)), ArgumentError);
}

TEST(Sgd, SmallStepDecreasesLoss) {
  std::mt19937_64 rng(9);
  nn::NetworkParams params;
  params.encoder = random_stack({6, 4, 2}, {nn::Activation::relu, nn::Activation::relu}, rng);
  params.decoder = random_stack({2, 4, 6}, {nn::Activation::relu, nn::Activation::sigmoid}, rng);
  const Matrix x = random_matrix(4, 6, rng, 0.0, 1.0);
  const auto before = ae_batch_loss(params, x);
  nn::SgdMomentum opt{1e-4, 0.0, {}};
  nn::sgd_momentum_step(opt, params, before.grads);
  EXPECT_LT(ae_batch_loss(params, x).total, before.total);
}

TEST(Activation, NamesRoundTrip) {
  for (auto a : {nn::Activation::relu, nn::Activation::sigmoid, nn::Activation::linear})
    EXPECT_EQ(nn::activation_from_string(nn::to_string(a)), a);
  EXPECT_THROW(nn::activation_from_string("tanh"), ConfigError);
}

}  // namespace
