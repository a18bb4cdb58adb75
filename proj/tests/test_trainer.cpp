#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace derc;
using derc::testing::numeric_grad;
using derc::testing::random_matrix;
using derc::testing::rel_error;

struct Fixture {
  Dataset data;
  nn::NetworkParams params;
  Matrix centroids;
};

Fixture make_fixture(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_samples = 20;
  spec.n_features = 30;
  spec.n_informative = 10;
  spec.seed = seed;
  Fixture f;
  f.data = generate_synthetic(spec);
  AeSpec ae;
  ae.layer_dims = {12, 4};
  PretrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = seed;
  f.params = pretrain_ae(f.data.values, ae, cfg).params;
  KmeansOptions km;
  km.restarts = 5;
  f.centroids = kmeans_fit(encode(f.params, f.data.values), km).centroids;
  return f;
}

DercConfig short_config() {
  DercConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 5;
  return cfg;
}

TEST(DercLoss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  AeSpec ae;
  ae.layer_dims = {5, 3};
  ae.hidden_activation = nn::Activation::sigmoid;
  ae.latent_activation = nn::Activation::linear;
  auto params = build_autoencoder(ae, 7, false, rng);
  for (auto* stack : {&params.encoder, &params.decoder})
    for (auto& l : *stack) l.bias = random_matrix(l.fan_out(), 1, rng).col(0);
  Matrix mu = random_matrix(2, 3, rng);
  const Matrix x = random_matrix(4, 7, rng, 0.0, 1.0);
  const Matrix p = target_distribution(soft_assign(random_matrix(4, 3, rng), mu));
  const double beta = 0.75;
  const auto loss = derc_batch_loss(params, mu, x, p, beta);
  auto f = [&] { return derc_batch_loss(params, mu, x, p, beta).total; };
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    EXPECT_LT(rel_error(loss.grads.encoder[l].weights, numeric_grad(f, params.encoder[l].weights)), 1e-6);
    EXPECT_LT(rel_error(loss.grads.encoder[l].bias, numeric_grad(f, params.encoder[l].bias)), 1e-6);
  }
  for (std::size_t l = 0; l < params.decoder.size(); ++l)
    EXPECT_LT(rel_error(loss.grads.decoder[l].weights, numeric_grad(f, params.decoder[l].weights)), 1e-6);
  EXPECT_LT(rel_error(loss.centroid_grad, numeric_grad(f, mu)), 1e-6);
  EXPECT_NEAR(loss.total, loss.cluster + beta * loss.reconstruction, 1e-15);
}

TEST(DercLoss, CentroidStepDecreasesClusterLoss) {
  const auto fx = make_fixture(2);
  const auto state = refresh_state(fx.params, fx.centroids, fx.data.values);
  Matrix mu = fx.centroids;
  const auto before = derc_batch_loss(fx.params, mu, fx.data.values, state.p, 0.0);
  mu -= 1e-4 * before.centroid_grad;
  const auto after = derc_batch_loss(fx.params, mu, fx.data.values, state.p, 0.0);
  EXPECT_LT(after.cluster, before.cluster);
}

TEST(TrainDerc, ZeroBetaLeavesDecoderUntouched) {
  const auto fx = make_fixture(3);
  auto cfg = short_config();
  cfg.beta = 0.0;
  const auto r = train_derc(fx.data.values, fx.params, fx.centroids, cfg);
  for (std::size_t l = 0; l < fx.params.decoder.size(); ++l) {
    EXPECT_EQ(r.params.decoder[l].weights, fx.params.decoder[l].weights);
    EXPECT_EQ(r.params.decoder[l].bias, fx.params.decoder[l].bias);
  }
  EXPECT_NE(r.params.encoder[0].weights, fx.params.encoder[0].weights);
}

TEST(TrainDerc, IterationCountAndHistory) {
  const auto fx = make_fixture(4);
  const auto r = train_derc(fx.data.values, fx.params, fx.centroids, short_config());
  EXPECT_EQ(r.iterations, 9u);  // ceil(20 / 8) batches x 3 epochs
  ASSERT_EQ(r.history.size(), 9u);
  EXPECT_EQ(r.history.front().iteration, 0u);
  const auto csv = derc_history_csv(r.history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,cluster_loss,reconstruction_loss,total_loss");
  EXPECT_EQ(r.prediction.cluster_ids, predict(r.params, r.state.centroids, fx.data.values).cluster_ids);
}

TEST(TrainDerc, CentroidPermutationIsEquivariant) {
  const auto fx = make_fixture(5);
  Matrix swapped(fx.centroids.rows(), fx.centroids.cols());
  swapped.row(0) = fx.centroids.row(1);
  swapped.row(1) = fx.centroids.row(0);
  const auto a = train_derc(fx.data.values, fx.params, fx.centroids, short_config());
  const auto b = train_derc(fx.data.values, fx.params, swapped, short_config());
  for (std::size_t i = 0; i < a.prediction.cluster_ids.size(); ++i)
    EXPECT_EQ(a.prediction.cluster_ids[i], 1 - b.prediction.cluster_ids[i]);
  EXPECT_LT((a.state.centroids.row(0) - b.state.centroids.row(1)).norm(), 1e-9);
  EXPECT_LT((a.state.q.col(0) - b.state.q.col(1)).norm(), 1e-9);
}

TEST(TrainDerc, DeterministicForSeed) {
  const auto fx = make_fixture(6);
  const auto a = train_derc(fx.data.values, fx.params, fx.centroids, short_config());
  const auto b = train_derc(fx.data.values, fx.params, fx.centroids, short_config());
  EXPECT_EQ(a.state.q, b.state.q);
  EXPECT_EQ(derc_history_csv(a.history), derc_history_csv(b.history));
}

TEST(TrainDerc, EarlyStopWhenAssignmentsSettle) {
  const auto fx = make_fixture(7);
  auto cfg = short_config();
  cfg.epochs = 50;
  cfg.update_interval = 2;
  cfg.stop_fraction = 0.5;
  const auto r = train_derc(fx.data.values, fx.params, fx.centroids, cfg);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.iterations, 2u);
}

TEST(TrainDerc, RejectsMismatchedInputs) {
  const auto fx = make_fixture(8);
  EXPECT_THROW(train_derc(fx.data.values, fx.params, fx.centroids.topRows(1), short_config()),
               ArgumentError);
  EXPECT_THROW(train_derc(fx.data.values.leftCols(10), fx.params, fx.centroids, short_config()),
               ArgumentError);
  auto cfg = short_config();
  cfg.update_interval = 0;
  EXPECT_THROW(train_derc(fx.data.values, fx.params, fx.centroids, cfg), ConfigError);
}

TEST(Predict, InvariantToDuplicatingASample) {
  const auto fx = make_fixture(9);
  const auto base = predict(fx.params, fx.centroids, fx.data.values).cluster_ids;
  Matrix dup(fx.data.values.rows() + 1, fx.data.values.cols());
  dup << fx.data.values, fx.data.values.row(3);
  const auto more = predict(fx.params, fx.centroids, dup).cluster_ids;
  EXPECT_EQ(std::vector<int>(more.begin(), more.end() - 1), base);
  EXPECT_EQ(more.back(), base[3]);
}

TEST(MatrixCsv, HeaderAndRows) {
  Matrix m(2, 2);
  m << 0.5, 0.25, 1, 0;
  EXPECT_EQ(matrix_csv(m, {"a", "b"}, "q"), "sample_id,q0,q1\na,0.5,0.25\nb,1,0\n");
}

}  // namespace
