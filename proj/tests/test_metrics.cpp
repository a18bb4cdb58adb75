#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace derc;

// Accuracy by trying every permutation of cluster ids.
double brute_force_acc(const std::vector<int>& y, const std::vector<int>& c, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += perm[static_cast<std::size_t>(c[i])] == y[i];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(y.size());
}

TEST(Accuracy, SwappedLabelsArePerfect) {
  const auto r = clustering_accuracy({0, 0, 1, 1}, {1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(r.acc, 1.0);
  EXPECT_EQ(r.mapping, (std::vector<int>{1, 0}));
}

TEST(Accuracy, OneMistake) {
  EXPECT_DOUBLE_EQ(clustering_accuracy({0, 0, 1, 1}, {0, 1, 1, 1}).acc, 0.75);
}

TEST(Accuracy, IdentityPreferredOnTies) {
  EXPECT_EQ(clustering_accuracy({0, 1, 0, 1}, {0, 0, 1, 1}).mapping, (std::vector<int>{0, 1}));
}

TEST(Accuracy, MatchesPermutationOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> id(0, 4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> y(30), c(30);
    for (auto& v : y) v = id(rng);
    for (auto& v : c) v = id(rng);
    EXPECT_NEAR(clustering_accuracy(y, c).acc, brute_force_acc(y, c, 5), 1e-15) << rep;
  }
}

TEST(Hungarian, SolvesSmallInstance) {
  const std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  EXPECT_EQ(hungarian_min(cost), (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Metrics, SingleMismatchIn137) {
  std::vector<int> y(137, 1), c(137, 1);
  std::fill(y.begin(), y.begin() + 23, 0);
  std::fill(c.begin(), c.begin() + 23, 0);
  c[0] = 1;
  const auto r = evaluate_clustering("m", y, c);
  EXPECT_NEAR(r.acc, 0.9927, 5e-5);
  EXPECT_NEAR(r.error_rate_percent, 0.73, 5e-3);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 0u);
  EXPECT_EQ(metrics_csv_row(r), "m,0.9927,0.73,1,0\n");
}

TEST(Metrics, AllPositivePredictions) {
  std::vector<int> y(137, 1), c(137, 0);
  std::fill(y.begin(), y.begin() + 23, 0);
  const auto r = evaluate_clustering("all", y, c);
  EXPECT_EQ(r.fp, 23u);
  EXPECT_EQ(r.fn, 0u);
  EXPECT_NEAR(r.acc, 0.8321, 5e-5);
  EXPECT_DOUBLE_EQ(r.error_rate_percent + 100.0 * r.acc, 100.0);
}

TEST(Metrics, PositiveLabelChoiceSwapsErrors) {
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const std::vector<int> c{0, 0, 1, 1, 1, 1};
  const auto pos1 = evaluate_clustering("a", y, c, 1);
  const auto pos0 = evaluate_clustering("a", y, c, 0);
  EXPECT_EQ(pos1.fp, 1u);
  EXPECT_EQ(pos1.fn, 0u);
  EXPECT_EQ(pos0.fp, 0u);
  EXPECT_EQ(pos0.fn, 1u);
}

TEST(Metrics, TextReport) {
  const auto r = evaluate_clustering("X", {0, 1}, {1, 0});
  EXPECT_EQ(metrics_text(r),
            "X\n  ACC            1.0000\n  Error rate (%) 0.00\n  FP             0\n"
            "  FN             0\n  mapping        0->1, 1->0\n");
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(clustering_accuracy({0, 1}, {0}), ArgumentError);
  EXPECT_THROW(clustering_accuracy({}, {}), ArgumentError);
  EXPECT_THROW(confusion_counts({0, 1}, {0, 1}, {0, 0}, 1), ArgumentError);
}

}  // namespace
