#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cardcorr/errors.hpp"
#include "cardcorr/gbdt.hpp"
#include "gbdt_oracle.hpp"

using namespace cardcorr;

namespace {

FeatureMatrix column(const std::vector<double>& x) {
  FeatureMatrix X(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) X.at(i, 0) = x[i];
  return X;
}

struct Data {
  FeatureMatrix X;
  std::vector<double> y;
};

Data noisy_data(std::mt19937_64& rng, std::size_t n, std::size_t d, bool discrete) {
  Data data{FeatureMatrix(n, d), std::vector<double>(n)};
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) data.X.at(i, f) = discrete ? static_cast<double>(rng() % 4) : u(rng);
    data.y[i] = 2.0 * data.X.at(i, 0) + (d > 1 ? data.X.at(i, 1) * data.X.at(i, 0) : 0.0) + noise(rng);
  }
  return data;
}

double mse(const GbdtModel& m, const Data& d) {
  const auto p = gbdt_predict(m, d.X);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - d.y[i]) * (p[i] - d.y[i]);
  return s / static_cast<double>(p.size());
}

}  // namespace

TEST(Gbdt, ConstantTargets) {
  const auto X = column({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const std::vector<double> y(10, 4.25);
  const auto m = gbdt_train(X, y, {});
  EXPECT_TRUE(m.trees.empty());
  for (const auto v : gbdt_predict(m, X)) EXPECT_EQ(v, 4.25);
}

TEST(Gbdt, StumpExample) {
  const auto X = column({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  const std::vector<double> y{0, 0, 0, 0, 0, 10, 10, 10, 10, 10};
  GbdtParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.learning_rate = 1.0;
  const auto m = gbdt_train(X, y, p);
  ASSERT_EQ(m.trees.size(), 1U);
  const auto& root = m.trees[0].nodes[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_EQ(root.threshold, 0.5);
  const auto pred = gbdt_predict(m, X);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(pred[i], y[i]);
  EXPECT_EQ(oracle::check_gbdt_splits(X, y, m), "");
}

TEST(Gbdt, ZeroTreesPredictsMean) {
  const auto X = column({1, 2, 3, 4});
  const std::vector<double> y{1, 2, 3, 6};
  GbdtParams p;
  p.n_trees = 0;
  const auto m = gbdt_train(X, y, p);
  for (const auto v : gbdt_predict(m, X)) EXPECT_DOUBLE_EQ(v, 3.0);
}

TEST(Gbdt, EmptyInputPredictsNothingAndWidthIsChecked) {
  const auto X = column({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  std::vector<double> y(10);
  std::iota(y.begin(), y.end(), 0.0);
  const auto m = gbdt_train(X, y, {});
  EXPECT_TRUE(gbdt_predict(m, FeatureMatrix(0, 1)).empty());
  EXPECT_THROW(gbdt_predict(m, FeatureMatrix(2, 3)), DimensionMismatch);
  EXPECT_THROW(gbdt_train(X, std::vector<double>(3), {}), DimensionMismatch);
}

TEST(Gbdt, SplitsMatchExhaustiveOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 20 + rng() % 181;
    const auto d = 1 + rng() % 5;
    const auto data = noisy_data(rng, n, d, trial % 3 == 0);
    GbdtParams p;
    p.n_trees = 8;
    p.max_depth = 1 + rng() % 3;
    p.learning_rate = 0.3;
    p.min_samples_leaf = 1 + rng() % 6;
    const auto m = gbdt_train(data.X, data.y, p);
    ASSERT_EQ(oracle::check_gbdt_splits(data.X, data.y, m), "") << "trial " << trial;
  }
}

TEST(Gbdt, TrainingErrorNonIncreasing) {
  std::mt19937_64 rng(7);
  const auto data = noisy_data(rng, 150, 3, false);
  GbdtParams p;
  p.n_trees = 40;
  const auto m = gbdt_train(data.X, data.y, p);
  GbdtModel prefix = m;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t <= m.trees.size(); ++t) {
    prefix.trees.assign(m.trees.begin(), m.trees.begin() + static_cast<std::ptrdiff_t>(t));
    const auto e = mse(prefix, data);
    EXPECT_LE(e, prev + 1e-12) << "after " << t << " trees";
    prev = e;
  }
}

TEST(Gbdt, PermutationEquivariantPrediction) {
  std::mt19937_64 rng(9);
  const auto data = noisy_data(rng, 80, 2, false);
  const auto m = gbdt_train(data.X, data.y, {});
  const auto base = gbdt_predict(m, data.X);
  std::vector<std::size_t> perm(80);
  std::iota(perm.begin(), perm.end(), 0U);
  std::shuffle(perm.begin(), perm.end(), rng);
  FeatureMatrix shuffled(80, 2);
  for (std::size_t i = 0; i < 80; ++i) {
    for (std::size_t f = 0; f < 2; ++f) shuffled.at(i, f) = data.X.at(perm[i], f);
  }
  const auto out = gbdt_predict(m, shuffled);
  for (std::size_t i = 0; i < 80; ++i) EXPECT_EQ(out[i], base[perm[i]]);
}

TEST(Gbdt, DeterministicSerialization) {
  std::mt19937_64 rng(11);
  const auto data = noisy_data(rng, 120, 4, false);
  GbdtParams p;
  p.subsample = 0.7;
  p.seed = 3;
  const auto a = gbdt_to_json(gbdt_train(data.X, data.y, p)).dump();
  const auto b = gbdt_to_json(gbdt_train(data.X, data.y, p)).dump();
  EXPECT_EQ(a, b);
  const auto back = gbdt_from_json(nlohmann::json::parse(a));
  EXPECT_EQ(gbdt_to_json(back).dump(), a);
}

TEST(Gbdt, ModelInvariants) {
  std::mt19937_64 rng(13);
  const auto data = noisy_data(rng, 100, 3, false);
  const auto m = gbdt_train(data.X, data.y, {});
  for (const auto& tree : m.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) EXPECT_LT(static_cast<std::size_t>(node.feature), m.n_features);
      EXPECT_TRUE(std::isfinite(node.value));
    }
  }
  auto j = gbdt_to_json(m);
  j["trees"][0][0][0] = 99;
  EXPECT_THROW(gbdt_from_json(j), Error);
}

TEST(Gbdt, RejectsBadParams) {
  const auto X = column({1, 2});
  GbdtParams p;
  p.learning_rate = 0.0;
  EXPECT_THROW(gbdt_train(X, std::vector<double>{1, 2}, p), ConfigError);
  p = {};
  p.subsample = 1.5;
  EXPECT_THROW(gbdt_train(X, std::vector<double>{1, 2}, p), ConfigError);
}

TEST(ZeroClassifier, SingleClassIsConstant) {
  const auto X = column({1, 2, 3, 4});
  const std::vector<std::uint8_t> none{0, 0, 0, 0}, all{1, 1, 1, 1};
  const auto m0 = zero_train(X, none, {});
  for (const auto p : zero_predict(m0, X)) EXPECT_EQ(p, kZeroProbabilityEpsilon);
  const auto m1 = zero_train(X, all, {});
  for (const auto p : zero_predict(m1, X)) EXPECT_EQ(p, 1.0 - kZeroProbabilityEpsilon);
}

TEST(ZeroClassifier, SeparableToyRecoversLabels) {
  std::vector<double> x;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i * 0.1);
    labels.push_back(i < 10 ? 1 : 0);
  }
  const auto X = column(x);
  GbdtParams p;
  p.n_trees = 50;
  p.learning_rate = 0.3;
  const auto m = zero_train(X, labels, p);
  ASSERT_FALSE(m.booster.trees.empty());
  EXPECT_DOUBLE_EQ(m.booster.trees[0].nodes[0].threshold, 0.95);
  const auto probs = zero_predict(m, X);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    EXPECT_GT(probs[i], 0.0);
    EXPECT_LT(probs[i], 1.0);
    EXPECT_EQ(probs[i] > 0.5, labels[i] == 1) << i;
  }
  EXPECT_EQ(zero_classifier_from_json(zero_classifier_to_json(m)), m);
}

TEST(ZeroClassifier, OutputsStrictlyInsideUnitInterval) {
  std::mt19937_64 rng(4);
  FeatureMatrix X(200, 2);
  std::vector<std::uint8_t> labels(200);
  for (std::size_t i = 0; i < 200; ++i) {
    X.at(i, 0) = static_cast<double>(i);
    X.at(i, 1) = static_cast<double>(rng() % 3);
    labels[i] = i < 30;
  }
  GbdtParams p;
  p.learning_rate = 1.0;
  const auto m = zero_train(X, labels, p);
  for (const auto prob : zero_predict(m, X)) {
    EXPECT_GT(prob, 0.0);
    EXPECT_LT(prob, 1.0);
  }
  EXPECT_THROW(zero_train(X, labels, p, 1.0), ConfigError);
}
