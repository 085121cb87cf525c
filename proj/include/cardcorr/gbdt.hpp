#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "cardcorr/feature_matrix.hpp"

namespace cardcorr {

struct GbdtParams {
  std::size_t n_trees = 300;
  std::size_t max_depth = 3;
  double learning_rate = 0.05;
  std::size_t min_samples_leaf = 5;
  double subsample = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const GbdtParams&) const = default;
};

// A split must beat the incumbent by this much to replace it, which makes
// near-equal gains resolve to the smaller feature index, then the smaller
// threshold. The same margin is the minimum gain for splitting at all.
inline double split_gain_tolerance(double parent_sse) { return 1e-10 * (1.0 + parent_sse); }

// Internal nodes have feature >= 0 and send x <= threshold to `left`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  bool operator==(const RegressionTree&) const = default;
};

struct GbdtModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_prediction = 0.0;
  GbdtParams params;
  std::size_t n_features = 0;

  bool operator==(const GbdtModel&) const = default;
};

// Squared-error boosting: base = mean(y), each tree fit to the current residuals
// by exact greedy split search (thresholds at midpoints of consecutive distinct
// values). Constant targets yield a model with zero trees. Boosting stops early
// once a full-sample tree finds no split.
GbdtModel gbdt_train(const FeatureMatrix& X, std::span<const double> y, const GbdtParams& params);

// base + learning_rate * sum of tree outputs. Throws DimensionMismatch.
std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureMatrix& X);
double gbdt_predict_row(const GbdtModel& model, std::span<const double> row);

nlohmann::json gbdt_to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(const nlohmann::json& j);
nlohmann::json gbdt_params_to_json(const GbdtParams& params);
GbdtParams gbdt_params_from_json(const nlohmann::json& j);

// Zero vs. non-zero cardinality classifier: logistic-loss boosting over the
// same features. A training set with a single class yields a constant model.
struct ZeroClassifier {
  GbdtModel booster;  // raw log-odds of "zero rows"
  double threshold = 0.9;
  std::optional<double> constant_probability;

  bool operator==(const ZeroClassifier&) const = default;
};

inline constexpr double kZeroProbabilityEpsilon = 1e-6;

ZeroClassifier zero_train(const FeatureMatrix& X, std::span<const std::uint8_t> is_zero, const GbdtParams& params,
                          double threshold = 0.9);

// Probabilities strictly inside (0, 1).
std::vector<double> zero_predict(const ZeroClassifier& model, const FeatureMatrix& X);

nlohmann::json zero_classifier_to_json(const ZeroClassifier& model);
ZeroClassifier zero_classifier_from_json(const nlohmann::json& j);

}  // namespace cardcorr
