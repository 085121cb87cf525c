#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cardcorr/feature_matrix.hpp"
#include "cardcorr/trace.hpp"

namespace cardcorr {

inline constexpr std::array<std::string_view, 12> kNumericFeatures = {
    "optimizer_est_out", "log_est_rows",  "plan_depth",    "node_position",
    "relative_position", "est_to_total_ratio", "is_join",   "is_scan",
    "is_table_scan",     "is_hash_join",  "is_filter",     "is_aggregation"};

inline constexpr std::array<std::string_view, 4> kCategoricalFeatures = {"operator_type", "task_type", "join_type",
                                                                         "table_name"};

inline constexpr std::string_view kUnknownCategory = "unknown";

// One operator node turned into raw (pre-encoding) features.
struct OperatorSample {
  std::string execution_id;
  std::string node_id;
  std::map<std::string, double, std::less<>> numeric;
  std::map<std::string, std::string, std::less<>> categorical;
  double est_rows = 0.0;
  std::optional<std::uint64_t> act_rows;
  OperatorGroup operator_group = OperatorGroup::other;
};

// Features are computed from EXPLAIN columns only; act_rows is carried along as
// the label when the trace has it.
std::vector<OperatorSample> extract_raw_features(const PlanTrace& trace, const OperatorGrouping& grouping = {});

std::vector<OperatorSample> extract_samples(std::span<const PlanTrace> traces, const OperatorGrouping& grouping = {});

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;

  bool operator==(const SplitAssignment&) const = default;
};

// Partitions executions (never individual operators). Validation and test get
// ceil(fraction * n) executions, train the remainder; with 263 executions and
// (0.6, 0.2, 0.2) that is 157 / 53 / 53. With stratify_by_tag each query_tag
// is split on its own (rounded counts, at least one training execution per tag).
SplitAssignment split_by_execution(const TraceCorpus& corpus, SplitFractions fractions, std::uint64_t seed,
                                   bool stratify_by_tag = false);

nlohmann::json split_to_json(const SplitAssignment& split);
SplitAssignment split_from_json(const nlohmann::json& j);

struct ScalerParams {
  double mean = 0.0;
  double stddev = 0.0;

  bool operator==(const ScalerParams&) const = default;
};

struct FeatureSchema {
  std::map<std::string, std::vector<std::string>> categorical_vocab;
  std::map<std::string, ScalerParams> scaler_params;
  std::vector<std::string> selected_features;  // in encoded-column order
  std::map<std::string, double> feature_scores;
  std::size_t k = 0;
  std::vector<std::string> warnings;

  // Full encoded column list before selection: numerics, then one-hot blocks.
  std::vector<std::string> encoded_features() const;

  // Encoded features ordered by descending score, name ascending on ties.
  std::vector<std::string> ranked_features() const;

  bool operator==(const FeatureSchema&) const = default;
};

// Vocabularies, scaler statistics and the top-k selection are computed from the
// given (training) rows only. Score = squared Pearson correlation with the
// target; constant columns score 0. A k above the encoded width is clamped and
// noted in `warnings`.
FeatureSchema fit_schema(std::span<const OperatorSample> train_samples, std::span<const double> targets, std::size_t k);

// Total: unseen categories become an all-zero block, missing numerics become 0
// after scaling, std == 0 scales by 1.
FeatureMatrix encode(std::span<const OperatorSample> samples, const FeatureSchema& schema);

struct SchemaSummary {
  std::size_t numeric_features = 0;
  std::map<std::string, std::size_t> vocab_sizes;
  std::size_t encoded_features = 0;
  std::size_t selected_k = 0;
  std::vector<std::string> selected;
};

SchemaSummary summarize(const FeatureSchema& schema);
nlohmann::json summary_to_json(const SchemaSummary& summary);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

}  // namespace cardcorr
