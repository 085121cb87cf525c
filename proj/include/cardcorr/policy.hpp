#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cardcorr/dataset.hpp"
#include "cardcorr/trace.hpp"

namespace cardcorr {

enum class PolicyScope { all, join_only };
enum class ClampCalibration { fixed, validation_quantile };
enum class Provenance { model, native_fallback, clamped, zeroed, constrained };

std::string_view to_string(PolicyScope scope);
PolicyScope policy_scope_from_string(std::string_view text);
std::string_view to_string(ClampCalibration calibration);
ClampCalibration clamp_calibration_from_string(std::string_view text);
std::string_view to_string(Provenance provenance);

// Bounds on the multiplicative factor (1 + corrected) / (1 + est).
struct ClampBand {
  double c_min = 1.0;
  double c_max = 1.0;

  bool operator==(const ClampBand&) const = default;
};

struct PolicyConfig {
  PolicyScope scope = PolicyScope::all;
  std::optional<ClampBand> clamp;
  ClampCalibration clamp_calibration = ClampCalibration::fixed;
  double p_low = 0.01;
  double p_high = 0.99;
  bool two_stage = false;
  double zero_threshold = 0.9;
  bool safe_inject = false;
  // Projection output may shrink below its input (engines that deduplicate).
  bool projection_at_most = false;

  bool operator==(const PolicyConfig&) const = default;
};

// Throws ConfigError unless 0 < c_min <= 1 <= c_max, 0 < p_low < p_high < 1
// and the zero threshold lies in (0, 1).
void validate(const PolicyConfig& config);

using NodeValues = std::map<std::string, double, std::less<>>;

struct CorrectedTrace {
  PlanTrace trace;
  NodeValues corrected_rows;
  PolicyConfig applied_policy;
  std::map<std::string, Provenance, std::less<>> provenance;
};

// `log_factors` holds, per node, the predicted ln((1 + act) / (1 + est)).
// `zero_probs` is required when two-stage zeroing is enabled. Throws
// MissingPrediction for a node without a prediction.
CorrectedTrace apply_policy(const PlanTrace& trace, const NodeValues& log_factors, const PolicyConfig& config,
                            const NodeValues* zero_probs = nullptr, const OperatorGrouping& grouping = {});

// Quantile band of the observed factors (1 + act) / (1 + est), widened to
// contain 1. Throws EmptyInput when no labeled sample is given.
ClampBand calibrate_clamp(std::span<const OperatorSample> validation_samples, double p_low = 0.01,
                          double p_high = 0.99);

enum class ConstraintRule { none, filter, limit, projection, aggregation, outer_join };

ConstraintRule constraint_rule(const PlanNode& node);

// Row limit from operator info: "limit N" or "offset:O, count:N".
std::optional<double> parse_limit(std::string_view extra_info);

// Enforces per-operator semantic bounds, children before parents. Unary rules
// only fire on single-child nodes; the outer-join rule needs outer_child_index.
// Nodes whose value changed are added to `changed` when given.
NodeValues safe_inject_pass(const PlanTrace& trace, NodeValues corrected, bool projection_at_most = false,
                            std::set<std::string>* changed = nullptr);

nlohmann::json policy_to_json(const PolicyConfig& config);
PolicyConfig policy_from_json(const nlohmann::json& j);

}  // namespace cardcorr
