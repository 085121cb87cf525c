#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cardcorr {

enum class TraceSource { explain_only, explain_analyze };

std::string_view to_string(TraceSource source);
TraceSource trace_source_from_string(std::string_view text);

// One operator of an executed (or merely explained) plan.
struct PlanNode {
  std::string node_id;        // as printed, e.g. "HashJoin_8"
  std::string operator_type;  // node_id without the trailing "_<digits>"
  double est_rows = 0.0;
  std::optional<std::uint64_t> act_rows;
  std::string task_type;
  std::optional<std::string> table_name;
  std::optional<std::string> join_type;
  std::optional<std::string> extra_info;
  std::vector<PlanNode> children;
  // Index into children of the preserved (outer) input of an outer join.
  std::optional<std::size_t> outer_child_index;

  bool operator==(const PlanNode&) const = default;
};

struct PlanTrace {
  std::string execution_id;
  std::optional<std::string> query_tag;
  PlanNode root;
  TraceSource source = TraceSource::explain_analyze;

  bool operator==(const PlanTrace&) const = default;
};

struct TraceCorpus {
  std::vector<PlanTrace> traces;
  nlohmann::json provenance = nlohmann::json::object();

  bool operator==(const TraceCorpus& other) const {
    return traces == other.traces && provenance == other.provenance;
  }
};

// Strips the plan-serial suffix: "HashJoin_8" -> "HashJoin". Ids without a
// numeric suffix are returned unchanged.
std::string normalize_operator_type(std::string_view node_id);

struct NodeVisit {
  const PlanNode* node;
  const PlanNode* parent;  // nullptr for the root
  std::size_t depth;
  std::size_t position;
};

// Pre-order traversal; root has depth 0 and position 0.
std::vector<NodeVisit> iter_nodes(const PlanTrace& trace);

std::size_t count_nodes(const PlanNode& node);

enum class OperatorGroup { join, scan, filter, aggregation, other };

inline constexpr OperatorGroup kAllOperatorGroups[] = {OperatorGroup::join, OperatorGroup::scan,
                                                       OperatorGroup::filter, OperatorGroup::aggregation,
                                                       OperatorGroup::other};

std::string_view to_string(OperatorGroup group);
OperatorGroup operator_group_from_string(std::string_view text);

// Coarse operator grouping for breakdown reporting. Default rules:
// *Join* -> join, *Scan* -> scan, Selection -> filter, *Agg* -> aggregation,
// everything else -> other. Exact operator-type overrides win over the rules.
class OperatorGrouping {
 public:
  OperatorGrouping() = default;
  explicit OperatorGrouping(std::map<std::string, OperatorGroup> overrides) : overrides_(std::move(overrides)) {}

  OperatorGroup classify(std::string_view operator_type) const;

  const std::map<std::string, OperatorGroup>& overrides() const { return overrides_; }

 private:
  std::map<std::string, OperatorGroup> overrides_;
};

// Throws SchemaViolation on the first broken invariant.
void validate(const PlanTrace& trace);
void validate(const TraceCorpus& corpus);

std::size_t total_operator_count(const TraceCorpus& corpus);

}  // namespace cardcorr
