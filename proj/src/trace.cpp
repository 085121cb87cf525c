#include "cardcorr/trace.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "cardcorr/errors.hpp"

namespace cardcorr {

std::string_view to_string(TraceSource source) {
  return source == TraceSource::explain_only ? "explain_only" : "explain_analyze";
}

TraceSource trace_source_from_string(std::string_view text) {
  if (text == "explain_only") return TraceSource::explain_only;
  if (text == "explain_analyze") return TraceSource::explain_analyze;
  throw Error("unknown trace source '" + std::string(text) + "'");
}

std::string normalize_operator_type(std::string_view node_id) {
  const auto underscore = node_id.rfind('_');
  if (underscore == std::string_view::npos || underscore == 0 || underscore + 1 == node_id.size()) {
    return std::string(node_id);
  }
  for (auto i = underscore + 1; i < node_id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(node_id[i]))) return std::string(node_id);
  }
  return std::string(node_id.substr(0, underscore));
}

namespace {

void visit(const PlanNode& node, const PlanNode* parent, std::size_t depth, std::vector<NodeVisit>& out) {
  out.push_back(NodeVisit{&node, parent, depth, out.size()});
  for (const auto& child : node.children) visit(child, &node, depth + 1, out);
}

}  // namespace

std::vector<NodeVisit> iter_nodes(const PlanTrace& trace) {
  std::vector<NodeVisit> visits;
  visit(trace.root, nullptr, 0, visits);
  return visits;
}

std::size_t count_nodes(const PlanNode& node) {
  std::size_t total = 1;
  for (const auto& child : node.children) total += count_nodes(child);
  return total;
}

std::string_view to_string(OperatorGroup group) {
  switch (group) {
    case OperatorGroup::join:
      return "join";
    case OperatorGroup::scan:
      return "scan";
    case OperatorGroup::filter:
      return "filter";
    case OperatorGroup::aggregation:
      return "aggregation";
    case OperatorGroup::other:
      return "other";
  }
  return "other";
}

OperatorGroup operator_group_from_string(std::string_view text) {
  for (const auto group : kAllOperatorGroups) {
    if (to_string(group) == text) return group;
  }
  throw Error("unknown operator group '" + std::string(text) + "'");
}

OperatorGroup OperatorGrouping::classify(std::string_view operator_type) const {
  if (const auto it = overrides_.find(std::string(operator_type)); it != overrides_.end()) return it->second;
  if (operator_type.find("Join") != std::string_view::npos) return OperatorGroup::join;
  if (operator_type.find("Scan") != std::string_view::npos) return OperatorGroup::scan;
  if (operator_type == "Selection") return OperatorGroup::filter;
  if (operator_type.find("Agg") != std::string_view::npos) return OperatorGroup::aggregation;
  return OperatorGroup::other;
}

namespace {

void validate_node(const PlanTrace& trace, const PlanNode& node, std::set<std::string>& seen_ids) {
  const auto& id = trace.execution_id;
  if (node.node_id.empty()) throw SchemaViolation(id, "id", "empty node id");
  if (!seen_ids.insert(node.node_id).second) {
    throw SchemaViolation(id, "id", "duplicate node id '" + node.node_id + "'");
  }
  if (!std::isfinite(node.est_rows) || node.est_rows < 0.0) {
    throw SchemaViolation(id, "est_rows", "node '" + node.node_id + "' has invalid est_rows");
  }
  if (trace.source == TraceSource::explain_analyze && !node.act_rows) {
    throw SchemaViolation(id, "act_rows", "node '" + node.node_id + "' lacks act_rows in an explain_analyze trace");
  }
  if (node.outer_child_index && *node.outer_child_index >= node.children.size()) {
    throw SchemaViolation(id, "outer_child", "node '" + node.node_id + "' has out-of-range outer child");
  }
  for (const auto& child : node.children) validate_node(trace, child, seen_ids);
}

}  // namespace

void validate(const PlanTrace& trace) {
  if (trace.execution_id.empty()) throw SchemaViolation("", "execution_id", "empty execution id");
  std::set<std::string> seen_ids;
  validate_node(trace, trace.root, seen_ids);
}

void validate(const TraceCorpus& corpus) {
  std::set<std::string> seen;
  for (const auto& trace : corpus.traces) {
    if (!seen.insert(trace.execution_id).second) {
      throw SchemaViolation(trace.execution_id, "execution_id", "duplicate execution id");
    }
    validate(trace);
  }
}

std::size_t total_operator_count(const TraceCorpus& corpus) {
  std::size_t total = 0;
  for (const auto& trace : corpus.traces) total += count_nodes(trace.root);
  return total;
}

}  // namespace cardcorr
