#include "cardcorr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <vector>

#include "cardcorr/errors.hpp"
#include "cardcorr/quantile.hpp"
#include "cardcorr/targets.hpp"

namespace cardcorr {

std::string_view to_string(PolicyScope scope) { return scope == PolicyScope::all ? "all" : "join_only"; }

PolicyScope policy_scope_from_string(std::string_view text) {
  if (text == "all") return PolicyScope::all;
  if (text == "join_only" || text == "join-only") return PolicyScope::join_only;
  throw ConfigError("unknown policy scope '" + std::string(text) + "'");
}

std::string_view to_string(ClampCalibration calibration) {
  return calibration == ClampCalibration::fixed ? "fixed" : "validation_quantile";
}

ClampCalibration clamp_calibration_from_string(std::string_view text) {
  if (text == "fixed") return ClampCalibration::fixed;
  if (text == "validation_quantile" || text == "quantile") return ClampCalibration::validation_quantile;
  throw ConfigError("unknown clamp calibration '" + std::string(text) + "'");
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::model:
      return "model";
    case Provenance::native_fallback:
      return "native_fallback";
    case Provenance::clamped:
      return "clamped";
    case Provenance::zeroed:
      return "zeroed";
    case Provenance::constrained:
      return "constrained";
  }
  return "model";
}

void validate(const PolicyConfig& config) {
  if (config.clamp && !(config.clamp->c_min > 0.0 && config.clamp->c_min <= 1.0 && config.clamp->c_max >= 1.0)) {
    throw ConfigError("clamp band must satisfy 0 < c_min <= 1 <= c_max");
  }
  if (!(config.p_low > 0.0 && config.p_low < config.p_high && config.p_high < 1.0)) {
    throw ConfigError("clamp quantiles must satisfy 0 < p_low < p_high < 1");
  }
  if (!(config.zero_threshold > 0.0 && config.zero_threshold < 1.0)) {
    throw ConfigError("zero threshold must be in (0, 1)");
  }
}

CorrectedTrace apply_policy(const PlanTrace& trace, const NodeValues& log_factors, const PolicyConfig& config,
                            const NodeValues* zero_probs, const OperatorGrouping& grouping) {
  if (config.two_stage && zero_probs == nullptr) throw ConfigError("two-stage policy needs zero probabilities");
  CorrectedTrace out;
  out.trace = trace;
  out.applied_policy = config;
  for (const auto& visit : iter_nodes(trace)) {
    const auto& node = *visit.node;
    if (config.scope == PolicyScope::join_only && grouping.classify(node.operator_type) != OperatorGroup::join) {
      out.corrected_rows[node.node_id] = node.est_rows;
      out.provenance[node.node_id] = Provenance::native_fallback;
      continue;
    }
    const auto it = log_factors.find(node.node_id);
    if (it == log_factors.end()) throw MissingPrediction(node.node_id);
    auto log_factor = it->second;
    auto provenance = Provenance::model;
    if (config.clamp) {
      const auto lo = std::log(config.clamp->c_min);
      const auto hi = std::log(config.clamp->c_max);
      if (log_factor < lo || log_factor > hi) {
        log_factor = std::clamp(log_factor, lo, hi);
        provenance = Provenance::clamped;
      }
    }
    auto rows = invert(log_factor, node.est_rows, TargetMode::correction);
    if (config.two_stage) {
      const auto z = zero_probs->find(node.node_id);
      if (z == zero_probs->end()) throw MissingPrediction(node.node_id);
      if (z->second > config.zero_threshold) {
        rows = 0.0;
        provenance = Provenance::zeroed;
      }
    }
    out.corrected_rows[node.node_id] = rows;
    out.provenance[node.node_id] = provenance;
  }
  if (config.safe_inject) {
    std::set<std::string> changed;
    out.corrected_rows = safe_inject_pass(trace, std::move(out.corrected_rows), config.projection_at_most, &changed);
    for (const auto& id : changed) out.provenance[id] = Provenance::constrained;
  }
  return out;
}

ClampBand calibrate_clamp(std::span<const OperatorSample> validation_samples, double p_low, double p_high) {
  std::vector<double> factors;
  for (const auto& s : validation_samples) {
    if (s.act_rows) factors.push_back((1.0 + static_cast<double>(*s.act_rows)) / (1.0 + s.est_rows));
  }
  if (factors.empty()) throw EmptyInput("clamp calibration needs labeled validation samples");
  std::sort(factors.begin(), factors.end());
  return ClampBand{std::min(quantile_sorted(factors, p_low), 1.0), std::max(quantile_sorted(factors, p_high), 1.0)};
}

ConstraintRule constraint_rule(const PlanNode& node) {
  const std::string_view op = node.operator_type;
  if (op.find("Join") != std::string_view::npos) {
    return node.outer_child_index && *node.outer_child_index < node.children.size() ? ConstraintRule::outer_join
                                                                                     : ConstraintRule::none;
  }
  if (op.find("Selection") != std::string_view::npos) return ConstraintRule::filter;
  if (op == "Limit" || op == "TopN") return ConstraintRule::limit;
  if (op == "Projection") return ConstraintRule::projection;
  if (op.find("Agg") != std::string_view::npos) return ConstraintRule::aggregation;
  return ConstraintRule::none;
}

std::optional<double> parse_limit(std::string_view extra_info) {
  static const std::regex count_re(R"(count:\s*(\d+))", std::regex::icase);
  static const std::regex limit_re(R"(\blimit\s+(\d+))", std::regex::icase);
  const std::string text(extra_info);
  std::smatch m;
  if (std::regex_search(text, m, count_re) || std::regex_search(text, m, limit_re)) return std::stod(m[1].str());
  return std::nullopt;
}

namespace {

double get_value(const NodeValues& values, const std::string& id) {
  const auto it = values.find(id);
  if (it == values.end()) throw MissingPrediction(id);
  return it->second;
}

void constrain(const PlanNode& node, NodeValues& values, bool projection_at_most, std::set<std::string>* changed) {
  for (const auto& child : node.children) constrain(child, values, projection_at_most, changed);
  const auto rule = constraint_rule(node);
  if (rule == ConstraintRule::none) return;
  if (rule != ConstraintRule::outer_join && node.children.size() != 1) return;

  const auto before = get_value(values, node.node_id);
  auto after = before;
  switch (rule) {
    case ConstraintRule::filter:
    case ConstraintRule::aggregation:
      after = std::min(before, get_value(values, node.children[0].node_id));
      break;
    case ConstraintRule::limit: {
      after = std::min(before, get_value(values, node.children[0].node_id));
      if (node.extra_info) {
        if (const auto limit = parse_limit(*node.extra_info)) after = std::min(after, *limit);
      }
      break;
    }
    case ConstraintRule::projection: {
      const auto in = get_value(values, node.children[0].node_id);
      after = projection_at_most ? std::min(before, in) : in;
      break;
    }
    case ConstraintRule::outer_join:
      after = std::max(before, get_value(values, node.children[*node.outer_child_index].node_id));
      break;
    case ConstraintRule::none:
      break;
  }
  after = std::max(after, 0.0);
  if (after != before) {
    values[node.node_id] = after;
    if (changed) changed->insert(node.node_id);
  }
}

}  // namespace

NodeValues safe_inject_pass(const PlanTrace& trace, NodeValues corrected, bool projection_at_most,
                            std::set<std::string>* changed) {
  constrain(trace.root, corrected, projection_at_most, changed);
  return corrected;
}

nlohmann::json policy_to_json(const PolicyConfig& c) {
  nlohmann::json j{{"scope", std::string(to_string(c.scope))},
                   {"clamp_calibration", std::string(to_string(c.clamp_calibration))},
                   {"p_low", c.p_low},
                   {"p_high", c.p_high},
                   {"two_stage", c.two_stage},
                   {"zero_threshold", c.zero_threshold},
                   {"safe_inject", c.safe_inject},
                   {"projection_at_most", c.projection_at_most}};
  j["clamp"] = c.clamp ? nlohmann::json::array({c.clamp->c_min, c.clamp->c_max}) : nlohmann::json();
  return j;
}

PolicyConfig policy_from_json(const nlohmann::json& j) {
  PolicyConfig c;
  c.scope = policy_scope_from_string(j.at("scope").get<std::string>());
  c.clamp_calibration = clamp_calibration_from_string(j.at("clamp_calibration").get<std::string>());
  c.p_low = j.at("p_low").get<double>();
  c.p_high = j.at("p_high").get<double>();
  c.two_stage = j.at("two_stage").get<bool>();
  c.zero_threshold = j.at("zero_threshold").get<double>();
  c.safe_inject = j.at("safe_inject").get<bool>();
  c.projection_at_most = j.at("projection_at_most").get<bool>();
  if (const auto& b = j.at("clamp"); !b.is_null()) c.clamp = ClampBand{b.at(0).get<double>(), b.at(1).get<double>()};
  validate(c);
  return c;
}

}  // namespace cardcorr
