#include "cardcorr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "cardcorr/errors.hpp"

namespace cardcorr {

std::vector<TableInfo> default_table_catalog() {
  return {{"lineitem", 6001215, true}, {"orders", 1500000, true}, {"partsupp", 800000, false},
          {"part", 200000, false},     {"customer", 150000, false}, {"supplier", 10000, false},
          {"nation", 25, false},       {"region", 5, false}};
}

GenSpec default_gen_spec() {
  GenSpec spec;
  spec.tables = default_table_catalog();
  spec.bias[OperatorGroup::join] = {std::log(4.0), 0.3};
  for (const auto g : {OperatorGroup::scan, OperatorGroup::filter, OperatorGroup::aggregation, OperatorGroup::other}) {
    spec.bias[g] = {0.0, 0.02};
  }
  return spec;
}

namespace {

double mix(const GenSpec& spec, const std::string& op) {
  const auto it = spec.operator_mix.find(op);
  return it == spec.operator_mix.end() ? 0.0 : it->second;
}

void check_range(const std::pair<double, double>& r, const char* name, bool positive) {
  if (!(r.first <= r.second) || (positive && !(r.first > 0.0))) throw ConfigError(fmt::format("invalid {} range", name));
}

}  // namespace

void validate(const GenSpec& spec) {
  if (spec.depth_range.first == 0 || spec.depth_range.first > spec.depth_range.second) {
    throw ConfigError("depth_range must satisfy 1 <= min <= max");
  }
  check_range(spec.fanout_range, "fanout", true);
  check_range(spec.selectivity_range, "selectivity", true);
  check_range(spec.range_scan_fraction, "range scan fraction", true);
  check_range(spec.agg_ratio_range, "aggregation ratio", true);
  double total = 0.0;
  for (const auto& [op, w] : spec.operator_mix) {
    if (!(w >= 0.0)) throw ConfigError("operator_mix weight for " + op + " is negative");
    total += w;
  }
  if (total <= 0.0) throw ConfigError("operator_mix weights are all zero");
  if (mix(spec, "TableFullScan") + mix(spec, "IndexRangeScan") <= 0.0) throw ConfigError("no scan operator weight");
  if (mix(spec, "HashJoin") + mix(spec, "IndexJoin") <= 0.0) throw ConfigError("no join operator weight");
  for (const auto* op : {"Selection", "Projection", "HashAgg", "Limit"}) {
    if (mix(spec, op) > 1.0) throw ConfigError(fmt::format("{} slot probability exceeds 1", op));
  }
  if (!(spec.scale_factor > 0.0)) throw ConfigError("scale_factor must be positive");
  if (!(spec.zero_fraction >= 0.0 && spec.zero_fraction <= 1.0)) throw ConfigError("zero_fraction must be in [0, 1]");
  if (!(spec.outer_join_fraction >= 0.0 && spec.outer_join_fraction <= 1.0)) {
    throw ConfigError("outer_join_fraction must be in [0, 1]");
  }
  for (const auto& [g, b] : spec.bias) {
    if (!(b.sigma >= 0.0)) throw ConfigError("bias sigma must be non-negative");
  }
}

namespace {

constexpr double kRowCap = 1e12;

class PlanBuilder {
 public:
  PlanBuilder(const GenSpec& spec, const std::vector<TableInfo>& tables, std::uint64_t seed)
      : spec_(spec), tables_(tables), rng_(seed) {}

  PlanNode build() {
    const auto joins = uniform_int(spec_.depth_range.first, spec_.depth_range.second);
    auto chain = leaf(pick_fact());
    for (std::size_t i = 0; i < joins; ++i) chain = join(std::move(chain), leaf(pick_any()));
    if (chance(mix(spec_, "HashAgg"))) {
      const auto in = rows(chain);
      auto agg = make("HashAgg", "root");
      agg.act_rows = in == 0 ? 0 : std::min<std::uint64_t>(in, round_rows(std::max(1.0, in * log_uniform(spec_.agg_ratio_range))));
      agg.extra_info = "group by:" + key_column();
      agg.children.push_back(std::move(chain));
      chain = std::move(agg);
    }
    if (chance(mix(spec_, "Limit"))) {
      static constexpr std::uint64_t kLimits[] = {1, 10, 100, 1000};
      const auto limit = kLimits[uniform_int(0, 3)];
      auto node = make("Limit", "root");
      node.act_rows = std::min(rows(chain), limit);
      node.extra_info = fmt::format("offset:0, count:{}", limit);
      node.children.push_back(std::move(chain));
      chain = std::move(node);
    }
    if (chance(mix(spec_, "Projection"))) {
      auto node = make("Projection", "root");
      node.act_rows = rows(chain);
      node.extra_info = key_column();
      node.children.push_back(std::move(chain));
      chain = std::move(node);
    }
    return chain;
  }

  // Second pass: distort every act_rows into est_rows. Returns the number of
  // joins in the subtree, the node itself included.
  std::size_t apply_bias(PlanNode& node, const OperatorGrouping& grouping) {
    std::size_t joins = 0;
    for (auto& child : node.children) joins += apply_bias(child, grouping);
    const auto group = grouping.classify(node.operator_type);
    if (group == OperatorGroup::join) ++joins;
    const auto join_bias = bias(OperatorGroup::join);
    const auto own = bias(group);
    double log_bias = -join_bias.mu * static_cast<double>(joins);
    if (group != OperatorGroup::join) log_bias -= own.mu;
    log_bias += own.sigma * normal_(rng_);
    node.est_rows = std::max(0.0, (1.0 + static_cast<double>(*node.act_rows)) * std::exp(log_bias) - 1.0);
    return joins;
  }

 private:
  PlanNode make(const std::string& op, const std::string& task) {
    PlanNode node;
    node.node_id = fmt::format("{}_{}", op, serial_++);
    node.operator_type = op;
    node.task_type = task;
    return node;
  }

  PlanNode leaf(const TableInfo& table) {
    const auto full = mix(spec_, "TableFullScan");
    const auto range = mix(spec_, "IndexRangeScan");
    const bool is_full = uniform01() * (full + range) < full;
    auto scan = make(is_full ? "TableFullScan" : "IndexRangeScan", "cop[tikv]");
    scan.table_name = table.name;
    scan.act_rows = is_full ? round_rows(table.rows) : round_rows(table.rows * log_uniform(spec_.range_scan_fraction));
    if (!is_full) scan.extra_info = "range:[" + key_column() + "]";
    if (!chance(mix(spec_, "Selection"))) return scan;
    auto sel = make("Selection", "cop[tikv]");
    sel.table_name = table.name;
    sel.extra_info = "filter on " + table.name;
    const auto zero = chance(spec_.zero_fraction);
    sel.act_rows = zero ? 0 : round_rows(static_cast<double>(rows(scan)) * log_uniform(spec_.selectivity_range));
    sel.children.push_back(std::move(scan));
    return sel;
  }

  PlanNode join(PlanNode left, PlanNode right) {
    const auto hash = mix(spec_, "HashJoin");
    const auto index = mix(spec_, "IndexJoin");
    const bool is_hash = uniform01() * (hash + index) < hash;
    auto node = make(is_hash ? "HashJoin" : "IndexJoin", "root");
    const bool outer = chance(spec_.outer_join_fraction);
    node.join_type = outer ? "left outer" : "inner";
    node.extra_info = fmt::format("{} join, equal:[eq({}, {})]", *node.join_type, key_column(), key_column());
    const auto l = static_cast<double>(rows(left));
    const auto r = rows(right);
    const auto corr = std::exp(spec_.join_correlation_sigma * normal_(rng_));
    auto out = r == 0 ? 0.0 : l * log_uniform(spec_.fanout_range) * corr;
    if (outer) {
      out = std::max(out, l);
      node.outer_child_index = 0;
    }
    node.act_rows = round_rows(out);
    node.children.push_back(std::move(left));
    node.children.push_back(std::move(right));
    return node;
  }

  static std::uint64_t rows(const PlanNode& node) { return *node.act_rows; }

  static std::uint64_t round_rows(double v) { return static_cast<std::uint64_t>(std::llround(std::min(v, kRowCap))); }

  ClassBias bias(OperatorGroup group) const {
    const auto it = spec_.bias.find(group);
    return it == spec_.bias.end() ? ClassBias{} : it->second;
  }

  const TableInfo& pick_fact() {
    std::vector<const TableInfo*> facts;
    for (const auto& t : tables_) {
      if (t.fact) facts.push_back(&t);
    }
    if (facts.empty()) return pick_any();
    return *facts[uniform_int(0, facts.size() - 1)];
  }

  const TableInfo& pick_any() { return tables_[uniform_int(0, tables_.size() - 1)]; }

  std::string key_column() { return fmt::format("c{}", uniform_int(0, 9)); }

  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool chance(double p) { return uniform01() < p; }
  std::size_t uniform_int(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double log_uniform(const std::pair<double, double>& r) {
    return std::exp(std::log(r.first) + uniform01() * (std::log(r.second) - std::log(r.first)));
  }

  const GenSpec& spec_;
  const std::vector<TableInfo>& tables_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::size_t serial_ = 1;
};

std::uint64_t execution_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 step so neighbouring executions get unrelated streams
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

TraceCorpus generate(const GenSpec& spec) {
  validate(spec);
  auto tables = spec.tables.empty() ? default_table_catalog() : spec.tables;
  for (auto& t : tables) t.rows *= spec.scale_factor;
  const OperatorGrouping grouping;
  TraceCorpus corpus;
  corpus.traces.reserve(spec.n_executions);
  for (std::size_t i = 0; i < spec.n_executions; ++i) {
    PlanBuilder builder(spec, tables, execution_seed(spec.seed, i));
    PlanTrace trace;
    trace.execution_id = fmt::format("synth-{:04d}", i);
    trace.source = TraceSource::explain_analyze;
    trace.root = builder.build();
    const auto joins = builder.apply_bias(trace.root, grouping);
    trace.query_tag = fmt::format("joins-{}", joins);
    corpus.traces.push_back(std::move(trace));
  }
  corpus.provenance = nlohmann::json{{"generator", "synthgen"}, {"spec", gen_spec_to_json(spec)}};
  return corpus;
}

nlohmann::json gen_spec_to_json(const GenSpec& spec) {
  nlohmann::json bias = nlohmann::json::object();
  for (const auto& [g, b] : spec.bias) bias[std::string(to_string(g))] = {{"mu", b.mu}, {"sigma", b.sigma}};
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : spec.tables) tables.push_back({{"name", t.name}, {"rows", t.rows}, {"fact", t.fact}});
  const auto pair = [](const auto& p) { return nlohmann::json::array({p.first, p.second}); };
  return nlohmann::json{{"n_executions", spec.n_executions},
                        {"depth_range", pair(spec.depth_range)},
                        {"fanout_range", pair(spec.fanout_range)},
                        {"operator_mix", spec.operator_mix},
                        {"selectivity_range", pair(spec.selectivity_range)},
                        {"range_scan_fraction", pair(spec.range_scan_fraction)},
                        {"agg_ratio_range", pair(spec.agg_ratio_range)},
                        {"outer_join_fraction", spec.outer_join_fraction},
                        {"join_correlation_sigma", spec.join_correlation_sigma},
                        {"tables", std::move(tables)},
                        {"scale_factor", spec.scale_factor},
                        {"bias", std::move(bias)},
                        {"zero_fraction", spec.zero_fraction},
                        {"seed", spec.seed}};
}

}  // namespace cardcorr
