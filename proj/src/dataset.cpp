#include "cardcorr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "cardcorr/errors.hpp"

namespace cardcorr {

using nlohmann::json;

std::vector<OperatorSample> extract_raw_features(const PlanTrace& trace, const OperatorGrouping& grouping) {
  const auto visits = iter_nodes(trace);
  const auto n = visits.size();
  double est_total = 0.0;
  for (const auto& v : visits) est_total += v.node->est_rows;

  std::vector<OperatorSample> samples;
  samples.reserve(n);
  for (const auto& v : visits) {
    const auto& node = *v.node;
    const auto& op = node.operator_type;
    OperatorSample s;
    s.execution_id = trace.execution_id;
    s.node_id = node.node_id;
    s.est_rows = node.est_rows;
    s.act_rows = node.act_rows;
    s.operator_group = grouping.classify(op);

    const auto flag = [](bool b) { return b ? 1.0 : 0.0; };
    s.numeric["optimizer_est_out"] = node.est_rows;
    s.numeric["log_est_rows"] = std::log1p(node.est_rows);
    s.numeric["plan_depth"] = static_cast<double>(v.depth);
    s.numeric["node_position"] = static_cast<double>(v.position);
    s.numeric["relative_position"] = n > 1 ? static_cast<double>(v.position) / static_cast<double>(n - 1) : 0.0;
    s.numeric["est_to_total_ratio"] = est_total > 0.0 ? node.est_rows / est_total : 0.0;
    s.numeric["is_join"] = flag(s.operator_group == OperatorGroup::join);
    s.numeric["is_scan"] = flag(s.operator_group == OperatorGroup::scan);
    s.numeric["is_table_scan"] = flag(op.starts_with("Table") && op.find("Scan") != std::string::npos);
    s.numeric["is_hash_join"] = flag(op.find("HashJoin") != std::string::npos);
    s.numeric["is_filter"] = flag(s.operator_group == OperatorGroup::filter);
    s.numeric["is_aggregation"] = flag(s.operator_group == OperatorGroup::aggregation);

    s.categorical["operator_type"] = op;
    s.categorical["task_type"] = node.task_type;
    s.categorical["join_type"] = node.join_type.value_or(std::string(kUnknownCategory));
    s.categorical["table_name"] = node.table_name.value_or(std::string(kUnknownCategory));
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<OperatorSample> extract_samples(std::span<const PlanTrace> traces, const OperatorGrouping& grouping) {
  std::vector<OperatorSample> all;
  for (const auto& trace : traces) {
    auto samples = extract_raw_features(trace, grouping);
    all.insert(all.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  return all;
}

namespace {

void shuffle(std::vector<std::string>& ids, std::mt19937_64& rng) {
  for (auto i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(ids[i - 1], ids[j]);
  }
}

struct Counts {
  std::size_t train, validation, test;
};

Counts ensure_training(std::size_t n, std::size_t validation, std::size_t test) {
  while (validation + test >= n && validation + test > 0) {
    if (validation >= test && validation > 0) {
      --validation;
    } else {
      --test;
    }
  }
  return {n - validation - test, validation, test};
}

Counts overall_counts(std::size_t n, const SplitFractions& f) {
  const auto up = [n](double fraction) {
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  };
  return ensure_training(n, up(f.validation), up(f.test));
}

Counts stratum_counts(std::size_t n, const SplitFractions& f) {
  const auto nearest = [n](double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  };
  return ensure_training(n, nearest(f.validation), nearest(f.test));
}

void assign(const std::vector<std::string>& ids, const Counts& counts, SplitAssignment& out) {
  std::size_t i = 0;
  for (; i < counts.test; ++i) out.test.insert(ids[i]);
  for (; i < counts.test + counts.validation; ++i) out.validation.insert(ids[i]);
  for (; i < ids.size(); ++i) out.train.insert(ids[i]);
}

}  // namespace

SplitAssignment split_by_execution(const TraceCorpus& corpus, SplitFractions fractions, std::uint64_t seed,
                                   bool stratify_by_tag) {
  if (fractions.train <= 0.0 || fractions.validation <= 0.0 || fractions.test <= 0.0 ||
      std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-6) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }
  if (corpus.traces.size() < 3) {
    throw TooFewExecutions("need at least 3 executions to split, got " + std::to_string(corpus.traces.size()));
  }

  std::mt19937_64 rng(seed);
  SplitAssignment split;
  if (!stratify_by_tag) {
    std::vector<std::string> ids;
    for (const auto& t : corpus.traces) ids.push_back(t.execution_id);
    std::sort(ids.begin(), ids.end());
    shuffle(ids, rng);
    assign(ids, overall_counts(ids.size(), fractions), split);
    return split;
  }

  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& t : corpus.traces) strata[t.query_tag.value_or("")].push_back(t.execution_id);
  for (auto& [tag, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    shuffle(ids, rng);
    assign(ids, stratum_counts(ids.size(), fractions), split);
  }
  return split;
}

json split_to_json(const SplitAssignment& split) {
  return json{{"train", split.train}, {"validation", split.validation}, {"test", split.test}};
}

SplitAssignment split_from_json(const json& j) {
  SplitAssignment split;
  split.train = j.at("train").get<std::set<std::string>>();
  split.validation = j.at("validation").get<std::set<std::string>>();
  split.test = j.at("test").get<std::set<std::string>>();
  return split;
}

std::vector<std::string> FeatureSchema::encoded_features() const {
  std::vector<std::string> names;
  for (const auto name : kNumericFeatures) names.emplace_back(name);
  for (const auto feature : kCategoricalFeatures) {
    const auto it = categorical_vocab.find(std::string(feature));
    if (it == categorical_vocab.end()) continue;
    for (const auto& category : it->second) names.push_back(std::string(feature) + "=" + category);
  }
  return names;
}

std::vector<std::string> FeatureSchema::ranked_features() const {
  auto names = encoded_features();
  std::stable_sort(names.begin(), names.end(), [this](const std::string& a, const std::string& b) {
    const auto sa = feature_scores.at(a);
    const auto sb = feature_scores.at(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return names;
}

namespace {

// Squared Pearson correlation; 0 when either side is constant.
double squared_correlation(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const auto mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const auto my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto dx = x[i] - mx;
    const auto dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::min(1.0, (sxy * sxy) / (sxx * syy));
}

double numeric_value(const OperatorSample& s, std::string_view name) {
  const auto it = s.numeric.find(name);
  return it == s.numeric.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

std::string_view categorical_value(const OperatorSample& s, std::string_view name) {
  const auto it = s.categorical.find(name);
  return it == s.categorical.end() ? kUnknownCategory : std::string_view(it->second);
}

}  // namespace

FeatureSchema fit_schema(std::span<const OperatorSample> train_samples, std::span<const double> targets,
                         std::size_t k) {
  if (train_samples.empty()) throw EmptyInput("cannot fit a feature schema on zero training samples");
  if (train_samples.size() != targets.size()) {
    throw DimensionMismatch("fit_schema: " + std::to_string(train_samples.size()) + " samples but " +
                            std::to_string(targets.size()) + " targets");
  }
  if (k == 0) throw ConfigError("feature selection k must be positive");

  FeatureSchema schema;
  const auto n = train_samples.size();

  std::map<std::string, std::vector<double>> columns;
  for (const auto name : kNumericFeatures) {
    std::vector<double> values(n);
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = numeric_value(train_samples[i], name);
      if (!std::isnan(values[i])) {
        sum += values[i];
        ++present;
      }
    }
    ScalerParams params;
    params.mean = present ? sum / static_cast<double>(present) : 0.0;
    double ss = 0.0;
    for (auto& v : values) {
      if (std::isnan(v)) v = params.mean;
      ss += (v - params.mean) * (v - params.mean);
    }
    params.stddev = std::sqrt(ss / static_cast<double>(n));
    schema.scaler_params.emplace(name, params);
    columns.emplace(name, std::move(values));
  }
  for (const auto feature : kCategoricalFeatures) {
    std::set<std::string> vocab;
    for (const auto& s : train_samples) vocab.emplace(categorical_value(s, feature));
    auto& ordered = schema.categorical_vocab[std::string(feature)];
    ordered.assign(vocab.begin(), vocab.end());
    for (const auto& category : ordered) {
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n; ++i) values[i] = categorical_value(train_samples[i], feature) == category;
      columns.emplace(std::string(feature) + "=" + category, std::move(values));
    }
  }

  const auto encoded = schema.encoded_features();
  for (const auto& name : encoded) schema.feature_scores[name] = squared_correlation(columns.at(name), targets);

  if (k > encoded.size()) {
    schema.warnings.push_back("k=" + std::to_string(k) + " exceeds " + std::to_string(encoded.size()) +
                              " encoded features; clamped");
    spdlog::warn("feature selection: {}", schema.warnings.back());
    k = encoded.size();
  }
  schema.k = k;
  const auto ranked = schema.ranked_features();
  const std::set<std::string> chosen(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
  for (const auto& name : encoded) {
    if (chosen.contains(name)) schema.selected_features.push_back(name);
  }
  return schema;
}

FeatureMatrix encode(std::span<const OperatorSample> samples, const FeatureSchema& schema) {
  struct Column {
    std::string feature;
    std::string category;  // empty for numeric columns
    double mean = 0.0;
    double scale = 1.0;
  };
  std::vector<Column> plan;
  plan.reserve(schema.selected_features.size());
  for (const auto& name : schema.selected_features) {
    Column c;
    if (const auto eq = name.find('='); eq != std::string::npos) {
      c.feature = name.substr(0, eq);
      c.category = name.substr(eq + 1);
    } else {
      c.feature = name;
      const auto& p = schema.scaler_params.at(name);
      c.mean = p.mean;
      c.scale = p.stddev > 0.0 ? p.stddev : 1.0;
    }
    plan.push_back(std::move(c));
  }

  FeatureMatrix X(samples.size(), schema.selected_features);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& s = samples[r];
    for (std::size_t c = 0; c < plan.size(); ++c) {
      const auto& col = plan[c];
      if (!col.category.empty()) {
        X.at(r, c) = categorical_value(s, col.feature) == col.category ? 1.0 : 0.0;
      } else {
        const auto v = numeric_value(s, col.feature);
        X.at(r, c) = std::isfinite(v) ? (v - col.mean) / col.scale : 0.0;
      }
    }
  }
  return X;
}

SchemaSummary summarize(const FeatureSchema& schema) {
  SchemaSummary summary;
  summary.numeric_features = kNumericFeatures.size();
  for (const auto& [feature, vocab] : schema.categorical_vocab) summary.vocab_sizes[feature] = vocab.size();
  summary.encoded_features = schema.encoded_features().size();
  summary.selected_k = schema.k;
  summary.selected = schema.selected_features;
  return summary;
}

json summary_to_json(const SchemaSummary& summary) {
  return json{{"numeric_features", summary.numeric_features},
              {"vocab_sizes", summary.vocab_sizes},
              {"encoded_features", summary.encoded_features},
              {"selected_k", summary.selected_k},
              {"selected", summary.selected}};
}

json schema_to_json(const FeatureSchema& schema) {
  json scaler = json::object();
  for (const auto& [name, p] : schema.scaler_params) scaler[name] = json::array({p.mean, p.stddev});
  return json{{"version", 1},
              {"categorical_vocab", schema.categorical_vocab},
              {"scaler", scaler},
              {"selected_features", schema.selected_features},
              {"scores", schema.feature_scores},
              {"k", schema.k},
              {"warnings", schema.warnings}};
}

FeatureSchema schema_from_json(const json& j) {
  if (j.at("version").get<int>() != 1) throw VersionMismatch("unsupported feature schema version");
  FeatureSchema schema;
  schema.categorical_vocab = j.at("categorical_vocab").get<std::map<std::string, std::vector<std::string>>>();
  for (const auto& [name, p] : j.at("scaler").items()) {
    schema.scaler_params[name] = ScalerParams{p.at(0).get<double>(), p.at(1).get<double>()};
  }
  schema.selected_features = j.at("selected_features").get<std::vector<std::string>>();
  schema.feature_scores = j.at("scores").get<std::map<std::string, double>>();
  schema.k = j.at("k").get<std::size_t>();
  schema.warnings = j.at("warnings").get<std::vector<std::string>>();
  return schema;
}

}  // namespace cardcorr
