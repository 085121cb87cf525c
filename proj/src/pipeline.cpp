#include "cardcorr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"

namespace cardcorr {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<OperatorSample> labeled_samples(std::span<const PlanTrace> traces) {
  auto samples = extract_samples(traces);
  for (const auto& s : samples) {
    if (!s.act_rows) {
      throw SchemaViolation(s.execution_id, "act_rows", "training needs labeled traces (node " + s.node_id + ")");
    }
  }
  return samples;
}

std::vector<double> make_targets(std::span<const OperatorSample> samples, TargetMode mode) {
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(make_target(s.est_rows, static_cast<double>(*s.act_rows), mode));
  return y;
}

json hyperparams_for(const TrainConfig& c) {
  switch (c.kind) {
    case ModelKind::gbr:
      return gbdt_params_to_json(c.gbdt);
    case ModelKind::refset:
      return json{{"k_neighbors", c.refset_k}, {"weighting", std::string(to_string(c.refset_weighting))}};
    case ModelKind::litecard:
      return json{{"min_support", c.litecard_min_support}};
    case ModelKind::group_scale:
    case ModelKind::isotonic:
      return json::object();
  }
  return json::object();
}

ModelBody fit_body(const TrainConfig& c, const FeatureMatrix* X, std::span<const double> y,
                   std::span<const OperatorSample> samples) {
  switch (c.kind) {
    case ModelKind::gbr:
      return gbdt_train(*X, y, c.gbdt);
    case ModelKind::refset:
      return refset_setup(*X, std::vector<double>(y.begin(), y.end()), std::min(c.refset_k, y.size()),
                          c.refset_weighting);
    case ModelKind::group_scale:
      return group_scale_fit(samples);
    case ModelKind::isotonic:
      return isotonic_fit(samples);
    case ModelKind::litecard:
      return litecard_fit(samples, c.litecard_min_support);
  }
  throw Error("unreachable model kind");
}

double validation_p90(const ModelArtifact& artifact, std::span<const OperatorSample> samples) {
  const auto lf = predict_log_factors(artifact, samples);
  std::vector<double> qs;
  qs.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto rows = invert(lf[i], samples[i].est_rows, TargetMode::correction);
    qs.push_back(qerror(rows, static_cast<double>(*samples[i].act_rows)));
  }
  return stats(qs).p90;
}

}  // namespace

std::vector<PlanTrace> select_traces(const TraceCorpus& corpus, const std::set<std::string>& ids) {
  std::vector<PlanTrace> out;
  for (const auto& t : corpus.traces) {
    if (ids.contains(t.execution_id)) out.push_back(t);
  }
  return out;
}

TrainResult train_model(const TraceCorpus& corpus, const TrainConfig& config) {
  return train_model(corpus,
                     split_by_execution(corpus, config.fractions, config.split_seed, config.stratify_by_tag), config);
}

TrainResult train_model(const TraceCorpus& corpus, const SplitAssignment& split, const TrainConfig& config) {
  validate(config.policy);
  const auto train_traces = select_traces(corpus, split.train);
  const auto val_traces = select_traces(corpus, split.validation);
  const auto train = labeled_samples(train_traces);
  const auto validation = labeled_samples(val_traces);
  if (train.empty()) throw EmptyInput("training split has no operator samples");

  ModelArtifact artifact;
  artifact.kind = config.kind;
  artifact.name = config.name.empty() ? std::string(to_string(config.kind)) + "-" + std::string(to_string(config.mode))
                                      : config.name;
  artifact.seed = config.gbdt.seed;
  artifact.hyperparams = hyperparams_for(config);
  artifact.target.mode = config.mode;
  artifact.target.iqr_multiplier = config.iqr_multiplier;
  artifact.policy = config.policy;

  auto y = make_targets(train, config.mode);
  if (config.clip && (config.mode == TargetMode::correction || config.clip_direct)) {
    artifact.target.clip = fit_clip_range(y, config.iqr_multiplier);
    for (auto& v : y) v = clip(v, *artifact.target.clip);
  }

  json k_search = json::array();
  const auto tuning_start = Clock::now();
  std::size_t k = 0;
  if (uses_features(config.kind) || config.policy.two_stage) {
    const auto width = fit_schema(train, y, 1).encoded_features().size();
    if (config.feature_k) {
      k = *config.feature_k;
    } else if (!uses_features(config.kind)) {
      k = width;
    } else if (validation.empty()) {
      k = std::min(config.fallback_k, width);
      spdlog::warn("no validation executions; using k={} without tuning", k);
    } else {
      std::vector<std::size_t> candidates;
      for (const auto c : config.k_candidates) candidates.push_back(c == 0 || c > width ? width : c);
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      double best = std::numeric_limits<double>::infinity();
      for (const auto c : candidates) {
        ModelArtifact trial = artifact;
        trial.schema = fit_schema(train, y, c);
        const auto X = encode(train, *trial.schema);
        trial.body = fit_body(config, &X, y, train);
        const auto p90 = validation_p90(trial, validation);
        k_search.push_back(json{{"k", c}, {"validation_p90", p90}});
        spdlog::debug("k={} validation P90 {:.4f}", c, p90);
        if (p90 < best) {
          best = p90;
          k = c;
        }
      }
    }
    artifact.schema = fit_schema(train, y, k);
  }
  const auto tuning_seconds = seconds_since(tuning_start);

  const auto fit_start = Clock::now();
  std::optional<FeatureMatrix> X;
  if (artifact.schema) X = encode(train, *artifact.schema);
  artifact.body = fit_body(config, X ? &*X : nullptr, y, train);
  const auto fit_seconds = seconds_since(fit_start);

  if (config.policy.two_stage) {
    std::vector<std::uint8_t> is_zero;
    for (const auto& s : train) is_zero.push_back(*s.act_rows == 0);
    artifact.zero_classifier = zero_train(*X, is_zero, config.gbdt, config.policy.zero_threshold);
  }
  if (config.policy.clamp_calibration == ClampCalibration::validation_quantile) {
    artifact.policy.clamp = calibrate_clamp(validation, config.policy.p_low, config.policy.p_high);
  }

  json meta;
  meta["split"] = split_to_json(split);
  meta["split_sizes"] = {{"train", split.train.size()},
                         {"validation", split.validation.size()},
                         {"test", split.test.size()}};
  meta["train_samples"] = train.size();
  meta["validation_samples"] = validation.size();
  meta["k_search"] = std::move(k_search);
  meta["tuned_k"] = artifact.schema ? json(artifact.schema->k) : json();
  meta["schema_summary"] = artifact.schema ? summary_to_json(summarize(*artifact.schema)) : json();
  meta["clamp_band"] = artifact.policy.clamp ? json::array({artifact.policy.clamp->c_min, artifact.policy.clamp->c_max})
                                             : json();
  meta["fit_kind"] = config.kind == ModelKind::refset ? "setup" : "training";
  meta["timing"] = {{"setup_seconds", fit_seconds}, {"tuning_seconds", tuning_seconds}};
  artifact.metadata = std::move(meta);
  artifact.created_at = utc_now();
  spdlog::info("trained {} on {} samples ({} executions) in {:.3f}s", artifact.name, train.size(), split.train.size(),
               fit_seconds);
  return TrainResult{std::move(artifact), split};
}

std::vector<double> predict_log_factors(const ModelArtifact& artifact, std::span<const OperatorSample> samples) {
  std::vector<double> raw(samples.size());
  switch (artifact.kind) {
    case ModelKind::gbr:
    case ModelKind::refset: {
      const auto X = encode(samples, *artifact.schema);
      raw = artifact.kind == ModelKind::gbr ? gbdt_predict(std::get<GbdtModel>(artifact.body), X)
                                            : refset_predict(std::get<ReferenceSetModel>(artifact.body), X);
      if (artifact.target.mode == TargetMode::correction) return raw;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto rows = invert(raw[i], samples[i].est_rows, TargetMode::direct);
        raw[i] = std::log1p(rows) - std::log1p(samples[i].est_rows);
      }
      return raw;
    }
    case ModelKind::group_scale:
    case ModelKind::isotonic:
    case ModelKind::litecard:
      break;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    double rows = 0.0;
    if (artifact.kind == ModelKind::group_scale) {
      rows = group_scale_predict(std::get<GroupScaleModel>(artifact.body), s);
    } else if (artifact.kind == ModelKind::isotonic) {
      rows = isotonic_predict(std::get<IsotonicModel>(artifact.body), s);
    } else {
      rows = litecard_predict(std::get<LiteCardModel>(artifact.body), s);
    }
    raw[i] = std::log1p(rows) - std::log1p(s.est_rows);
  }
  return raw;
}

Predictions predict_traces(const ModelArtifact& artifact, std::span<const PlanTrace> traces) {
  const auto start = Clock::now();
  const auto samples = extract_samples(traces);
  const auto lf = predict_log_factors(artifact, samples);
  std::vector<double> zero;
  if (artifact.policy.two_stage) {
    if (!artifact.zero_classifier || !artifact.schema) throw ConfigError("two-stage policy without a zero classifier");
    zero = zero_predict(*artifact.zero_classifier, encode(samples, *artifact.schema));
  }
  Predictions out;
  out.samples = samples.size();
  std::size_t offset = 0;
  for (const auto& trace : traces) {
    NodeValues factors;
    NodeValues zero_probs;
    for (; offset < samples.size() && samples[offset].execution_id == trace.execution_id; ++offset) {
      factors[samples[offset].node_id] = lf[offset];
      if (!zero.empty()) zero_probs[samples[offset].node_id] = zero[offset];
    }
    out.traces.push_back(apply_policy(trace, factors, artifact.policy, zero.empty() ? nullptr : &zero_probs));
  }
  out.inference_seconds = seconds_since(start);
  return out;
}

ModelRun run_model(const ModelArtifact& artifact, std::span<const PlanTrace> traces) {
  const auto predictions = predict_traces(artifact, traces);
  ModelRun run;
  run.name = artifact.name;
  run.values = corrected_values(predictions.traces);
  if (uses_features(artifact.kind)) run.target_mode = std::string(to_string(artifact.target.mode));
  double setup = 0.0;
  if (const auto t = artifact.metadata.find("timing"); t != artifact.metadata.end()) {
    setup = t->value("setup_seconds", 0.0);
  }
  run.timing = timing_report(setup, predictions.inference_seconds, predictions.samples);
  return run;
}

namespace {

void annotate(json& node, const CorrectedTrace& c) {
  const auto id = node.at("id").get<std::string>();
  node["corrected_rows"] = c.corrected_rows.at(id);
  node["provenance"] = std::string(to_string(c.provenance.at(id)));
  for (auto& child : node["children"]) annotate(child, c);
}

}  // namespace

json corrected_to_json(std::span<const CorrectedTrace> traces, const json& provenance) {
  TraceCorpus corpus;
  corpus.provenance = provenance;
  for (const auto& c : traces) corpus.traces.push_back(c.trace);
  auto j = corpus_to_json(corpus);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto& t = j["traces"][i];
    annotate(t["root"], traces[i]);
    t["policy"] = policy_to_json(traces[i].applied_policy);
  }
  return j;
}

}  // namespace cardcorr
