#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cardcorr/artifact.hpp"
#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"
#include "cardcorr/pipeline.hpp"
#include "cardcorr/synthgen.hpp"
#include "test_support.hpp"

using namespace cardcorr;

namespace {

const TraceCorpus& small_corpus() {
  static const TraceCorpus corpus = [] {
    auto spec = default_gen_spec();
    spec.n_executions = 40;
    spec.seed = 21;
    return generate(spec);
  }();
  return corpus;
}

TrainConfig fast_config(ModelKind kind) {
  TrainConfig c;
  c.kind = kind;
  c.gbdt.n_trees = 60;
  c.k_candidates = {4, 8, 0};
  return c;
}

}  // namespace

TEST(Pipeline, DeterministicArtifact) {
  const auto a = train_model(small_corpus(), fast_config(ModelKind::gbr));
  const auto b = train_model(small_corpus(), fast_config(ModelKind::gbr));
  EXPECT_EQ(artifact_fingerprint(a.artifact), artifact_fingerprint(b.artifact));
  EXPECT_EQ(a.split, b.split);
}

TEST(Pipeline, ArtifactRoundTripsByteIdentical) {
  for (const auto kind : {ModelKind::gbr, ModelKind::refset, ModelKind::group_scale, ModelKind::isotonic,
                          ModelKind::litecard}) {
    auto config = fast_config(kind);
    config.policy.two_stage = kind == ModelKind::gbr;
    const auto trained = train_model(small_corpus(), config);
    const auto bytes = serialize_artifact(trained.artifact);
    const auto loaded = artifact_from_json(nlohmann::json::parse(bytes));
    EXPECT_EQ(serialize_artifact(loaded), bytes) << to_string(kind);

    const auto dir = testsupport::scratch_dir("artifact");
    save_artifact(dir / "m.json", trained.artifact);
    EXPECT_EQ(read_text_file(dir / "m.json"), bytes);
    EXPECT_EQ(serialize_artifact(load_artifact(dir / "m.json")), bytes);
  }
}

TEST(Pipeline, VersionMismatch) {
  const auto trained = train_model(small_corpus(), fast_config(ModelKind::group_scale));
  auto j = artifact_to_json(trained.artifact);
  j["header"]["format_version"] = 99;
  EXPECT_THROW(artifact_from_json(j), VersionMismatch);
}

TEST(Pipeline, MetadataRecordsSplitAndTuning) {
  const auto trained = train_model(small_corpus(), fast_config(ModelKind::gbr));
  const auto& meta = trained.artifact.metadata;
  EXPECT_EQ(meta["split_sizes"]["train"].get<std::size_t>(), trained.split.train.size());
  EXPECT_EQ(meta["k_search"].size(), 3U);
  const auto tuned = meta["tuned_k"].get<std::size_t>();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (const auto& entry : meta["k_search"]) {
    if (entry["validation_p90"].get<double>() < best) {
      best = entry["validation_p90"].get<double>();
      best_k = entry["k"].get<std::size_t>();
    }
  }
  EXPECT_EQ(tuned, best_k);
  EXPECT_EQ(split_from_json(meta["split"]), trained.split);
  EXPECT_TRUE(meta["timing"].contains("setup_seconds"));
  ASSERT_TRUE(trained.artifact.schema.has_value());
  EXPECT_EQ(trained.artifact.schema->selected_features.size(), tuned);
}

TEST(Pipeline, FixedKSkipsSearch) {
  auto config = fast_config(ModelKind::gbr);
  config.feature_k = 5;
  const auto trained = train_model(small_corpus(), config);
  EXPECT_TRUE(trained.artifact.metadata["k_search"].empty());
  EXPECT_EQ(trained.artifact.schema->k, 5U);
}

TEST(Pipeline, RefsetStoresTrainingMatrixVerbatim) {
  auto config = fast_config(ModelKind::refset);
  config.feature_k = 6;
  const auto trained = train_model(small_corpus(), config);
  const auto train = extract_samples(select_traces(small_corpus(), trained.split.train));
  const auto X = encode(train, *trained.artifact.schema);
  const auto& body = std::get<ReferenceSetModel>(trained.artifact.body);
  EXPECT_EQ(body.reference_features, X);
  EXPECT_EQ(body.reference_targets.size(), train.size());
  EXPECT_EQ(trained.artifact.metadata["fit_kind"], "setup");
}

TEST(Pipeline, ClipRecordedWhenEnabled) {
  auto config = fast_config(ModelKind::gbr);
  config.clip = true;
  const auto trained = train_model(small_corpus(), config);
  ASSERT_TRUE(trained.artifact.target.clip.has_value());
  EXPECT_LE(trained.artifact.target.clip->low, trained.artifact.target.clip->high);
  config.mode = TargetMode::direct;
  EXPECT_FALSE(train_model(small_corpus(), config).artifact.target.clip.has_value());
  config.clip_direct = true;
  EXPECT_TRUE(train_model(small_corpus(), config).artifact.target.clip.has_value());
}

TEST(Pipeline, QuantileClampCalibratedOnValidation) {
  auto config = fast_config(ModelKind::gbr);
  config.policy.clamp_calibration = ClampCalibration::validation_quantile;
  const auto trained = train_model(small_corpus(), config);
  const auto validation = extract_samples(select_traces(small_corpus(), trained.split.validation));
  ASSERT_TRUE(trained.artifact.policy.clamp.has_value());
  EXPECT_EQ(*trained.artifact.policy.clamp, calibrate_clamp(validation));
}

TEST(Pipeline, PredictAllKindsCoversEveryNode) {
  for (const auto kind : {ModelKind::gbr, ModelKind::refset, ModelKind::group_scale, ModelKind::isotonic,
                          ModelKind::litecard}) {
    const auto trained = train_model(small_corpus(), fast_config(kind));
    const auto test = select_traces(small_corpus(), trained.split.test);
    const auto preds = predict_traces(trained.artifact, test);
    ASSERT_EQ(preds.traces.size(), test.size());
    std::size_t nodes = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      nodes += count_nodes(test[i].root);
      EXPECT_EQ(preds.traces[i].corrected_rows.size(), count_nodes(test[i].root));
      for (const auto& [id, v] : preds.traces[i].corrected_rows) EXPECT_GE(v, 0.0);
    }
    EXPECT_EQ(preds.samples, nodes);
  }
}

TEST(Pipeline, DirectModeLogFactorsInvertToDirectPrediction) {
  auto config = fast_config(ModelKind::gbr);
  config.mode = TargetMode::direct;
  config.feature_k = 8;
  const auto trained = train_model(small_corpus(), config);
  const auto samples = extract_samples(select_traces(small_corpus(), trained.split.test));
  const auto lf = predict_log_factors(trained.artifact, samples);
  const auto X = encode(samples, *trained.artifact.schema);
  const auto direct = gbdt_predict(std::get<GbdtModel>(trained.artifact.body), X);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto a = invert(lf[i], samples[i].est_rows, TargetMode::correction);
    const auto b = invert(direct[i], samples[i].est_rows, TargetMode::direct);
    EXPECT_NEAR(a, b, 1e-6 * (1.0 + b));
  }
}

TEST(Pipeline, JoinOnlyLeavesNonJoinsNative) {
  auto config = fast_config(ModelKind::gbr);
  config.policy.scope = PolicyScope::join_only;
  const auto trained = train_model(small_corpus(), config);
  const auto test = select_traces(small_corpus(), trained.split.test);
  const auto preds = predict_traces(trained.artifact, test);
  const OperatorGrouping grouping;
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (const auto& v : iter_nodes(test[i])) {
      if (grouping.classify(v.node->operator_type) == OperatorGroup::join) continue;
      EXPECT_EQ(preds.traces[i].corrected_rows.at(v.node->node_id), v.node->est_rows);
    }
  }
}

TEST(Pipeline, PredictOnExplainOnlyTracesAndReload) {
  const auto trained = train_model(small_corpus(), fast_config(ModelKind::gbr));
  auto test = select_traces(small_corpus(), trained.split.test);
  const auto strip = [](const auto& self, PlanNode& n) -> void {
    n.act_rows.reset();
    for (auto& c : n.children) self(self, c);
  };
  for (auto& t : test) {
    t.source = TraceSource::explain_only;
    strip(strip, t.root);
  }
  const auto preds = predict_traces(trained.artifact, test);
  const auto j = corrected_to_json(preds.traces, nlohmann::json::object());
  const auto reloaded = corpus_from_json(j);
  EXPECT_EQ(reloaded.traces.size(), test.size());
  EXPECT_TRUE(j["traces"][0]["root"].contains("corrected_rows"));
  EXPECT_TRUE(j["traces"][0]["root"].contains("provenance"));
}

TEST(Pipeline, RunModelFeedsEvaluation) {
  const auto trained = train_model(small_corpus(), fast_config(ModelKind::gbr));
  const auto test = select_traces(small_corpus(), trained.split.test);
  const std::vector<ModelRun> runs{run_model(trained.artifact, test)};
  const auto report = evaluate("test", test, runs);
  ASSERT_EQ(report.models.size(), 2U);
  EXPECT_EQ(report.models[1].overall.n, report.samples);
  ASSERT_TRUE(report.models[1].timing.has_value());
  EXPECT_EQ(report.models[1].timing->samples, report.samples);
}
