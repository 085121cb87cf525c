#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cardcorr/artifact.hpp"
#include "cardcorr/eval.hpp"

namespace cardcorr {

struct TrainConfig {
  SplitFractions fractions;
  std::uint64_t split_seed = 42;
  bool stratify_by_tag = false;
  std::optional<std::size_t> feature_k;  // nullopt: tuned on validation
  std::vector<std::size_t> k_candidates{4, 6, 8, 10, 12, 0};  // 0 stands for all features
  std::size_t fallback_k = 10;  // used when there is no validation split to tune on
  TargetMode mode = TargetMode::correction;
  bool clip = false;         // IQR clipping of training targets (correction mode)
  bool clip_direct = false;  // also clip when training in direct mode
  double iqr_multiplier = 1.5;
  ModelKind kind = ModelKind::gbr;
  std::string name;  // defaults to "<kind>-<mode>"
  GbdtParams gbdt;
  std::size_t refset_k = 8;
  Weighting refset_weighting = Weighting::inverse_distance;
  std::size_t litecard_min_support = 5;
  PolicyConfig policy;
};

struct TrainResult {
  ModelArtifact artifact;
  SplitAssignment split;
};

// Splits, fits the schema and targets on the training executions, tunes k on
// validation P90, calibrates the clamp band when asked to, and trains the final
// model on the training split only.
TrainResult train_model(const TraceCorpus& corpus, const TrainConfig& config);
TrainResult train_model(const TraceCorpus& corpus, const SplitAssignment& split, const TrainConfig& config);

std::vector<PlanTrace> select_traces(const TraceCorpus& corpus, const std::set<std::string>& ids);

// Predicted ln((1 + rows) / (1 + est)) per sample, for every model kind.
std::vector<double> predict_log_factors(const ModelArtifact& artifact, std::span<const OperatorSample> samples);

struct Predictions {
  std::vector<CorrectedTrace> traces;
  double inference_seconds = 0.0;
  std::size_t samples = 0;
};

// Runs the model and the artifact's policy over (possibly unlabeled) traces.
Predictions predict_traces(const ModelArtifact& artifact, std::span<const PlanTrace> traces);

ModelRun run_model(const ModelArtifact& artifact, std::span<const PlanTrace> traces);

// Canonical corpus JSON with per-node "corrected_rows" and "provenance" keys.
nlohmann::json corrected_to_json(std::span<const CorrectedTrace> traces, const nlohmann::json& provenance);

}  // namespace cardcorr
