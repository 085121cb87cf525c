#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

#include "cardcorr/baselines.hpp"
#include "cardcorr/dataset.hpp"
#include "cardcorr/gbdt.hpp"
#include "cardcorr/policy.hpp"
#include "cardcorr/refset.hpp"
#include "cardcorr/targets.hpp"

namespace cardcorr {

inline constexpr int kArtifactFormatVersion = 1;

enum class ModelKind { gbr, refset, group_scale, isotonic, litecard };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view text);

// Learned kinds consume encoded features; baselines work on raw samples.
bool uses_features(ModelKind kind);

using ModelBody = std::variant<GbdtModel, ReferenceSetModel, GroupScaleModel, IsotonicModel, LiteCardModel>;

struct ModelArtifact {
  std::string name;
  ModelKind kind = ModelKind::gbr;
  std::string created_at;
  std::uint64_t seed = 0;
  nlohmann::json hyperparams = nlohmann::json::object();
  std::optional<FeatureSchema> schema;
  TargetSpec target;
  PolicyConfig policy;
  ModelBody body;
  std::optional<ZeroClassifier> zero_classifier;
  // Split ids, schema summary, tuned k, clamp band, timings.
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json artifact_to_json(const ModelArtifact& artifact);

// Throws VersionMismatch for an unknown format version.
ModelArtifact artifact_from_json(const nlohmann::json& j);

std::string serialize_artifact(const ModelArtifact& artifact);
void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::filesystem::path& path);

// Serialized artifact with wall-clock dependent fields (creation time and
// timings) removed; equal for runs with equal data, config and seed.
std::string artifact_fingerprint(const ModelArtifact& artifact);

}  // namespace cardcorr
