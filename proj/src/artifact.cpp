#include "cardcorr/artifact.hpp"

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"

namespace cardcorr {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gbr:
      return "gbr";
    case ModelKind::refset:
      return "refset";
    case ModelKind::group_scale:
      return "group_scale";
    case ModelKind::isotonic:
      return "isotonic";
    case ModelKind::litecard:
      return "litecard";
  }
  return "gbr";
}

ModelKind model_kind_from_string(std::string_view text) {
  for (const auto kind : {ModelKind::gbr, ModelKind::refset, ModelKind::group_scale, ModelKind::isotonic,
                          ModelKind::litecard}) {
    if (text == to_string(kind)) return kind;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

bool uses_features(ModelKind kind) { return kind == ModelKind::gbr || kind == ModelKind::refset; }

namespace {

json body_to_json(const ModelBody& body) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GbdtModel>) return gbdt_to_json(m);
        if constexpr (std::is_same_v<T, ReferenceSetModel>) return refset_to_json(m);
        if constexpr (std::is_same_v<T, GroupScaleModel>) return group_scale_to_json(m);
        if constexpr (std::is_same_v<T, IsotonicModel>) return isotonic_to_json(m);
        if constexpr (std::is_same_v<T, LiteCardModel>) return litecard_to_json(m);
      },
      body);
}

ModelBody body_from_json(ModelKind kind, const json& j) {
  switch (kind) {
    case ModelKind::gbr:
      return gbdt_from_json(j);
    case ModelKind::refset:
      return refset_from_json(j);
    case ModelKind::group_scale:
      return group_scale_from_json(j);
    case ModelKind::isotonic:
      return isotonic_from_json(j);
    case ModelKind::litecard:
      return litecard_from_json(j);
  }
  throw Error("unreachable model kind");
}

}  // namespace

json artifact_to_json(const ModelArtifact& a) {
  json header{{"format_version", kArtifactFormatVersion},
              {"created_at", a.created_at},
              {"name", a.name},
              {"kind", std::string(to_string(a.kind))},
              {"mode", std::string(to_string(a.target.mode))},
              {"hyperparams", a.hyperparams},
              {"seed", a.seed}};
  return json{{"header", std::move(header)},
              {"schema", a.schema ? schema_to_json(*a.schema) : json()},
              {"target", target_spec_to_json(a.target)},
              {"policy", policy_to_json(a.policy)},
              {"body", body_to_json(a.body)},
              {"zero_classifier", a.zero_classifier ? zero_classifier_to_json(*a.zero_classifier) : json()},
              {"metadata", a.metadata}};
}

ModelArtifact artifact_from_json(const json& j) {
  const auto& header = j.at("header");
  const auto version = header.at("format_version").get<int>();
  if (version != kArtifactFormatVersion) {
    throw VersionMismatch("model artifact format version " + std::to_string(version) + ", expected " +
                          std::to_string(kArtifactFormatVersion));
  }
  ModelArtifact a;
  a.created_at = header.at("created_at").get<std::string>();
  a.name = header.at("name").get<std::string>();
  a.kind = model_kind_from_string(header.at("kind").get<std::string>());
  a.hyperparams = header.at("hyperparams");
  a.seed = header.at("seed").get<std::uint64_t>();
  if (const auto& s = j.at("schema"); !s.is_null()) a.schema = schema_from_json(s);
  if (uses_features(a.kind) && !a.schema) throw Error("artifact for a learned model has no feature schema");
  a.target = target_spec_from_json(j.at("target"));
  a.policy = policy_from_json(j.at("policy"));
  a.body = body_from_json(a.kind, j.at("body"));
  if (const auto& z = j.at("zero_classifier"); !z.is_null()) a.zero_classifier = zero_classifier_from_json(z);
  a.metadata = j.at("metadata");
  return a;
}

std::string serialize_artifact(const ModelArtifact& artifact) { return artifact_to_json(artifact).dump(1) + "\n"; }

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact) {
  write_text_file(path, serialize_artifact(artifact));
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return artifact_from_json(j);
}

std::string artifact_fingerprint(const ModelArtifact& artifact) {
  auto j = artifact_to_json(artifact);
  j["header"].erase("created_at");
  j["metadata"].erase("timing");
  return j.dump();
}

}  // namespace cardcorr
