#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"
#include "cardcorr/explain_parser.hpp"
#include "cardcorr/pipeline.hpp"
#include "cardcorr/run_config.hpp"
#include "cardcorr/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cardcorr;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> model;
  std::optional<std::string> scope;
  std::optional<std::string> clamp;
  bool two_stage = false;
  bool safe_inject = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "seed for the split, model and generator");
  cmd->add_option("--out", o.out, "output file or directory");
  cmd->add_option("--model", o.model, "gbr | refset | group_scale | isotonic | litecard");
  cmd->add_option("--policy-scope", o.scope, "all | join-only");
  cmd->add_option("--clamp", o.clamp, "pLow,pHigh (quantile band) or cMin,cMax (fixed band)");
  cmd->add_flag("--two-stage", o.two_stage, "zero/non-zero classifier before regression");
  cmd->add_flag("--safe-inject", o.safe_inject, "enforce operator semantic bounds");
  cmd->add_option("--set", o.overrides, "section.key=value override, repeatable");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig config = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) {
    config.train.split_seed = *o.seed;
    config.train.gbdt.seed = *o.seed;
    config.synth.seed = *o.seed;
  }
  if (o.model) config.train.kind = model_kind_from_string(*o.model);
  if (o.scope) config.train.policy.scope = policy_scope_from_string(*o.scope);
  if (o.clamp) apply_clamp_option(config.train.policy, *o.clamp);
  if (o.two_stage) config.train.policy.two_stage = true;
  if (o.safe_inject) config.train.policy.safe_inject = true;
  if (!o.out.empty()) config.output_dir = o.out;
  validate(config.train.policy);
  return config;
}

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& config, json extra = {}) {
  json manifest{{"command", command},
                {"tool_version", kToolVersion},
                {"config_hash", config_hash(config)},
                {"config", run_config_to_json(config)},
                {"seeds",
                 {{"split", config.train.split_seed}, {"model", config.train.gbdt.seed}, {"synth", config.synth.seed}}}};
  if (!extra.is_null()) manifest["outputs"] = std::move(extra);
  write_text_file(path, manifest.dump(2) + "\n");
}

fs::path manifest_beside(const fs::path& file) { return fs::path(file.string() + ".manifest.json"); }

TraceCorpus load_configured_corpus(const RunConfig& config, const std::string& flag) {
  const auto path = !flag.empty() ? fs::path(flag) : config.corpus.value_or(fs::path());
  if (path.empty()) throw ConfigError("no corpus given (--corpus or [corpus] path)");
  if (!fs::exists(path)) throw ConfigError("corpus path '" + path.string() + "' does not exist");
  return load_corpus(path);
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("cardcorr"));
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("CARDCORR_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Learned corrections for optimizer cardinality estimates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;

  std::string import_input;
  std::string import_source = "explain_analyze";
  auto* import_cmd = app.add_subcommand("import", "import EXPLAIN text (file or manifest directory) to corpus JSON");
  import_cmd->add_option("input", import_input, "EXPLAIN file or directory with manifest.json")->required();
  import_cmd->add_option("--source", import_source, "explain_only | explain_analyze (single-file input)");
  add_common(import_cmd, common);

  std::optional<std::size_t> synth_executions;
  auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic corpus");
  synth_cmd->add_option("--executions", synth_executions, "number of executions");
  add_common(synth_cmd, common);

  std::string corpus_path;
  auto* split_cmd = app.add_subcommand("split", "assign executions to train/validation/test");
  split_cmd->add_option("--corpus", corpus_path, "corpus JSON or EXPLAIN directory");
  add_common(split_cmd, common);

  std::string mode;
  std::optional<std::size_t> feature_k;
  auto* train_cmd = app.add_subcommand("train", "fit a model and write its artifact");
  train_cmd->add_option("--corpus", corpus_path, "corpus JSON or EXPLAIN directory");
  train_cmd->add_option("--mode", mode, "correction | direct");
  train_cmd->add_option("--k", feature_k, "number of selected features (default: tuned)");
  add_common(train_cmd, common);

  std::vector<std::string> model_paths;
  std::string split_name = "test";
  std::string split_file;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate artifacts against native estimates");
  eval_cmd->add_option("--corpus", corpus_path, "labeled corpus");
  eval_cmd->add_option("--models", model_paths, "model artifacts")->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", split_name, "test | validation | train | all");
  eval_cmd->add_option("--split-file", split_file, "split JSON (default: split stored in the first artifact)");
  add_common(eval_cmd, common);

  std::string artifact_path;
  auto* predict_cmd = app.add_subcommand("predict", "write corrected estimates for (unlabeled) traces");
  predict_cmd->add_option("--artifact", artifact_path, "model artifact")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--corpus", corpus_path, "corpus JSON or EXPLAIN directory");
  add_common(predict_cmd, common);

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "print the tables of an evaluation report");
  report_cmd->add_option("report", report_path, "report.json written by eval")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*import_cmd) {
      const auto config = resolve(common);
      const fs::path input(import_input);
      TraceCorpus corpus;
      if (fs::is_directory(input)) {
        corpus = import_explain_directory(input);
      } else {
        try {
          corpus.traces.push_back(parse_explain_text(read_text_file(input), trace_source_from_string(import_source),
                                                     input.stem().string()));
        } catch (const MalformedPlan& e) {
          throw MalformedPlan(e.message(), e.line(), input.string());
        } catch (const NumberParse& e) {
          throw NumberParse(e.message(), e.line(), input.string());
        }
        corpus.provenance = json{{"imported_from", input.filename().string()}};
        validate(corpus);
      }
      const fs::path out = common.out.empty() ? fs::path("corpus.json") : fs::path(common.out);
      write_text_file(out, serialize_corpus(corpus));
      write_manifest(manifest_beside(out), "import", config);
      fmt::print("executions: {}\noperator samples: {}\nwrote {}\n", corpus.traces.size(),
                 total_operator_count(corpus), out.string());
    } else if (*synth_cmd) {
      auto config = resolve(common);
      if (synth_executions) config.synth.n_executions = *synth_executions;
      const auto corpus = generate(config.synth);
      const fs::path out = common.out.empty() ? fs::path("corpus.json") : fs::path(common.out);
      write_text_file(out, serialize_corpus(corpus));
      write_manifest(manifest_beside(out), "synth", config);
      fmt::print("executions: {}\noperator samples: {}\nwrote {}\n", corpus.traces.size(),
                 total_operator_count(corpus), out.string());
    } else if (*split_cmd) {
      const auto config = resolve(common);
      const auto corpus = load_configured_corpus(config, corpus_path);
      const auto split = split_by_execution(corpus, config.train.fractions, config.train.split_seed,
                                            config.train.stratify_by_tag);
      const fs::path out = common.out.empty() ? fs::path("split.json") : fs::path(common.out);
      write_text_file(out, split_to_json(split).dump(2) + "\n");
      write_manifest(manifest_beside(out), "split", config);
      fmt::print("train: {}  validation: {}  test: {}\nwrote {}\n", split.train.size(), split.validation.size(),
                 split.test.size(), out.string());
    } else if (*train_cmd) {
      auto config = resolve(common);
      if (!mode.empty()) config.train.mode = target_mode_from_string(mode);
      if (feature_k) config.train.feature_k = *feature_k;
      const auto corpus = load_configured_corpus(config, corpus_path);
      const auto result = train_model(corpus, config.train);
      const auto dir = config.output_dir;
      save_artifact(dir / "model.json", result.artifact);
      const auto& meta = result.artifact.metadata;
      json train_manifest{{"split", meta.at("split")},
                          {"split_sizes", meta.at("split_sizes")},
                          {"schema_summary", meta.at("schema_summary")},
                          {"k_search", meta.at("k_search")},
                          {"tuned_k", meta.at("tuned_k")},
                          {"clamp_band", meta.at("clamp_band")},
                          {"timing", meta.at("timing")}};
      write_text_file(dir / "train_manifest.json", train_manifest.dump(2) + "\n");
      write_manifest(dir / "run_manifest.json", "train", config, json{{"artifact", (dir / "model.json").string()}});
      fmt::print("model {} ({} samples, {:.3f}s) -> {}\n", result.artifact.name, meta.at("train_samples").get<std::size_t>(),
                 meta.at("timing").at("setup_seconds").get<double>(), (dir / "model.json").string());
    } else if (*eval_cmd) {
      const auto config = resolve(common);
      const auto corpus = load_configured_corpus(config, corpus_path);
      std::vector<ModelArtifact> artifacts;
      for (const auto& p : model_paths) artifacts.push_back(load_artifact(p));
      std::vector<PlanTrace> traces;
      if (split_name == "all") {
        traces = corpus.traces;
      } else {
        SplitAssignment split;
        if (!split_file.empty()) {
          split = split_from_json(json::parse(read_text_file(split_file)));
        } else if (!artifacts.empty()) {
          split = split_from_json(artifacts.front().metadata.at("split"));
        } else {
          split = split_by_execution(corpus, config.train.fractions, config.train.split_seed,
                                     config.train.stratify_by_tag);
        }
        if (split_name == "test") {
          traces = select_traces(corpus, split.test);
        } else if (split_name == "validation") {
          traces = select_traces(corpus, split.validation);
        } else if (split_name == "train") {
          traces = select_traces(corpus, split.train);
        } else {
          throw ConfigError("unknown split '" + split_name + "'");
        }
      }
      std::vector<ModelRun> runs;
      for (const auto& a : artifacts) runs.push_back(run_model(a, traces));
      const auto report = evaluate(split_name, traces, runs);
      write_report(config.output_dir, report);
      write_manifest(config.output_dir / "run_manifest.json", "eval", config,
                     json{{"models", model_paths}, {"split", split_name}});
      fmt::print("{}", render_report(report_to_json(report)));
    } else if (*predict_cmd) {
      const auto config = resolve(common);
      auto artifact = load_artifact(artifact_path);
      if (common.scope) artifact.policy.scope = config.train.policy.scope;
      if (common.clamp) {
        if (config.train.policy.clamp_calibration == ClampCalibration::validation_quantile) {
          throw ConfigError("predict cannot calibrate a quantile clamp band; pass cMin,cMax");
        }
        artifact.policy.clamp = config.train.policy.clamp;
      }
      if (common.safe_inject) artifact.policy.safe_inject = true;
      if (common.two_stage) {
        if (!artifact.zero_classifier) throw ConfigError("artifact was trained without a zero classifier");
        artifact.policy.two_stage = true;
      }
      const auto corpus = load_configured_corpus(config, corpus_path);
      const auto predictions = predict_traces(artifact, corpus.traces);
      const fs::path out = common.out.empty() ? fs::path("corrected.json") : fs::path(common.out);
      const auto j = corrected_to_json(predictions.traces, corpus.provenance);
      write_text_file(out, j.dump(2) + "\n");
      load_corpus(out);
      write_manifest(manifest_beside(out), "predict", config, json{{"artifact", artifact_path}});
      fmt::print("corrected {} executions ({} operators) -> {}\n", predictions.traces.size(), predictions.samples,
                 out.string());
    } else if (*report_cmd) {
      fmt::print("{}", render_report(json::parse(read_text_file(report_path))));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
