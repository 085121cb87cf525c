#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "cardcorr/pipeline.hpp"
#include "cardcorr/synthgen.hpp"

namespace cardcorr {

// Everything one CLI run needs. Loaded from an INI file:
//
//   [corpus]   path
//   [split]    train, validation, test, seed, stratify
//   [features] k (integer or "auto")
//   [target]   mode (correction|direct), clip, clip_direct, iqr_multiplier
//   [model]    kind, name, seed
//   [gbr]      n_trees, max_depth, learning_rate, min_samples_leaf, subsample
//   [refset]   k_neighbors, weighting
//   [litecard] min_support
//   [policy]   scope, clamp ("a,b"), clamp_mode (fixed|quantile), two_stage,
//              zero_threshold, safe_inject, projection (equal|at_most)
//   [synth]    executions, depth_min, depth_max, fanout_min, fanout_max,
//              scale_factor, selectivity_min, selectivity_max, range_fraction_min,
//              range_fraction_max, join_correlation_sigma, mix.<Operator>,
//              zero_fraction, outer_join_fraction, join_mu, join_sigma,
//              other_mu, other_sigma, seed
//   [output]   dir
struct RunConfig {
  std::optional<std::filesystem::path> corpus;
  std::filesystem::path output_dir = "out";
  TrainConfig train;
  GenSpec synth = default_gen_spec();
};

// Throws ConfigError on unknown sections/keys or unparsable values.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& ini_text);

// Applies "section.key" = value overrides with the same parsing rules.
void apply_override(RunConfig& config, const std::string& dotted_key, const std::string& value);

// "a,b": a quantile band when b < 1, a fixed factor band otherwise.
void apply_clamp_option(PolicyConfig& policy, const std::string& text);

nlohmann::json run_config_to_json(const RunConfig& config);

// FNV-1a over the canonical JSON of the config, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace cardcorr
