#include "cardcorr/run_config.hpp"

#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"

namespace cardcorr {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, v));
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

std::pair<double, double> to_pair(const std::string& key, const std::string& v) {
  const auto comma = v.find(',');
  if (comma == std::string::npos) throw ConfigError(fmt::format("{}: expected 'a,b', got '{}'", key, v));
  return {to_double(key, v.substr(0, comma)), to_double(key, v.substr(comma + 1))};
}

ClassBias& bias_for(GenSpec& spec, OperatorGroup g) { return spec.bias[g]; }

void set_other_bias(GenSpec& spec, bool mu, double value) {
  for (const auto g : {OperatorGroup::scan, OperatorGroup::filter, OperatorGroup::aggregation, OperatorGroup::other}) {
    (mu ? spec.bias[g].mu : spec.bias[g].sigma) = value;
  }
}

}  // namespace

void apply_clamp_option(PolicyConfig& policy, const std::string& text) {
  const auto [a, b] = to_pair("policy.clamp", text);
  if (b < 1.0) {
    policy.clamp_calibration = ClampCalibration::validation_quantile;
    policy.p_low = a;
    policy.p_high = b;
    policy.clamp.reset();
  } else {
    policy.clamp_calibration = ClampCalibration::fixed;
    policy.clamp = ClampBand{a, b};
  }
}

void apply_override(RunConfig& c, const std::string& key, const std::string& v) {
  auto& t = c.train;
  auto& g = c.synth;
  if (key == "corpus.path") {
    c.corpus = v;
  } else if (key == "output.dir") {
    c.output_dir = v;
  } else if (key == "split.train") {
    t.fractions.train = to_double(key, v);
  } else if (key == "split.validation") {
    t.fractions.validation = to_double(key, v);
  } else if (key == "split.test") {
    t.fractions.test = to_double(key, v);
  } else if (key == "split.seed") {
    t.split_seed = to_uint(key, v);
  } else if (key == "split.stratify") {
    t.stratify_by_tag = to_bool(key, v);
  } else if (key == "features.k") {
    if (v == "auto") {
      t.feature_k.reset();
    } else {
      t.feature_k = to_uint(key, v);
    }
  } else if (key == "target.mode") {
    t.mode = target_mode_from_string(v);
  } else if (key == "target.clip") {
    t.clip = to_bool(key, v);
  } else if (key == "target.clip_direct") {
    t.clip_direct = to_bool(key, v);
  } else if (key == "target.iqr_multiplier") {
    t.iqr_multiplier = to_double(key, v);
  } else if (key == "model.kind") {
    t.kind = model_kind_from_string(v);
  } else if (key == "model.name") {
    t.name = v;
  } else if (key == "model.seed") {
    t.gbdt.seed = to_uint(key, v);
  } else if (key == "gbr.n_trees") {
    t.gbdt.n_trees = to_uint(key, v);
  } else if (key == "gbr.max_depth") {
    t.gbdt.max_depth = to_uint(key, v);
  } else if (key == "gbr.learning_rate") {
    t.gbdt.learning_rate = to_double(key, v);
  } else if (key == "gbr.min_samples_leaf") {
    t.gbdt.min_samples_leaf = to_uint(key, v);
  } else if (key == "gbr.subsample") {
    t.gbdt.subsample = to_double(key, v);
  } else if (key == "refset.k_neighbors") {
    t.refset_k = to_uint(key, v);
  } else if (key == "refset.weighting") {
    t.refset_weighting = weighting_from_string(v);
  } else if (key == "litecard.min_support") {
    t.litecard_min_support = to_uint(key, v);
  } else if (key == "policy.scope") {
    t.policy.scope = policy_scope_from_string(v);
  } else if (key == "policy.clamp") {
    if (v.empty() || v == "none") {
      t.policy.clamp.reset();
      t.policy.clamp_calibration = ClampCalibration::fixed;
    } else {
      apply_clamp_option(t.policy, v);
    }
  } else if (key == "policy.clamp_mode") {
    t.policy.clamp_calibration = clamp_calibration_from_string(v);
  } else if (key == "policy.two_stage") {
    t.policy.two_stage = to_bool(key, v);
  } else if (key == "policy.zero_threshold") {
    t.policy.zero_threshold = to_double(key, v);
  } else if (key == "policy.safe_inject") {
    t.policy.safe_inject = to_bool(key, v);
  } else if (key == "policy.projection") {
    if (v != "equal" && v != "at_most") throw ConfigError("policy.projection must be 'equal' or 'at_most'");
    t.policy.projection_at_most = v == "at_most";
  } else if (key == "synth.executions") {
    g.n_executions = to_uint(key, v);
  } else if (key == "synth.depth_min") {
    g.depth_range.first = to_uint(key, v);
  } else if (key == "synth.depth_max") {
    g.depth_range.second = to_uint(key, v);
  } else if (key == "synth.fanout_min") {
    g.fanout_range.first = to_double(key, v);
  } else if (key == "synth.fanout_max") {
    g.fanout_range.second = to_double(key, v);
  } else if (key == "synth.scale_factor") {
    g.scale_factor = to_double(key, v);
  } else if (key == "synth.selectivity_min") {
    g.selectivity_range.first = to_double(key, v);
  } else if (key == "synth.selectivity_max") {
    g.selectivity_range.second = to_double(key, v);
  } else if (key == "synth.range_fraction_min") {
    g.range_scan_fraction.first = to_double(key, v);
  } else if (key == "synth.range_fraction_max") {
    g.range_scan_fraction.second = to_double(key, v);
  } else if (key == "synth.join_correlation_sigma") {
    g.join_correlation_sigma = to_double(key, v);
  } else if (key.rfind("synth.mix.", 0) == 0) {
    g.operator_mix[key.substr(10)] = to_double(key, v);
  } else if (key == "synth.zero_fraction") {
    g.zero_fraction = to_double(key, v);
  } else if (key == "synth.outer_join_fraction") {
    g.outer_join_fraction = to_double(key, v);
  } else if (key == "synth.join_mu") {
    bias_for(g, OperatorGroup::join).mu = to_double(key, v);
  } else if (key == "synth.join_sigma") {
    bias_for(g, OperatorGroup::join).sigma = to_double(key, v);
  } else if (key == "synth.other_mu") {
    set_other_bias(g, true, to_double(key, v));
  } else if (key == "synth.other_sigma") {
    set_other_bias(g, false, to_double(key, v));
  } else if (key == "synth.seed") {
    g.seed = to_uint(key, v);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) apply_override(config, section + "." + key, value.get_value<std::string>());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  const auto& t = c.train;
  nlohmann::json train{{"fractions", {t.fractions.train, t.fractions.validation, t.fractions.test}},
                       {"split_seed", t.split_seed},
                       {"stratify_by_tag", t.stratify_by_tag},
                       {"feature_k", t.feature_k ? nlohmann::json(*t.feature_k) : nlohmann::json("auto")},
                       {"k_candidates", t.k_candidates},
                       {"mode", std::string(to_string(t.mode))},
                       {"clip", t.clip},
                       {"clip_direct", t.clip_direct},
                       {"iqr_multiplier", t.iqr_multiplier},
                       {"kind", std::string(to_string(t.kind))},
                       {"name", t.name},
                       {"gbr", gbdt_params_to_json(t.gbdt)},
                       {"refset", {{"k_neighbors", t.refset_k}, {"weighting", std::string(to_string(t.refset_weighting))}}},
                       {"litecard", {{"min_support", t.litecard_min_support}}},
                       {"policy", policy_to_json(t.policy)}};
  return nlohmann::json{{"corpus", c.corpus ? nlohmann::json(c.corpus->string()) : nlohmann::json()},
                        {"output_dir", c.output_dir.string()},
                        {"train", std::move(train)},
                        {"synth", gen_spec_to_json(c.synth)}};
}

std::string config_hash(const RunConfig& config) {
  const auto text = run_config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace cardcorr
