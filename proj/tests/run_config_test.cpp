#include <gtest/gtest.h>

#include <filesystem>

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"
#include "cardcorr/run_config.hpp"

using namespace cardcorr;

TEST(RunConfig, DefaultsWithoutFile) {
  const auto c = parse_run_config("");
  EXPECT_FALSE(c.corpus.has_value());
  EXPECT_EQ(c.train.kind, ModelKind::gbr);
  EXPECT_EQ(c.train.mode, TargetMode::correction);
  EXPECT_FALSE(c.train.policy.two_stage);
  EXPECT_EQ(c.synth, default_gen_spec());
}

TEST(RunConfig, ParsesSections) {
  const auto c = parse_run_config(R"(
[corpus]
path = data/corpus.json
[split]
train = 0.7
validation = 0.15
test = 0.15
seed = 9
stratify = true
[features]
k = 12
[target]
mode = direct
[model]
kind = refset
[refset]
k_neighbors = 4
weighting = uniform
[policy]
scope = join_only
clamp = 0.5,2
safe_inject = true
projection = at_most
[synth]
executions = 50
join_mu = 0.7
mix.Limit = 0.5
)");
  EXPECT_EQ(c.corpus->string(), "data/corpus.json");
  EXPECT_DOUBLE_EQ(c.train.fractions.train, 0.7);
  EXPECT_EQ(c.train.split_seed, 9U);
  EXPECT_TRUE(c.train.stratify_by_tag);
  EXPECT_EQ(c.train.feature_k, 12U);
  EXPECT_EQ(c.train.mode, TargetMode::direct);
  EXPECT_EQ(c.train.kind, ModelKind::refset);
  EXPECT_EQ(c.train.refset_k, 4U);
  EXPECT_EQ(c.train.refset_weighting, Weighting::uniform);
  EXPECT_EQ(c.train.policy.scope, PolicyScope::join_only);
  ASSERT_TRUE(c.train.policy.clamp.has_value());
  EXPECT_EQ(c.train.policy.clamp->c_max, 2.0);
  EXPECT_TRUE(c.train.policy.safe_inject);
  EXPECT_TRUE(c.train.policy.projection_at_most);
  EXPECT_EQ(c.synth.n_executions, 50U);
  EXPECT_EQ(c.synth.bias.at(OperatorGroup::join).mu, 0.7);
  EXPECT_EQ(c.synth.operator_mix.at("Limit"), 0.5);
}

TEST(RunConfig, ClampOptionForms) {
  PolicyConfig p;
  apply_clamp_option(p, "0.05,0.95");
  EXPECT_EQ(p.clamp_calibration, ClampCalibration::validation_quantile);
  EXPECT_EQ(p.p_low, 0.05);
  EXPECT_FALSE(p.clamp.has_value());
  apply_clamp_option(p, "0.25,4");
  EXPECT_EQ(p.clamp_calibration, ClampCalibration::fixed);
  EXPECT_EQ(p.clamp, (ClampBand{0.25, 4.0}));
  EXPECT_THROW(apply_clamp_option(p, "3"), ConfigError);
}

TEST(RunConfig, OverridesWinAndErrorsAreExplicit) {
  auto c = parse_run_config("[gbr]\nn_trees = 10\n");
  apply_override(c, "gbr.n_trees", "25");
  EXPECT_EQ(c.train.gbdt.n_trees, 25U);
  apply_override(c, "features.k", "auto");
  EXPECT_FALSE(c.train.feature_k.has_value());
  EXPECT_THROW(apply_override(c, "gbr.colour", "red"), ConfigError);
  EXPECT_THROW(apply_override(c, "gbr.n_trees", "-3"), ConfigError);
  EXPECT_THROW(apply_override(c, "target.clip", "maybe"), ConfigError);
  EXPECT_THROW(parse_run_config("[unknown]\nx = 1\n"), ConfigError);
}

TEST(RunConfig, HashIsStableAndSensitive) {
  const auto a = parse_run_config("[split]\nseed = 3\n");
  const auto b = parse_run_config("[split]\nseed = 3\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16U);
  auto c = a;
  apply_override(c, "split.seed", "4");
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(RunConfig, ShippedDefaultsMatchBuiltIns) {
  const auto c = load_run_config(std::string(CARDCORR_SOURCE_DIR) + "/configs/default.ini");
  EXPECT_EQ(config_hash(c), config_hash(RunConfig{}));
}

TEST(RunConfig, LoadErrorNamesTheFile) {
  const auto dir = std::filesystem::temp_directory_path() / "cardcorr_run_config";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bad.ini";
  write_text_file(path, "[gbr]\nn_trees = many\n");
  try {
    load_run_config(path);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.ini"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("gbr.n_trees"), std::string::npos);
  }
}
