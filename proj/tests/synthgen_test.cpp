#include <gtest/gtest.h>

#include <cmath>

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"
#include "cardcorr/eval.hpp"
#include "cardcorr/policy.hpp"
#include "cardcorr/synthgen.hpp"

using namespace cardcorr;

namespace {

GenSpec small_spec(std::size_t n = 40) {
  auto s = default_gen_spec();
  s.n_executions = n;
  return s;
}

std::size_t joins_below(const PlanNode& n) {
  std::size_t j = n.operator_type.find("Join") != std::string::npos ? 1 : 0;
  for (const auto& c : n.children) j += joins_below(c);
  return j;
}

double act(const PlanNode& n) { return static_cast<double>(*n.act_rows); }

void check_true_rows(const PlanNode& n) {
  for (const auto& c : n.children) check_true_rows(c);
  if (n.children.size() == 1) {
    const auto in = act(n.children[0]);
    if (n.operator_type == "Selection") EXPECT_LE(act(n), in) << n.node_id;
    if (n.operator_type == "Projection") EXPECT_EQ(act(n), in) << n.node_id;
    if (n.operator_type.find("Agg") != std::string::npos) EXPECT_LE(act(n), in) << n.node_id;
    if (n.operator_type == "Limit") {
      EXPECT_LE(act(n), in) << n.node_id;
      ASSERT_TRUE(n.extra_info.has_value());
      const auto limit = parse_limit(*n.extra_info);
      ASSERT_TRUE(limit.has_value());
      EXPECT_LE(act(n), *limit);
    }
  }
  if (n.outer_child_index) EXPECT_GE(act(n), act(n.children[*n.outer_child_index])) << n.node_id;
}

}  // namespace

TEST(Synthgen, DefaultShape) {
  const auto spec = default_gen_spec();
  EXPECT_EQ(spec.n_executions, 263U);
  EXPECT_NEAR(spec.bias.at(OperatorGroup::join).mu, std::log(4.0), 1e-15);
  EXPECT_EQ(spec.bias.at(OperatorGroup::join).sigma, 0.3);
  const auto corpus = generate(spec);
  EXPECT_EQ(corpus.traces.size(), 263U);
  const auto samples = total_operator_count(corpus);
  EXPECT_GT(samples, 5000U);
  EXPECT_LT(samples, 7000U);
  for (const auto& t : corpus.traces) EXPECT_EQ(t.source, TraceSource::explain_analyze);
  EXPECT_NO_THROW(validate(corpus));
}

TEST(Synthgen, Deterministic) {
  const auto spec = small_spec();
  EXPECT_EQ(serialize_corpus(generate(spec)), serialize_corpus(generate(spec)));
  auto other = spec;
  other.seed = spec.seed + 1;
  EXPECT_NE(serialize_corpus(generate(spec)), serialize_corpus(generate(other)));
}

TEST(Synthgen, UnbiasedIsExact) {
  auto spec = small_spec();
  spec.bias.clear();
  const auto corpus = generate(spec);
  const auto q = node_qerrors(corpus.traces, native_values(corpus.traces));
  for (const auto v : q) EXPECT_EQ(v, 1.0);
}

TEST(Synthgen, ZeroSigmaClosedForm) {
  auto spec = small_spec();
  spec.bias.clear();
  spec.bias[OperatorGroup::join] = ClassBias{std::log(4.0), 0.0};
  spec.bias[OperatorGroup::filter] = ClassBias{0.5, 0.0};
  const auto corpus = generate(spec);
  for (const auto& t : corpus.traces) {
    for (const auto& v : iter_nodes(t)) {
      const auto& n = *v.node;
      double log_bias = -std::log(4.0) * static_cast<double>(joins_below(n));
      if (n.operator_type == "Selection") log_bias -= 0.5;
      const auto expected = std::max(0.0, (1.0 + act(n)) * std::exp(log_bias) - 1.0);
      ASSERT_NEAR(n.est_rows, expected, 1e-9 * (1.0 + expected)) << t.execution_id << " " << n.node_id;
    }
  }
}

TEST(Synthgen, ThreeJoinChainRootQError) {
  auto spec = small_spec(20);
  spec.depth_range = {3, 3};
  spec.bias.clear();
  spec.bias[OperatorGroup::join] = ClassBias{std::log(4.0), 0.0};
  spec.zero_fraction = 0.0;
  const auto corpus = generate(spec);
  std::size_t checked = 0;
  for (const auto& t : corpus.traces) {
    EXPECT_EQ(joins_below(t.root), 3U);
    EXPECT_EQ(t.query_tag, "joins-3");
    if (t.root.est_rows > 0.0) EXPECT_NEAR((1.0 + act(t.root)) / (1.0 + t.root.est_rows), 64.0, 1e-9);
    if (act(t.root) >= 1e5) {
      EXPECT_NEAR(qerror(t.root.est_rows, act(t.root)), 64.0, 0.01);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0U);
}

TEST(Synthgen, TrueRowsSatisfySemanticRules) {
  auto spec = small_spec(120);
  spec.outer_join_fraction = 0.3;
  const auto corpus = generate(spec);
  for (const auto& t : corpus.traces) check_true_rows(t.root);
}

TEST(Synthgen, ZeroFractionProducesZeros) {
  auto spec = small_spec(60);
  spec.zero_fraction = 0.5;
  const auto corpus = generate(spec);
  std::size_t zeros = 0;
  for (const auto& t : corpus.traces) {
    for (const auto& v : iter_nodes(t)) zeros += *v.node->act_rows == 0;
  }
  EXPECT_GT(zeros, 0U);
}

TEST(Synthgen, InvalidGeneratorSettings) {
  auto s = small_spec();
  s.depth_range = {5, 2};
  EXPECT_THROW(validate(s), ConfigError);
  s = small_spec();
  s.zero_fraction = 1.5;
  EXPECT_THROW(validate(s), ConfigError);
  s = small_spec();
  for (auto& [op, w] : s.operator_mix) w = 0.0;
  EXPECT_THROW(validate(s), ConfigError);
  s = small_spec();
  s.operator_mix["HashJoin"] = -1.0;
  EXPECT_THROW(validate(s), ConfigError);
}
