#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cardcorr/trace.hpp"

namespace cardcorr {

// Mean log-underestimation mu and spread sigma for one operator class.
struct ClassBias {
  double mu = 0.0;
  double sigma = 0.0;

  bool operator==(const ClassBias&) const = default;
};

struct TableInfo {
  std::string name;
  double rows = 0.0;
  bool fact = false;  // eligible as the driving (left-most) table

  bool operator==(const TableInfo&) const = default;
};

// Plans are left-deep join chains: a driving scan, one joined leaf per join
// level, and optional HashAgg / Projection / Limit on top.
//
// operator_mix: TableFullScan / IndexRangeScan and HashJoin / IndexJoin are
// relative weights within their role; Selection, Projection, HashAgg and Limit
// are the probabilities (0..1) of each optional operator slot.
struct GenSpec {
  std::size_t n_executions = 263;
  std::pair<std::size_t, std::size_t> depth_range{4, 10};   // join levels per plan
  std::pair<double, double> fanout_range{0.7, 1.4};        // per-join output / left input
  std::map<std::string, double> operator_mix{{"TableFullScan", 0.6}, {"IndexRangeScan", 0.4},
                                             {"HashJoin", 0.7},      {"IndexJoin", 0.3},
                                             {"Selection", 0.8},     {"Projection", 0.9},
                                             {"HashAgg", 0.4},       {"Limit", 0.3}};
  std::pair<double, double> selectivity_range{0.05, 1.0};  // Selection output / input
  std::pair<double, double> range_scan_fraction{1e-3, 0.3};
  std::pair<double, double> agg_ratio_range{1e-4, 0.2};
  double outer_join_fraction = 0.1;
  double join_correlation_sigma = 0.2;
  std::vector<TableInfo> tables;  // empty -> built-in catalog
  double scale_factor = 100.0;    // multiplies every table's row count
  std::map<OperatorGroup, ClassBias> bias;  // missing groups -> unbiased
  double zero_fraction = 0.03;
  std::uint64_t seed = 7;

  bool operator==(const GenSpec&) const = default;
};

// The default: 263 executions averaging about 23 operators, joins
// underestimated by ln 4 per join (sigma 0.3), other operators near-exact.
GenSpec default_gen_spec();

std::vector<TableInfo> default_table_catalog();

// Throws ConfigError on invalid ranges or weights.
void validate(const GenSpec& spec);

// Every node gets true rows from the operator semantics, then
// ln((1 + est) / (1 + act)) = -mu_join * (joins in its subtree, itself included)
//                             - mu_class (non-join classes) + N(0, sigma_class).
TraceCorpus generate(const GenSpec& spec);

nlohmann::json gen_spec_to_json(const GenSpec& spec);

}  // namespace cardcorr
