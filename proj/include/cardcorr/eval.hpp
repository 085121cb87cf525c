#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cardcorr/policy.hpp"
#include "cardcorr/trace.hpp"

namespace cardcorr {

// max(a'/e', e'/a') with both sides floored at 1.
double qerror(double est, double act);

struct QErrorStats {
  double median = 1.0;
  double mean = 1.0;
  double p90 = 1.0;
  double p99 = 1.0;
  std::size_t n = 0;
};

// Percentiles use type-7 interpolation. Throws EmptyInput.
QErrorStats stats(std::span<const double> qerrors);

enum class Band { excellent, good, fair, poor, terrible };

inline constexpr std::array<std::string_view, 5> kBandNames = {"excellent", "good", "fair", "poor", "terrible"};

// (<= 2], (2, 5], (5, 10], (10, 100], (100, inf).
Band band_of(double q);

struct BandDistribution {
  std::array<double, 5> shares{};
  std::size_t n = 0;

  double share(Band band) const { return shares[static_cast<std::size_t>(band)]; }
};

BandDistribution bands(std::span<const double> qerrors);

// Sorted (q, rank / n) pairs with rank starting at 1.
std::vector<std::pair<double, double>> cdf(std::span<const double> qerrors);

// Corrected rows per execution_id, then per node_id.
using CorpusValues = std::map<std::string, NodeValues, std::less<>>;

CorpusValues native_values(std::span<const PlanTrace> traces);
CorpusValues corrected_values(std::span<const CorrectedTrace> corrected);

// One Q-error per labeled node, in trace order then pre-order.
std::vector<double> node_qerrors(std::span<const PlanTrace> traces, const CorpusValues& values);

// Empty groups are omitted.
std::map<OperatorGroup, QErrorStats> per_group_stats(std::span<const PlanTrace> traces, const CorpusValues& values,
                                                     const OperatorGrouping& grouping = {});

QErrorStats root_node_stats(std::span<const PlanTrace> traces, const CorpusValues& values);

struct WorstCaseStats {
  QErrorStats max_operator;
  std::optional<QErrorStats> max_join;  // absent when no execution has a join
};

// Per execution maximum over all nodes and over join nodes; executions
// without joins are left out of the join metric.
WorstCaseStats query_worst_case(std::span<const PlanTrace> traces, const CorpusValues& values,
                                const OperatorGrouping& grouping = {});

struct Improvement {
  double median = 1.0;
  double mean = 1.0;
  double p90 = 1.0;
  double p99 = 1.0;
};

// Elementwise native / model.
Improvement improvement(const QErrorStats& native, const QErrorStats& model);

// One decimal followed by "x", e.g. "22.9x".
std::string format_factor(double factor);

struct TimingReport {
  double setup_seconds = 0.0;
  double inference_seconds = 0.0;
  std::size_t samples = 0;
  std::optional<double> samples_per_second;
  std::optional<double> per_node_latency_seconds;

  // nodes * per-node latency; nullopt when latency is unknown.
  std::optional<double> plan_overhead_seconds(std::size_t nodes) const;
};

TimingReport timing_report(double setup_seconds, double inference_seconds, std::size_t samples);

struct ModelEvaluation {
  std::string name;
  std::optional<std::string> target_mode;
  QErrorStats overall;
  BandDistribution band_distribution;
  std::vector<std::pair<double, double>> cdf_points;
  std::map<OperatorGroup, QErrorStats> per_group;
  QErrorStats root;
  WorstCaseStats worst_case;
  Improvement improvement_vs_native;
  std::optional<TimingReport> timing;
};

struct EvalReport {
  std::string split;
  std::size_t executions = 0;
  std::size_t samples = 0;
  double average_plan_nodes = 0.0;
  std::vector<ModelEvaluation> models;  // models[0] is the native estimate
};

struct ModelRun {
  std::string name;
  CorpusValues values;
  std::optional<std::string> target_mode;
  std::optional<TimingReport> timing;
};

// Evaluates every labeled node of `traces` for the native estimates and each
// run; nothing is filtered out.
EvalReport evaluate(std::string split, std::span<const PlanTrace> traces, std::span<const ModelRun> runs,
                    const OperatorGrouping& grouping = {});

nlohmann::json stats_to_json(const QErrorStats& s);
nlohmann::json report_to_json(const EvalReport& report);

// report.json plus one CSV per table and cdf.csv.
void write_report(const std::filesystem::path& directory, const EvalReport& report);

// Plain-text rendering of the report tables.
std::string render_report(const nlohmann::json& report);

}  // namespace cardcorr
