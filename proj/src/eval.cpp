#include "cardcorr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "cardcorr/corpus_io.hpp"
#include "cardcorr/errors.hpp"
#include "cardcorr/quantile.hpp"

namespace cardcorr {

using nlohmann::json;

double qerror(double est, double act) {
  const auto e = std::max(est, 1.0);
  const auto a = std::max(act, 1.0);
  return std::max(a / e, e / a);
}

QErrorStats stats(std::span<const double> qerrors) {
  if (qerrors.empty()) throw EmptyInput("Q-error statistics over zero values");
  std::vector<double> sorted(qerrors.begin(), qerrors.end());
  std::sort(sorted.begin(), sorted.end());
  QErrorStats s;
  s.n = sorted.size();
  s.median = quantile_sorted(sorted, 0.5);
  s.p90 = quantile_sorted(sorted, 0.9);
  s.p99 = quantile_sorted(sorted, 0.99);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  return s;
}

Band band_of(double q) {
  if (q <= 2.0) return Band::excellent;
  if (q <= 5.0) return Band::good;
  if (q <= 10.0) return Band::fair;
  if (q <= 100.0) return Band::poor;
  return Band::terrible;
}

BandDistribution bands(std::span<const double> qerrors) {
  if (qerrors.empty()) throw EmptyInput("band distribution over zero values");
  std::array<std::size_t, 5> counts{};
  for (const auto q : qerrors) ++counts[static_cast<std::size_t>(band_of(q))];
  BandDistribution d;
  d.n = qerrors.size();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    d.shares[i] = static_cast<double>(counts[i]) / static_cast<double>(d.n);
  }
  return d;
}

std::vector<std::pair<double, double>> cdf(std::span<const double> qerrors) {
  std::vector<double> sorted(qerrors.begin(), qerrors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
  }
  return out;
}

CorpusValues native_values(std::span<const PlanTrace> traces) {
  CorpusValues out;
  for (const auto& t : traces) {
    auto& values = out[t.execution_id];
    for (const auto& v : iter_nodes(t)) values[v.node->node_id] = v.node->est_rows;
  }
  return out;
}

CorpusValues corrected_values(std::span<const CorrectedTrace> corrected) {
  CorpusValues out;
  for (const auto& c : corrected) out[c.trace.execution_id] = c.corrected_rows;
  return out;
}

namespace {

double value_for(const CorpusValues& values, const PlanTrace& trace, const PlanNode& node) {
  const auto t = values.find(trace.execution_id);
  if (t == values.end()) throw MissingPrediction(trace.execution_id + "/" + node.node_id);
  const auto n = t->second.find(node.node_id);
  if (n == t->second.end()) throw MissingPrediction(trace.execution_id + "/" + node.node_id);
  return n->second;
}

double node_qerror(const CorpusValues& values, const PlanTrace& trace, const PlanNode& node) {
  return qerror(value_for(values, trace, node), static_cast<double>(*node.act_rows));
}

}  // namespace

std::vector<double> node_qerrors(std::span<const PlanTrace> traces, const CorpusValues& values) {
  std::vector<double> out;
  for (const auto& t : traces) {
    for (const auto& v : iter_nodes(t)) {
      if (v.node->act_rows) out.push_back(node_qerror(values, t, *v.node));
    }
  }
  return out;
}

std::map<OperatorGroup, QErrorStats> per_group_stats(std::span<const PlanTrace> traces, const CorpusValues& values,
                                                     const OperatorGrouping& grouping) {
  std::map<OperatorGroup, std::vector<double>> groups;
  for (const auto& t : traces) {
    for (const auto& v : iter_nodes(t)) {
      if (v.node->act_rows) groups[grouping.classify(v.node->operator_type)].push_back(node_qerror(values, t, *v.node));
    }
  }
  std::map<OperatorGroup, QErrorStats> out;
  for (const auto& [group, qs] : groups) out[group] = stats(qs);
  return out;
}

QErrorStats root_node_stats(std::span<const PlanTrace> traces, const CorpusValues& values) {
  std::vector<double> qs;
  for (const auto& t : traces) {
    if (t.root.act_rows) qs.push_back(node_qerror(values, t, t.root));
  }
  return stats(qs);
}

WorstCaseStats query_worst_case(std::span<const PlanTrace> traces, const CorpusValues& values,
                                const OperatorGrouping& grouping) {
  std::vector<double> max_op;
  std::vector<double> max_join;
  for (const auto& t : traces) {
    std::optional<double> worst;
    std::optional<double> worst_join;
    for (const auto& v : iter_nodes(t)) {
      if (!v.node->act_rows) continue;
      const auto q = node_qerror(values, t, *v.node);
      worst = std::max(worst.value_or(q), q);
      if (grouping.classify(v.node->operator_type) == OperatorGroup::join) {
        worst_join = std::max(worst_join.value_or(q), q);
      }
    }
    if (worst) max_op.push_back(*worst);
    if (worst_join) max_join.push_back(*worst_join);
  }
  WorstCaseStats out;
  out.max_operator = stats(max_op);
  if (!max_join.empty()) out.max_join = stats(max_join);
  return out;
}

Improvement improvement(const QErrorStats& native, const QErrorStats& model) {
  return Improvement{native.median / model.median, native.mean / model.mean, native.p90 / model.p90,
                     native.p99 / model.p99};
}

std::string format_factor(double factor) { return fmt::format("{:.1f}x", factor); }

std::optional<double> TimingReport::plan_overhead_seconds(std::size_t nodes) const {
  if (!per_node_latency_seconds) return std::nullopt;
  return static_cast<double>(nodes) * *per_node_latency_seconds;
}

TimingReport timing_report(double setup_seconds, double inference_seconds, std::size_t samples) {
  TimingReport t;
  t.setup_seconds = setup_seconds;
  t.inference_seconds = inference_seconds;
  t.samples = samples;
  if (samples > 0) {
    t.per_node_latency_seconds = inference_seconds / static_cast<double>(samples);
    if (inference_seconds > 0.0) t.samples_per_second = static_cast<double>(samples) / inference_seconds;
  }
  return t;
}

namespace {

ModelEvaluation evaluate_values(std::string name, std::span<const PlanTrace> traces, const CorpusValues& values,
                                const OperatorGrouping& grouping) {
  ModelEvaluation m;
  m.name = std::move(name);
  const auto qs = node_qerrors(traces, values);
  m.overall = stats(qs);
  m.band_distribution = bands(qs);
  m.cdf_points = cdf(qs);
  m.per_group = per_group_stats(traces, values, grouping);
  m.root = root_node_stats(traces, values);
  m.worst_case = query_worst_case(traces, values, grouping);
  return m;
}

}  // namespace

EvalReport evaluate(std::string split, std::span<const PlanTrace> traces, std::span<const ModelRun> runs,
                    const OperatorGrouping& grouping) {
  EvalReport report;
  report.split = std::move(split);
  report.executions = traces.size();
  std::size_t nodes = 0;
  for (const auto& t : traces) nodes += count_nodes(t.root);
  report.average_plan_nodes = traces.empty() ? 0.0 : static_cast<double>(nodes) / static_cast<double>(traces.size());

  auto native = evaluate_values("native", traces, native_values(traces), grouping);
  report.samples = native.overall.n;
  report.models.push_back(std::move(native));
  for (const auto& run : runs) {
    auto m = evaluate_values(run.name, traces, run.values, grouping);
    m.target_mode = run.target_mode;
    m.timing = run.timing;
    report.models.push_back(std::move(m));
  }
  for (auto& m : report.models) m.improvement_vs_native = improvement(report.models.front().overall, m.overall);
  return report;
}

json stats_to_json(const QErrorStats& s) {
  return json{{"median", s.median}, {"mean", s.mean}, {"p90", s.p90}, {"p99", s.p99}, {"n", s.n}};
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(); }

json timing_to_json(const TimingReport& t, double plan_nodes) {
  const auto overhead = t.per_node_latency_seconds ? std::optional<double>(*t.per_node_latency_seconds * plan_nodes)
                                                   : std::nullopt;
  return json{{"setup_seconds", t.setup_seconds},
              {"inference_seconds", t.inference_seconds},
              {"samples", t.samples},
              {"samples_per_second", optional_number(t.samples_per_second)},
              {"per_node_latency_seconds", optional_number(t.per_node_latency_seconds)},
              {"plan_overhead_seconds", optional_number(overhead)}};
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json models = json::array();
  for (const auto& m : report.models) {
    json bands_json = json::object();
    for (std::size_t i = 0; i < kBandNames.size(); ++i) bands_json[std::string(kBandNames[i])] = m.band_distribution.shares[i];
    json groups = json::object();
    for (const auto& [g, s] : m.per_group) groups[std::string(to_string(g))] = stats_to_json(s);
    json worst{{"max_operator", stats_to_json(m.worst_case.max_operator)},
               {"max_join", m.worst_case.max_join ? stats_to_json(*m.worst_case.max_join) : json()}};
    const auto& imp = m.improvement_vs_native;
    models.push_back(json{
        {"name", m.name},
        {"target_mode", m.target_mode ? json(*m.target_mode) : json()},
        {"qerror", stats_to_json(m.overall)},
        {"bands", std::move(bands_json)},
        {"per_group", std::move(groups)},
        {"root", stats_to_json(m.root)},
        {"worst_case", std::move(worst)},
        {"improvement", json{{"median", imp.median}, {"mean", imp.mean}, {"p90", imp.p90}, {"p99", imp.p99}}},
        {"timing", m.timing ? timing_to_json(*m.timing, report.average_plan_nodes) : json()}});
  }
  return json{{"split", report.split},
              {"executions", report.executions},
              {"samples", report.samples},
              {"average_plan_nodes", report.average_plan_nodes},
              {"models", std::move(models)}};
}

namespace {

std::string num(const json& v) {
  if (v.is_null()) return "";
  return fmt::format("{:.6g}", v.get<double>());
}

std::string stats_row(const json& s) {
  return fmt::format("{},{},{},{},{}", num(s.at("median")), num(s.at("mean")), num(s.at("p90")), num(s.at("p99")),
                     s.at("n").get<std::size_t>());
}

// Every table as (file name, CSV text).
std::vector<std::pair<std::string, std::string>> csv_tables(const json& report) {
  std::string t1 = "model,median,mean,p90,p99,n\n";
  std::string t2 = "model,excellent,good,fair,poor,terrible\n";
  std::string t4 = "model,median,mean,p90,p99\n";
  std::string t5 = "model,group,n,p90,p99\n";
  std::string t6 = "model,median,mean,p90,p99,n\n";
  std::string t7 = "model,metric,median,mean,p90,p99,n\n";
  std::string t8 = "model,setup_seconds,inference_seconds,samples,samples_per_second,plan_overhead_seconds\n";
  std::string t9 = "model,target_mode,median,mean,p90,p99,n\n";
  for (const auto& m : report.at("models")) {
    const auto name = m.at("name").get<std::string>();
    t1 += name + "," + stats_row(m.at("qerror")) + "\n";
    const auto& b = m.at("bands");
    t2 += name;
    for (const auto band : kBandNames) t2 += "," + num(b.at(std::string(band)));
    t2 += "\n";
    const auto& imp = m.at("improvement");
    t4 += fmt::format("{},{},{},{},{}\n", name, format_factor(imp.at("median").get<double>()),
                      format_factor(imp.at("mean").get<double>()), format_factor(imp.at("p90").get<double>()),
                      format_factor(imp.at("p99").get<double>()));
    for (const auto group : {OperatorGroup::join, OperatorGroup::scan, OperatorGroup::filter,
                             OperatorGroup::aggregation, OperatorGroup::other}) {
      const auto key = std::string(to_string(group));
      if (!m.at("per_group").contains(key)) continue;
      const auto& s = m.at("per_group").at(key);
      t5 += fmt::format("{},{},{},{},{}\n", name, key, s.at("n").get<std::size_t>(), num(s.at("p90")),
                        num(s.at("p99")));
    }
    t6 += name + "," + stats_row(m.at("root")) + "\n";
    t7 += name + ",max_operator," + stats_row(m.at("worst_case").at("max_operator")) + "\n";
    if (!m.at("worst_case").at("max_join").is_null()) {
      t7 += name + ",max_join," + stats_row(m.at("worst_case").at("max_join")) + "\n";
    }
    if (const auto& t = m.at("timing"); !t.is_null()) {
      t8 += fmt::format("{},{},{},{},{},{}\n", name, num(t.at("setup_seconds")), num(t.at("inference_seconds")),
                        t.at("samples").get<std::size_t>(), num(t.at("samples_per_second")),
                        num(t.at("plan_overhead_seconds")));
    }
    if (const auto& mode = m.at("target_mode"); !mode.is_null()) {
      t9 += name + "," + mode.get<std::string>() + "," + stats_row(m.at("qerror")) + "\n";
    }
  }
  return {{"qerror_stats.csv", t1}, {"bands.csv", t2},      {"improvement.csv", t4}, {"per_operator.csv", t5},
          {"root_node.csv", t6},    {"worst_case.csv", t7}, {"timing.csv", t8},      {"ablation.csv", t9}};
}

}  // namespace

void write_report(const std::filesystem::path& directory, const EvalReport& report) {
  std::filesystem::create_directories(directory);
  const auto j = report_to_json(report);
  write_text_file(directory / "report.json", j.dump(2) + "\n");
  for (const auto& [file, text] : csv_tables(j)) write_text_file(directory / file, text);
  std::string cdf_csv = "model,qerror,fraction\n";
  for (const auto& m : report.models) {
    for (const auto& [q, f] : m.cdf_points) cdf_csv += fmt::format("{},{:.17g},{:.17g}\n", m.name, q, f);
  }
  write_text_file(directory / "cdf.csv", cdf_csv);
}

std::string render_report(const nlohmann::json& report) {
  std::string out = fmt::format("split: {}  executions: {}  operator samples: {}\n",
                                report.at("split").get<std::string>(), report.at("executions").get<std::size_t>(),
                                report.at("samples").get<std::size_t>());
  const auto line = [&out](std::string_view title) { out += fmt::format("\n== {} ==\n", title); };
  line("Q-error");
  out += fmt::format("{:<24}{:>12}{:>12}{:>12}{:>14}\n", "model", "median", "mean", "p90", "p99");
  for (const auto& m : report.at("models")) {
    const auto& s = m.at("qerror");
    out += fmt::format("{:<24}{:>12.4f}{:>12.2f}{:>12.2f}{:>14.2f}\n", m.at("name").get<std::string>(),
                       s.at("median").get<double>(), s.at("mean").get<double>(), s.at("p90").get<double>(),
                       s.at("p99").get<double>());
  }
  line("Quality bands (share)");
  out += fmt::format("{:<24}{:>11}{:>11}{:>11}{:>11}{:>11}\n", "model", "<=2", "(2,5]", "(5,10]", "(10,100]", ">100");
  for (const auto& m : report.at("models")) {
    out += fmt::format("{:<24}", m.at("name").get<std::string>());
    for (const auto band : kBandNames) out += fmt::format("{:>11.3f}", m.at("bands").at(std::string(band)).get<double>());
    out += "\n";
  }
  line("Improvement over native");
  out += fmt::format("{:<24}{:>10}{:>10}{:>10}{:>10}\n", "model", "median", "mean", "p90", "p99");
  for (const auto& m : report.at("models")) {
    const auto& i = m.at("improvement");
    out += fmt::format("{:<24}{:>10}{:>10}{:>10}{:>10}\n", m.at("name").get<std::string>(),
                       format_factor(i.at("median").get<double>()), format_factor(i.at("mean").get<double>()),
                       format_factor(i.at("p90").get<double>()), format_factor(i.at("p99").get<double>()));
  }
  line("Per-operator P90 / P99");
  for (const auto& m : report.at("models")) {
    for (const auto& [group, s] : m.at("per_group").items()) {
      out += fmt::format("{:<24}{:<14}{:>8}{:>12.2f}{:>14.2f}\n", m.at("name").get<std::string>(), group,
                         s.at("n").get<std::size_t>(), s.at("p90").get<double>(), s.at("p99").get<double>());
    }
  }
  line("Root node / query worst case (P90)");
  for (const auto& m : report.at("models")) {
    const auto& w = m.at("worst_case");
    out += fmt::format("{:<24} root {:>10.2f}  max-op {:>10.2f}  max-join {:>10}\n", m.at("name").get<std::string>(),
                       m.at("root").at("p90").get<double>(), w.at("max_operator").at("p90").get<double>(),
                       w.at("max_join").is_null() ? std::string("-")
                                                  : fmt::format("{:.2f}", w.at("max_join").at("p90").get<double>()));
  }
  line("Timing");
  for (const auto& m : report.at("models")) {
    const auto& t = m.at("timing");
    if (t.is_null()) continue;
    out += fmt::format("{:<24} setup {:.4f}s  inference {:.4f}s  {} samples/s\n", m.at("name").get<std::string>(),
                       t.at("setup_seconds").get<double>(), t.at("inference_seconds").get<double>(),
                       t.at("samples_per_second").is_null()
                           ? std::string("n/a")
                           : fmt::format("{:.0f}", t.at("samples_per_second").get<double>()));
  }
  return out;
}

}  // namespace cardcorr
