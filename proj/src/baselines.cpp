#include "cardcorr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cardcorr/errors.hpp"
#include "cardcorr/quantile.hpp"

namespace cardcorr {

namespace {

const std::string& category(const OperatorSample& sample, std::string_view name) {
  static const std::string unknown(kUnknownCategory);
  const auto it = sample.categorical.find(name);
  return it == sample.categorical.end() ? unknown : it->second;
}

double labeled_act(const OperatorSample& sample) {
  if (!sample.act_rows) throw Error("baseline training sample '" + sample.node_id + "' has no act_rows");
  return static_cast<double>(*sample.act_rows);
}

void require_training(std::span<const OperatorSample> samples) {
  if (samples.empty()) throw EmptyInput("baseline fit on an empty training set");
}

double rows_from_log(double log_rows) { return std::max(0.0, std::expm1(log_rows)); }

}  // namespace

GroupScaleModel group_scale_fit(std::span<const OperatorSample> samples) {
  require_training(samples);
  std::map<std::string, std::vector<double>> factors;
  std::vector<double> all;
  for (const auto& s : samples) {
    const auto f = (1.0 + labeled_act(s)) / (1.0 + s.est_rows);
    factors[category(s, "operator_type")].push_back(f);
    all.push_back(f);
  }
  GroupScaleModel model;
  for (const auto& [group, values] : factors) model.factor_by_group[group] = median(values);
  model.global_factor = median(all);
  return model;
}

double group_scale_predict(const GroupScaleModel& model, const OperatorSample& sample) {
  const auto it = model.factor_by_group.find(category(sample, "operator_type"));
  const auto factor = it == model.factor_by_group.end() ? model.global_factor : it->second;
  return std::max(0.0, (1.0 + sample.est_rows) * factor - 1.0);
}

std::vector<double> pava(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw DimensionMismatch("pava: values and weights differ in length");
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const auto b = blocks.back();
      blocks.pop_back();
      auto& a = blocks.back();
      const auto w = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / w;
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

double StepFunction::operator()(double x) const {
  if (levels.empty()) return x;
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  if (it == breakpoints.begin()) return levels.front();
  return levels[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

StepFunction isotonic_fit_points(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("isotonic fit: x and y differ in length");
  if (x.empty()) throw EmptyInput("isotonic fit on zero points");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  StepFunction fn;
  std::vector<double> means;
  std::vector<double> weights;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < order.size() && x[order[j]] == x[order[i]]) sum += y[order[j++]];
    fn.breakpoints.push_back(x[order[i]]);
    means.push_back(sum / static_cast<double>(j - i));
    weights.push_back(static_cast<double>(j - i));
    i = j;
  }
  fn.levels = pava(means, weights);
  return fn;
}

IsotonicModel isotonic_fit(std::span<const OperatorSample> samples) {
  require_training(samples);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> points;
  std::vector<double> all_x;
  std::vector<double> all_y;
  for (const auto& s : samples) {
    const auto x = std::log1p(s.est_rows);
    const auto y = std::log1p(labeled_act(s));
    auto& [gx, gy] = points[category(s, "operator_type")];
    gx.push_back(x);
    gy.push_back(y);
    all_x.push_back(x);
    all_y.push_back(y);
  }
  IsotonicModel model;
  for (const auto& [group, xy] : points) model.by_group[group] = isotonic_fit_points(xy.first, xy.second);
  model.global = isotonic_fit_points(all_x, all_y);
  return model;
}

double isotonic_predict(const IsotonicModel& model, const OperatorSample& sample) {
  const auto it = model.by_group.find(category(sample, "operator_type"));
  const auto& fn = it == model.by_group.end() ? model.global : it->second;
  return rows_from_log(fn(std::log1p(sample.est_rows)));
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit_line: x and y differ in length");
  if (x.empty()) throw EmptyInput("fit_line on zero points");
  const auto n = static_cast<double>(x.size());
  const auto mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const auto my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.support = x.size();
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::vector<std::string> litecard_keys(const OperatorSample& sample) {
  const auto& op = category(sample, "operator_type");
  const auto& table = category(sample, "table_name");
  const auto& join = category(sample, "join_type");
  return {op + "|" + table + "|" + join, op + "|" + table, op};
}

LiteCardModel litecard_fit(std::span<const OperatorSample> samples, std::size_t min_support) {
  require_training(samples);
  if (min_support < 2) throw ConfigError("litecard min_support must be at least 2");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> points;
  std::vector<double> all_x;
  std::vector<double> all_y;
  for (const auto& s : samples) {
    const auto x = std::log1p(s.est_rows);
    const auto y = std::log1p(labeled_act(s));
    for (const auto& key : litecard_keys(s)) {
      auto& [kx, ky] = points[key];
      kx.push_back(x);
      ky.push_back(y);
    }
    all_x.push_back(x);
    all_y.push_back(y);
  }
  LiteCardModel model;
  model.min_support = min_support;
  for (const auto& [key, xy] : points) {
    if (xy.first.size() >= min_support) model.by_key[key] = fit_line(xy.first, xy.second);
  }
  model.global = fit_line(all_x, all_y);
  return model;
}

double litecard_predict(const LiteCardModel& model, const OperatorSample& sample) {
  const auto x = std::log1p(sample.est_rows);
  const LinearFit* fit = &model.global;
  for (const auto& key : litecard_keys(sample)) {
    if (const auto it = model.by_key.find(key); it != model.by_key.end()) {
      fit = &it->second;
      break;
    }
  }
  return rows_from_log(fit->slope * x + fit->intercept);
}

namespace {

nlohmann::json step_to_json(const StepFunction& fn) {
  return nlohmann::json{{"breakpoints", fn.breakpoints}, {"levels", fn.levels}};
}

StepFunction step_from_json(const nlohmann::json& j) {
  StepFunction fn{j.at("breakpoints").get<std::vector<double>>(), j.at("levels").get<std::vector<double>>()};
  if (fn.breakpoints.size() != fn.levels.size()) throw Error("isotonic breakpoints and levels differ in length");
  if (!std::is_sorted(fn.levels.begin(), fn.levels.end())) throw Error("isotonic levels are not non-decreasing");
  return fn;
}

nlohmann::json line_to_json(const LinearFit& fit) { return nlohmann::json::array({fit.slope, fit.intercept, fit.support}); }

LinearFit line_from_json(const nlohmann::json& j) {
  return LinearFit{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<std::size_t>()};
}

}  // namespace

nlohmann::json group_scale_to_json(const GroupScaleModel& model) {
  return nlohmann::json{{"factor_by_group", model.factor_by_group}, {"global_factor", model.global_factor}};
}

GroupScaleModel group_scale_from_json(const nlohmann::json& j) {
  return GroupScaleModel{j.at("factor_by_group").get<std::map<std::string, double>>(),
                         j.at("global_factor").get<double>()};
}

nlohmann::json isotonic_to_json(const IsotonicModel& model) {
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [group, fn] : model.by_group) groups[group] = step_to_json(fn);
  return nlohmann::json{{"by_group", std::move(groups)}, {"global", step_to_json(model.global)}};
}

IsotonicModel isotonic_from_json(const nlohmann::json& j) {
  IsotonicModel model;
  for (const auto& [group, fn] : j.at("by_group").items()) model.by_group[group] = step_from_json(fn);
  model.global = step_from_json(j.at("global"));
  return model;
}

nlohmann::json litecard_to_json(const LiteCardModel& model) {
  nlohmann::json keys = nlohmann::json::object();
  for (const auto& [key, fit] : model.by_key) keys[key] = line_to_json(fit);
  return nlohmann::json{{"by_key", std::move(keys)}, {"global", line_to_json(model.global)},
                        {"min_support", model.min_support}};
}

LiteCardModel litecard_from_json(const nlohmann::json& j) {
  LiteCardModel model;
  for (const auto& [key, fit] : j.at("by_key").items()) model.by_key[key] = line_from_json(fit);
  model.global = line_from_json(j.at("global"));
  model.min_support = j.at("min_support").get<std::size_t>();
  return model;
}

}  // namespace cardcorr
