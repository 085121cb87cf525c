#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cardcorr/dataset.hpp"

namespace cardcorr {

// Median training factor (1 + act) / (1 + est) per operator type.
struct GroupScaleModel {
  std::map<std::string, double> factor_by_group;
  double global_factor = 1.0;

  bool operator==(const GroupScaleModel&) const = default;
};

GroupScaleModel group_scale_fit(std::span<const OperatorSample> samples);
double group_scale_predict(const GroupScaleModel& model, const OperatorSample& sample);

// Weighted pool-adjacent-violators on values already ordered by x. Returns the
// non-decreasing least-squares fit, one level per input value.
std::vector<double> pava(std::span<const double> values, std::span<const double> weights);

// Non-decreasing step function: level[i] applies on [breakpoints[i], breakpoints[i+1]).
struct StepFunction {
  std::vector<double> breakpoints;
  std::vector<double> levels;

  double operator()(double x) const;
  bool operator==(const StepFunction&) const = default;
};

// Sorts by x, averages y over tied x (weighted by multiplicity), then runs PAVA.
StepFunction isotonic_fit_points(std::span<const double> x, std::span<const double> y);

// Isotonic map from ln(1 + est) to ln(1 + act), per operator type plus a
// global fallback.
struct IsotonicModel {
  std::map<std::string, StepFunction> by_group;
  StepFunction global;

  bool operator==(const IsotonicModel&) const = default;
};

IsotonicModel isotonic_fit(std::span<const OperatorSample> samples);
double isotonic_predict(const IsotonicModel& model, const OperatorSample& sample);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t support = 0;

  bool operator==(const LinearFit&) const = default;
};

// Ordinary least squares of y on x. A constant x yields slope 0.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Pattern-keyed local correction: ln(1 + act) ~ a * ln(1 + est) + b per key,
// keys tried from (operator, table, join) down to (operator) and then global.
struct LiteCardModel {
  std::map<std::string, LinearFit> by_key;
  LinearFit global;
  std::size_t min_support = 5;

  bool operator==(const LiteCardModel&) const = default;
};

// Hierarchy of lookup keys for a sample, most specific first.
std::vector<std::string> litecard_keys(const OperatorSample& sample);

LiteCardModel litecard_fit(std::span<const OperatorSample> samples, std::size_t min_support = 5);
double litecard_predict(const LiteCardModel& model, const OperatorSample& sample);

nlohmann::json group_scale_to_json(const GroupScaleModel& model);
GroupScaleModel group_scale_from_json(const nlohmann::json& j);
nlohmann::json isotonic_to_json(const IsotonicModel& model);
IsotonicModel isotonic_from_json(const nlohmann::json& j);
nlohmann::json litecard_to_json(const LiteCardModel& model);
LiteCardModel litecard_from_json(const nlohmann::json& j);

}  // namespace cardcorr
