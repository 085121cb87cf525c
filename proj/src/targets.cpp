#include "cardcorr/targets.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cardcorr/errors.hpp"
#include "cardcorr/quantile.hpp"

namespace cardcorr {

std::string_view to_string(TargetMode mode) { return mode == TargetMode::correction ? "correction" : "direct"; }

TargetMode target_mode_from_string(std::string_view text) {
  if (text == "correction") return TargetMode::correction;
  if (text == "direct") return TargetMode::direct;
  throw ConfigError("unknown target mode '" + std::string(text) + "'");
}

double make_target(double est_rows, double act_rows, TargetMode mode) {
  if (mode == TargetMode::direct) return std::log1p(act_rows);
  return std::log1p(act_rows) - std::log1p(est_rows);
}

ClipRange fit_clip_range(std::span<const double> train_targets, double iqr_multiplier) {
  if (train_targets.empty()) throw EmptyInput("cannot fit a clip range on zero targets");
  std::vector<double> sorted(train_targets.begin(), train_targets.end());
  std::sort(sorted.begin(), sorted.end());
  const auto q1 = quantile_sorted(sorted, 0.25);
  const auto q3 = quantile_sorted(sorted, 0.75);
  const auto iqr = q3 - q1;
  return {q1 - iqr_multiplier * iqr, q3 + iqr_multiplier * iqr};
}

double clip(double target, const ClipRange& range) { return std::clamp(target, range.low, range.high); }

double invert(double prediction, double est_rows, TargetMode mode, double ceiling) {
  if (std::isnan(prediction)) return est_rows;
  // (1 + est) * e^p - 1 == est * e^p + expm1(p), which keeps small counts exact.
  const double rows = mode == TargetMode::correction ? est_rows * std::exp(prediction) + std::expm1(prediction)
                                                     : std::expm1(prediction);
  if (!(rows > 0.0)) return 0.0;
  return std::min(rows, ceiling);
}

nlohmann::json target_spec_to_json(const TargetSpec& spec) {
  nlohmann::json j{{"mode", std::string(to_string(spec.mode))}, {"iqr_multiplier", spec.iqr_multiplier}};
  j["clip"] = spec.clip ? nlohmann::json::array({spec.clip->low, spec.clip->high}) : nlohmann::json();
  return j;
}

TargetSpec target_spec_from_json(const nlohmann::json& j) {
  TargetSpec spec;
  spec.mode = target_mode_from_string(j.at("mode").get<std::string>());
  spec.iqr_multiplier = j.at("iqr_multiplier").get<double>();
  if (const auto& c = j.at("clip"); !c.is_null()) spec.clip = ClipRange{c.at(0).get<double>(), c.at(1).get<double>()};
  return spec;
}

}  // namespace cardcorr
