#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "json.hpp"

namespace cardcorr {

enum class TargetMode { correction, direct };

std::string_view to_string(TargetMode mode);
TargetMode target_mode_from_string(std::string_view text);

struct ClipRange {
  double low = 0.0;
  double high = 0.0;

  bool operator==(const ClipRange&) const = default;
};

struct TargetSpec {
  TargetMode mode = TargetMode::correction;
  std::optional<ClipRange> clip;
  double iqr_multiplier = 1.5;

  bool operator==(const TargetSpec&) const = default;
};

inline constexpr double kDefaultRowCeiling = 1e15;

// correction: ln((1 + act) / (1 + est));  direct: ln(1 + act).
double make_target(double est_rows, double act_rows, TargetMode mode);

// Tukey fence over training targets: [Q1 - m * IQR, Q3 + m * IQR], quartiles by
// linear interpolation. Throws EmptyInput on an empty span.
ClipRange fit_clip_range(std::span<const double> train_targets, double iqr_multiplier = 1.5);

double clip(double target, const ClipRange& range);

// Maps a prediction back to rows: correction -> (1 + est) * exp(pred) - 1,
// direct -> exp(pred) - 1; floored at 0 and capped at `ceiling`.
double invert(double prediction, double est_rows, TargetMode mode, double ceiling = kDefaultRowCeiling);

nlohmann::json target_spec_to_json(const TargetSpec& spec);
TargetSpec target_spec_from_json(const nlohmann::json& j);

}  // namespace cardcorr
