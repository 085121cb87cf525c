#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cardcorr/feature_matrix.hpp"

namespace cardcorr {

enum class Weighting { uniform, inverse_distance };

std::string_view to_string(Weighting weighting);
Weighting weighting_from_string(std::string_view text);

// Reference-set regressor: "fitting" stores the reference rows and targets and
// nothing else, so swapping in a new reference set changes predictions
// without any optimization step.
struct ReferenceSetModel {
  FeatureMatrix reference_features;
  std::vector<double> reference_targets;
  std::size_t k_neighbors = 8;
  Weighting weighting = Weighting::inverse_distance;

  bool operator==(const ReferenceSetModel&) const = default;
};

inline constexpr double kInverseDistanceEpsilon = 1e-9;

// Throws KExceedsReference when k is 0 or larger than the reference set,
// DimensionMismatch when rows and targets disagree, EmptyInput when empty.
ReferenceSetModel refset_setup(FeatureMatrix X, std::vector<double> y, std::size_t k_neighbors,
                               Weighting weighting = Weighting::inverse_distance);

// Squared Euclidean distance; equal distances resolve to the lower reference
// index. Inverse-distance weights are 1 / (d + 1e-9).
std::vector<double> refset_predict(const ReferenceSetModel& model, const FeatureMatrix& X);

nlohmann::json refset_to_json(const ReferenceSetModel& model);
ReferenceSetModel refset_from_json(const nlohmann::json& j);

}  // namespace cardcorr
