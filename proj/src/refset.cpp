#include "cardcorr/refset.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "cardcorr/errors.hpp"

namespace cardcorr {

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::uniform ? "uniform" : "inverse_distance";
}

Weighting weighting_from_string(std::string_view text) {
  if (text == "uniform") return Weighting::uniform;
  if (text == "inverse_distance") return Weighting::inverse_distance;
  throw ConfigError("unknown weighting '" + std::string(text) + "'");
}

ReferenceSetModel refset_setup(FeatureMatrix X, std::vector<double> y, std::size_t k_neighbors, Weighting weighting) {
  if (X.rows() != y.size()) throw DimensionMismatch("reference rows and targets differ in length");
  if (y.empty()) throw EmptyInput("empty reference set");
  if (k_neighbors == 0 || k_neighbors > y.size()) {
    throw KExceedsReference("k = " + std::to_string(k_neighbors) + " with " + std::to_string(y.size()) +
                            " reference rows");
  }
  return ReferenceSetModel{std::move(X), std::move(y), k_neighbors, weighting};
}

std::vector<double> refset_predict(const ReferenceSetModel& model, const FeatureMatrix& X) {
  const auto& ref = model.reference_features;
  if (X.rows() > 0 && X.cols() != ref.cols()) {
    throw DimensionMismatch("reference set has " + std::to_string(ref.cols()) + " features, query has " +
                            std::to_string(X.cols()));
  }
  const auto n = ref.rows();
  const auto k = std::min(model.k_neighbors, n);
  std::vector<std::pair<double, std::size_t>> dist(n);
  std::vector<double> out(X.rows());
  for (std::size_t q = 0; q < X.rows(); ++q) {
    const auto row = X.row(q);
    for (std::size_t r = 0; r < n; ++r) {
      const auto other = ref.row(r);
      double d = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        const auto diff = row[c] - other[c];
        d += diff * diff;
      }
      dist[r] = {d, r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto w = model.weighting == Weighting::uniform ? 1.0 : 1.0 / (dist[i].first + kInverseDistanceEpsilon);
      num += w * model.reference_targets[dist[i].second];
      den += w;
    }
    out[q] = num / den;
  }
  return out;
}

nlohmann::json refset_to_json(const ReferenceSetModel& model) {
  const auto& ref = model.reference_features;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < ref.rows(); ++r) {
    const auto row = ref.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return nlohmann::json{{"k_neighbors", model.k_neighbors},
                        {"weighting", std::string(to_string(model.weighting))},
                        {"columns", ref.columns()},
                        {"features", std::move(rows)},
                        {"targets", model.reference_targets}};
}

ReferenceSetModel refset_from_json(const nlohmann::json& j) {
  const auto columns = j.at("columns").get<std::vector<std::string>>();
  FeatureMatrix X(0, columns);
  for (const auto& row : j.at("features")) {
    const auto values = row.get<std::vector<double>>();
    if (values.size() != columns.size()) throw DimensionMismatch("reference row width does not match columns");
    X.append_row(values);
  }
  return refset_setup(std::move(X), j.at("targets").get<std::vector<double>>(), j.at("k_neighbors").get<std::size_t>(),
                      weighting_from_string(j.at("weighting").get<std::string>()));
}

}  // namespace cardcorr
