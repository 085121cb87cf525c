#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cardcorr {

// Dense row-major matrix of encoded features with named columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::vector<std::string> columns)
      : rows_(rows), columns_(std::move(columns)), data_(rows * columns_.size(), 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols) : FeatureMatrix(rows, unnamed_columns(cols)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

  const std::vector<double>& data() const { return data_; }

  void append_row(std::span<const double> values) {
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  static std::vector<std::string> unnamed_columns(std::size_t cols) {
    std::vector<std::string> names;
    names.reserve(cols);
    for (std::size_t i = 0; i < cols; ++i) names.push_back("f" + std::to_string(i));
    return names;
  }

  std::size_t rows_ = 0;
  std::vector<std::string> columns_;
  std::vector<double> data_;
};

}  // namespace cardcorr
