#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace tsdec {

// Row-major [rows x cols] block of per-timestep covariates.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  // Rows [begin, end).
  FeatureMatrix slice(std::size_t begin, std::size_t end) const {
    FeatureMatrix out(end - begin, cols);
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
              data.begin() + static_cast<std::ptrdiff_t>(end * cols), out.data.begin());
    return out;
  }

  void append_rows(const FeatureMatrix& other) {
    data.insert(data.end(), other.data.begin(), other.data.end());
    rows += other.rows;
  }

  bool operator==(const FeatureMatrix&) const = default;
};

}  // namespace tsdec
