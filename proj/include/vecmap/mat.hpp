// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <vector>

namespace vecmap {

// Minimal dense row-major matrix of doubles.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<size_t>(r) * cols;
  }
};

}  // namespace vecmap
