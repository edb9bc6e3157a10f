// Copyright 2026 The morphsurf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace morph {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel voltages of an n_rows x n_cols array, in volts.
///
/// Pixel voltage convention throughout the library is row electrode minus
/// column electrode. Flattening is row-major: index k is pixel (k / cols,
/// k % cols).
class VoltageGrid {
 public:
  VoltageGrid() = default;
  VoltageGrid(std::size_t rows, std::size_t cols, double fill = 0.0);
  explicit VoltageGrid(RowMatrix values);

  static VoltageGrid from_flat(std::size_t rows, std::size_t cols,
                               std::span<const double> flat);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  std::size_t size() const { return rows() * cols(); }

  double& operator()(std::size_t i, std::size_t j) { return values_(i, j); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

  const RowMatrix& matrix() const { return values_; }
  RowMatrix& matrix() { return values_; }

  std::vector<double> flatten() const;
  double max_abs() const;
  bool all_finite() const;

  friend bool operator==(const VoltageGrid& a, const VoltageGrid& b) {
    return a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  RowMatrix values_;
};

// Plain-text CSV: one line per row, comma-separated volts. Lines starting
// with '#' before the first data row are comments.
VoltageGrid read_grid_csv(const std::string& path);
VoltageGrid parse_grid_csv(const std::string& text);
void write_grid_csv(const std::string& path, const VoltageGrid& grid,
                    const std::string& comment = {});
std::string format_grid_csv(const VoltageGrid& grid,
                            const std::string& comment = {});

}  // namespace morph
