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

#include "morphsurf/voltage_grid.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <cmath>
#include <sstream>

namespace morph {

VoltageGrid::VoltageGrid(std::size_t rows, std::size_t cols, double fill)
    : values_(RowMatrix::Constant(static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(cols), fill)) {}

VoltageGrid::VoltageGrid(RowMatrix values) : values_(std::move(values)) {}

VoltageGrid VoltageGrid::from_flat(std::size_t rows, std::size_t cols,
                                   std::span<const double> flat) {
  if (flat.size() != rows * cols) {
    throw Error(Errc::kDimensionMismatch,
                "flat vector of " + std::to_string(flat.size()) +
                    " values for a " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " grid");
  }
  VoltageGrid g(rows, cols);
  for (std::size_t k = 0; k < flat.size(); ++k) g(k / cols, k % cols) = flat[k];
  return g;
}

std::vector<double> VoltageGrid::flatten() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) out[i * cols() + j] = (*this)(i, j);
  return out;
}

double VoltageGrid::max_abs() const {
  return size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
}

bool VoltageGrid::all_finite() const { return values_.allFinite(); }

VoltageGrid parse_grid_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (!rows.empty()) {
        throw Error(Errc::kFormatError,
                    "line " + std::to_string(lineno) + ": comment after data");
      }
      continue;
    }
    std::vector<double> row;
    std::size_t field = 0;
    for (auto tok : text::split(t, ',')) {
      ++field;
      double v = 0.0;
      if (!text::parse_double(tok, v) || !std::isfinite(v)) {
        throw Error(Errc::kFormatError, "line " + std::to_string(lineno) +
                                            ", field " + std::to_string(field) +
                                            ": not a finite number");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::kFormatError, "line " + std::to_string(lineno) +
                                          ": expected " +
                                          std::to_string(rows.front().size()) +
                                          " fields, got " +
                                          std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::kFormatError, "no grid rows");
  VoltageGrid g(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) g(i, j) = rows[i][j];
  return g;
}

VoltageGrid read_grid_csv(const std::string& path) {
  return parse_grid_csv(text::read_file(path));
}

std::string format_grid_csv(const VoltageGrid& grid, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (j) out += ',';
      out += text::format_exact(grid(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_grid_csv(const std::string& path, const VoltageGrid& grid,
                    const std::string& comment) {
  text::write_file_atomic(path, format_grid_csv(grid, comment));
}

}  // namespace morph
