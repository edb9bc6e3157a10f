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

#include "morphsurf/voltage_grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace morph {

// Plain-text heatmaps. The colour scale is symmetric about zero with
// half-range M = range or max|v|; M = 0 maps every cell to mid-grey/white.
// Each cell becomes a scale x scale block.
//
// P2: level = round(255 * (v + M) / (2M)), clamped to [0, 255].
std::string format_pgm(const RowMatrix& values, std::size_t scale = 1,
                       std::optional<double> range = std::nullopt);
// P3: diverging blue (-M) through white (0) to red (+M).
std::string format_ppm(const RowMatrix& values, std::size_t scale = 1,
                       std::optional<double> range = std::nullopt);

struct ReportFile {
  std::string name;
  std::string contents;
};

// Images for a grid and, when a target is given, for the target and the
// signed error grid - target, plus summary.txt. Grid and target share one
// colour range; the error images are scaled to their own max.
std::vector<ReportFile> render_report(const VoltageGrid& grid, const VoltageGrid* target,
                                      std::size_t scale = 16);

}  // namespace morph
