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

#include "morphsurf/dataset.hpp"
#include "morphsurf/mechanics.hpp"
#include "morphsurf/mlp.hpp"
#include "morphsurf/pointcloud.hpp"
#include "morphsurf/voltage_grid.hpp"

#include <vector>

namespace morph {

// Clamps to [-1, 1] V and, when snap is set, rounds to the 0.05 V lattice.
VoltageGrid to_command(const std::vector<double>& raw, std::size_t rows, std::size_t cols,
                       bool snap = true);

// Points (x, y, value) of a displacement vector laid out on the n x n
// resampling nodes of the plate.
PointCloud surface_cloud(const PlateSolver& solver, std::size_t n,
                         const std::vector<double>& values);

// R^2 of one surface: 1 - SS_res / SS_tot over its nodes.
double surface_r2(const std::vector<double>& achieved, const std::vector<double>& target);

struct ClosedLoopResult {
  std::vector<double> raw;  // network output before clamping
  VoltageGrid command;
  std::vector<double> achieved;
  double r2 = 0.0;
  double height_range = 0.0;  // max - min of the target
  SurfaceErrorReport error;   // achieved - target
};

// Inverse network -> command -> simulator.
ClosedLoopResult closed_loop(const MlpModel& inverse, const PlateSolver& solver,
                             const SimConfig& sim, DisplacementMode mode,
                             const std::vector<double>& target, bool snap = true);

}  // namespace morph
