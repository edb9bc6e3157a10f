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

#include "morphsurf/control.hpp"

#include "morphsurf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace morph {

VoltageGrid to_command(const std::vector<double>& raw, std::size_t rows, std::size_t cols,
                       bool snap) {
  if (raw.size() != rows * cols) {
    throw Error(Errc::kDimensionMismatch, "expected " + std::to_string(rows * cols) +
                                              " voltages, got " + std::to_string(raw.size()));
  }
  std::vector<double> v(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (!std::isfinite(raw[k])) throw Error(Errc::kInvalidArgument, "non-finite voltage");
    v[k] = std::clamp(raw[k], -1.0, 1.0);
    if (snap) v[k] = std::round(v[k] * 20.0) / 20.0 + 0.0;  // +0.0 drops negative zero
  }
  return VoltageGrid::from_flat(rows, cols, v);
}

PointCloud surface_cloud(const PlateSolver& solver, std::size_t n,
                         const std::vector<double>& values) {
  const VoltageGrid zero(solver.config().pixels_y, solver.config().pixels_x);
  const Heightfield nodes = sample_nodes(solver.solve(zero, false), n);
  if (values.size() != nodes.size()) {
    throw Error(Errc::kDimensionMismatch, "surface has " + std::to_string(values.size()) +
                                              " values, expected " + std::to_string(nodes.size()));
  }
  PointCloud c;
  c.points.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) c.points.emplace_back(nodes.x[k], nodes.y[k], values[k]);
  return c;
}

double surface_r2(const std::vector<double>& achieved, const std::vector<double>& target) {
  if (achieved.size() != target.size() || target.empty()) {
    throw Error(Errc::kDimensionMismatch, "surface sizes differ");
  }
  RowMatrix a(target.size(), 1), t(target.size(), 1);
  for (std::size_t k = 0; k < target.size(); ++k) {
    a(k, 0) = achieved[k];
    t(k, 0) = target[k];
  }
  return r2_score(a, t);
}

ClosedLoopResult closed_loop(const MlpModel& inverse, const PlateSolver& solver,
                             const SimConfig& sim, DisplacementMode mode,
                             const std::vector<double>& target, bool snap) {
  ClosedLoopResult r;
  r.raw = predict(inverse, target);
  r.command = to_command(r.raw, solver.config().pixels_y, solver.config().pixels_x, snap);
  r.achieved = simulate_surface(solver, sim, mode, r.command);
  r.r2 = surface_r2(r.achieved, target);
  const auto [lo, hi] = std::minmax_element(target.begin(), target.end());
  r.height_range = *hi - *lo;
  const PointCloud a = surface_cloud(solver, sim.sample_n, r.achieved);
  const PointCloud t = surface_cloud(solver, sim.sample_n, target);
  r.error = surface_error(a.points, t.points);
  return r;
}

}  // namespace morph
