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

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace morph {

struct StripConfig {
  double length = 54.0;        // mm
  double beta = 6.06e-4;       // strain per volt; ~0.0037/mm at 1 V
  double h_sub = 0.090;        // mm
  double h_ppy = 0.012;        // mm
  double modulus_ratio = 1.0;  // E_sub / E_ppy

  void validate() const;
};

// Bilayer curvature (1/mm) from the mismatch strain beta * v.
double strip_curvature(double v, const StripConfig& cfg);

struct TipPath {
  std::vector<std::array<double, 2>> tips;  // (x, z) in mm
  double trajectory_length = 0.0;
};
TipPath strip_tip_path(const std::vector<double>& v_ramp, const StripConfig& cfg);

struct PlateConfig {
  std::size_t pixels_x = 6;     // along x (voltage-grid columns)
  std::size_t pixels_y = 6;     // along y (voltage-grid rows)
  double pixel_pitch = 9.0;     // mm
  double active_width = 7.5;    // mm, centred in each pitch
  std::size_t grid_n = 61;      // nodes along the longer side, odd
  double kappa_per_volt = 0.0037;  // eigencurvature, 1/(mm V)
  double nu = 0.34;

  static PlateConfig square(std::size_t pixels_per_side) {
    PlateConfig c;
    c.pixels_x = c.pixels_y = pixels_per_side;
    return c;
  }
  double side_x() const { return pixel_pitch * static_cast<double>(pixels_x); }
  double side_y() const { return pixel_pitch * static_cast<double>(pixels_y); }
  void validate() const;
};

// Regular node grid, row-major with rows along y. dx, dy are empty when only
// the vertical displacement is stored.
struct Heightfield {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> dx;
  std::vector<double> dy;

  bool has_full() const { return !dx.empty(); }
  std::size_t size() const { return nx * ny; }
};

// Finite-difference Kirchhoff plate with isotropic eigencurvature
// kappa_per_volt * v over each active pixel area and free edges. The centre
// node is clamped (w = 0, zero slopes). The factorisation is built once per
// configuration and reused across solves.
class PlateSolver {
 public:
  explicit PlateSolver(const PlateConfig& cfg);
  ~PlateSolver();
  PlateSolver(PlateSolver&&) noexcept;
  PlateSolver& operator=(PlateSolver&&) noexcept;

  const PlateConfig& config() const { return cfg_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double spacing() const { return h_; }

  // Thread-safe; with_inplane adds foreshortening displacements dx, dy.
  Heightfield solve(const VoltageGrid& v, bool with_inplane = true) const;

  // Nodal eigencurvature (1/mm) for a voltage grid, row-major.
  std::vector<double> eigencurvature(const VoltageGrid& v) const;

 private:
  struct Impl;
  PlateConfig cfg_;
  std::size_t nx_, ny_;
  double h_;
  std::unique_ptr<Impl> impl_;
};

Heightfield plate_solve(const VoltageGrid& v, const PlateConfig& cfg);

// Bilinear resampling onto n x n nodes spanning the same rectangle,
// endpoints included.
Heightfield sample_nodes(const Heightfield& field, std::size_t n = 20);

std::string format_heightfield_csv(const Heightfield& field);
// z only, one grid row per line, space separated.
std::string format_heightfield_matrix(const Heightfield& field);

}  // namespace morph
