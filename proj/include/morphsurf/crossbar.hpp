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

#include <cstddef>
#include <optional>
#include <vector>

namespace morph {

struct CrossbarConfig {
  std::size_t n_rows = 6;
  std::size_t n_cols = 6;
  double r_segment = 9.7;      // ohm per electrode span
  double g_pixel = 1e-3;       // S, series through-thickness conductance
  double g_leak = 1e-5;        // S, between 4-neighbour membrane midpoints
  double blocker_factor = 0.2; // multiplies g_leak; 1.0 = no blockers

  void validate() const;
};

// A contact is either driven to a voltage or left floating (nullopt).
using ContactState = std::optional<double>;

struct DriveAssignment {
  std::vector<ContactState> rows;
  std::vector<ContactState> cols;

  static DriveAssignment floating(std::size_t n_rows, std::size_t n_cols);
  std::size_t driven_count() const;
  // True when at least two driven contacts sit at different potentials, i.e.
  // the network carries current.
  bool carries_current() const;
};

struct Edge {
  std::size_t a;
  std::size_t b;
  double g;
};

// Conductance graph. Node layout: r_{i,j}, then m_{i,j}, then c_{i,j} (each
// n_rows*n_cols, row-major), then row contacts, then column contacts. Row
// contacts attach at the j = 0 end of each row electrode, column contacts at
// the i = 0 end of each column electrode.
class CrossbarNetwork {
 public:
  explicit CrossbarNetwork(const CrossbarConfig& cfg);

  const CrossbarConfig& config() const { return cfg_; }
  std::size_t node_count() const;
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t leak_edge_count() const { return leak_edges_; }

  std::size_t r_node(std::size_t i, std::size_t j) const { return i * cfg_.n_cols + j; }
  std::size_t m_node(std::size_t i, std::size_t j) const { return pixels() + r_node(i, j); }
  std::size_t c_node(std::size_t i, std::size_t j) const { return 2 * pixels() + r_node(i, j); }
  std::size_t row_contact(std::size_t i) const { return 3 * pixels() + i; }
  std::size_t col_contact(std::size_t j) const { return 3 * pixels() + cfg_.n_rows + j; }

 private:
  std::size_t pixels() const { return cfg_.n_rows * cfg_.n_cols; }

  CrossbarConfig cfg_;
  std::vector<Edge> edges_;
  std::size_t leak_edges_ = 0;
};

CrossbarNetwork build_network(const CrossbarConfig& cfg);

struct NodePotentials {
  std::vector<double> potentials;
  // max |KCL imbalance| over free nodes divided by the largest branch current
  double kcl_residual = 0.0;
};

NodePotentials solve_dc(const CrossbarNetwork& net, const DriveAssignment& drive);
VoltageGrid pixel_voltages(const CrossbarNetwork& net, const NodePotentials& pots);

// Convenience: solve_dc followed by pixel_voltages.
VoltageGrid solve_pixels(const CrossbarNetwork& net, const DriveAssignment& drive);

bool dpa_representable(const VoltageGrid& target, double tol = 1e-9);

// Simultaneous drive for a target. Rows and columns holding at least one
// nonzero pixel are driven, the rest float, and the driven sub-block must
// decompose as row_i - col_j. Throws NotRepresentable otherwise.
DriveAssignment dpa_drive(const VoltageGrid& target, double tol = 1e-9);

// Fraction of probe_volts reaching pixel (i,j) when only row i (+probe/2)
// and column j (-probe/2) are driven.
RowMatrix attenuation_map(const CrossbarNetwork& net, double probe_volts = 1.0);
double attenuation_at(const CrossbarNetwork& net, std::size_t i, std::size_t j,
                      double probe_volts = 1.0);

VoltageGrid compensate(const VoltageGrid& target, const RowMatrix& att);

struct ErrorStats {
  double mean_abs_error_pct = 0.0;
  double max_abs_error_pct = 0.0;
  VoltageGrid per_pixel_error;
};

ErrorStats voltage_error(const VoltageGrid& measured, const VoltageGrid& target,
                         double v_ref);
// v_ref = max|target|, or 1 V for an all-zero target.
double default_v_ref(const VoltageGrid& target);

struct AddressingCount {
  std::size_t direct;
  std::size_t passive;
};
AddressingCount addressing_complexity(std::size_t n);

// Bisection on r_segment so that the far-corner attenuation (pixel
// (n_rows-1, n_cols-1)) equals far_fraction. Other fields are kept.
CrossbarConfig calibrate_r_segment(CrossbarConfig cfg, double far_fraction = 0.796);

}  // namespace morph
