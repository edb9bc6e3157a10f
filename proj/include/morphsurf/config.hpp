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

#include "morphsurf/crossbar.hpp"
#include "morphsurf/dataset.hpp"
#include "morphsurf/mechanics.hpp"
#include "morphsurf/mlp.hpp"
#include "morphsurf/scanner.hpp"

#include <cstdint>
#include <string>

namespace morph {

// Sectioned key=value file:
//
//   [crossbar] n_rows n_cols r_segment g_pixel g_leak blocker_factor
//              far_fraction
//   [dynamics] tau_charge tau_float tau_ground residual_fraction tau_sneak
//   [scan]     protocol row_dwell cycles dt v_supply compensate
//   [plate]    pixels_per_side pixel_pitch active_width grid_n
//              kappa_per_volt nu
//   [strip]    length beta h_sub h_ppy modulus_ratio
//   [dataset]  seed adjacency_cap sample_n mode threads
//   [mlp]      seed forward_hidden inverse_hidden learning_rate lr_decay
//              beta1 beta2 epsilon batch_size max_epochs patience
//              validation_fraction
//
// '#' starts a comment. r_segment = calibrate fits the electrode resistance
// to far_fraction; adjacency_cap = none disables the neighbour cap; time
// constants accept inf.
struct ExperimentConfig {
  CrossbarConfig crossbar;
  bool auto_r_segment = true;
  double far_fraction = 0.796;
  PixelDynamicsConfig dynamics = calibrate_dynamics(0.04, 180.0, 0.853, 3.0);
  ScanSettings scan;
  StripConfig strip;
  SimConfig sim;  // carries the plate
  std::uint64_t dataset_seed = 1;
  DisplacementMode mode = DisplacementMode::kZ;
  std::size_t threads = 0;
  MlpSpec forward = MlpSpec::forward_model();
  MlpSpec inverse = MlpSpec::inverse_model();

  // Overrides every seed (dataset and both networks).
  void set_seed(std::uint64_t seed);
  // Crossbar settings with r_segment calibrated when requested.
  CrossbarConfig resolved_crossbar() const;
  // Network specs with input/output sizes set from the plate and mode.
  MlpSpec forward_spec() const;
  MlpSpec inverse_spec() const;
  std::size_t n_voltages() const;
  std::size_t n_displacements() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& cfg);

}  // namespace morph
