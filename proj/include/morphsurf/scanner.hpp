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
#include "morphsurf/voltage_grid.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace morph {

// Time constants in seconds. Infinity is allowed for the decay constants and
// switches the corresponding relaxation off.
struct PixelDynamicsConfig {
  double tau_charge = 1.5647;      // addressed pixel towards its DC voltage
  double tau_float = 4409.3;       // isolated pixel towards 0
  double tau_ground = 10.0;        // both terminals at equal potential
  double residual_fraction = 0.0;  // of the signed peak, kept after grounding
  // Pixel with a floating terminal while other contacts push current through
  // the array; relaxes towards the DC sneak voltage.
  double tau_sneak = 60.0;

  void validate() const;
};

struct PixelChargeState {
  RowMatrix v_cap;
  RowMatrix v_peak;  // signed value of largest magnitude seen so far
  double t = 0.0;

  static PixelChargeState zero(std::size_t n_rows, std::size_t n_cols);
};

enum class Protocol { kDpa, kPs };
const char* protocol_name(Protocol p);

struct ScanStep {
  DriveAssignment drive;
  double dwell;
};

struct ScanSchedule {
  Protocol protocol;
  std::vector<ScanStep> steps;
};

// Two rounds over the rows. The visited row is held at 0 V and each column
// whose pixel in that row has the round's sign (+ then -) is driven to
// -target, so the pixel sees row - column = target. Other columns float.
// row_order defaults to 0..n_rows-1.
ScanSchedule ps_schedule(const VoltageGrid& target, double dwell, double v_supply,
                         std::span<const std::size_t> row_order = {});
ScanSchedule dpa_schedule(const DriveAssignment& drive, double dwell);

enum class PixelCondition { kAddressed, kGrounded, kSneak, kFloating };

// Exact propagator of the linear pixel ODE for one drive:
//   dv/dt = -(D + k_lat L) v + D v_target
// D holds per-pixel relaxation rates from the pixel condition, L is the grid
// Laplacian of 4-neighbour ionic exchange with k_lat = (g_leak *
// blocker_factor / g_pixel) / tau_charge.
class StepOperator {
 public:
  StepOperator(const CrossbarNetwork& net, const DriveAssignment& drive,
               const PixelDynamicsConfig& dyn, const PixelChargeState& state);

  const std::vector<PixelCondition>& conditions() const { return cond_; }
  const VoltageGrid& dc_voltages() const { return vdc_; }

  // Advance by dt seconds. Updates v_cap, v_peak and t.
  void apply(PixelChargeState& state, double dt) const;

 private:
  struct Propagator {
    double dt = -1.0;
    Eigen::MatrixXd decay;
    Eigen::VectorXd forced;
  };
  const Propagator& propagator(double dt) const;

  std::size_t n_rows_, n_cols_;
  std::vector<PixelCondition> cond_;
  VoltageGrid vdc_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd drive_term_;  // Q^T D v_target
  mutable Propagator cache_;
};

PixelChargeState step(const PixelChargeState& state, const CrossbarNetwork& net,
                      const DriveAssignment& drive, const PixelDynamicsConfig& dyn,
                      double dt);

struct TraceSample {
  double t;
  std::vector<double> v;  // row-major
};

struct RunOptions {
  double dt = 0.1;
  bool record_trace = false;
  // DPA only: stop once no pixel moves more than this between samples. The
  // distance left to steady state is about tol * tau_charge / dt.
  double dpa_settle_tol = 1e-9;
};

struct RunResult {
  std::vector<TraceSample> trace;
  std::vector<VoltageGrid> after_cycle;
  VoltageGrid settled;
  PixelChargeState final_state;
};

RunResult run(const CrossbarNetwork& net, const ScanSchedule& schedule,
              const PixelDynamicsConfig& dyn, std::size_t cycles,
              const RunOptions& opts = {});

// Time constants from two decay measurements: a retention loss over a
// floating interval and a current decay over a charging interval.
PixelDynamicsConfig calibrate_dynamics(double retention_frac, double retention_time,
                                       double current_decay_frac, double decay_time,
                                       const PixelDynamicsConfig& base = {});

std::string format_trace_csv(const std::vector<TraceSample>& trace,
                             std::size_t n_rows, std::size_t n_cols);

struct ScanSettings {
  Protocol protocol = Protocol::kPs;
  double row_dwell = 3.0;
  std::size_t cycles = 3;
  double dt = 0.1;
  double v_supply = 5.0;
  bool compensate = false;
  bool record_trace = false;
};

struct ScanOutcome {
  ScanSchedule schedule;
  VoltageGrid command;  // what the drive was built from
  RunResult result;
  ErrorStats error;
  double v_ref;
};

// Full scan of one target. DPA holds its drive for the same wall time as a
// PS cycle (2 * n_rows * row_dwell) per cycle.
ScanOutcome scan_target(const CrossbarNetwork& net, const PixelDynamicsConfig& dyn,
                        const VoltageGrid& target, const ScanSettings& settings);

}  // namespace morph
