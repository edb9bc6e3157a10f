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

#include "morphsurf/scanner.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace morph {

namespace {

double rate_of(double tau) { return std::isinf(tau) ? 0.0 : 1.0 / tau; }

std::size_t samples_per_dwell(double dwell, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::kInvalidArgument, "dt must be > 0");
  const double ratio = dwell / dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n) {
    throw Error(Errc::kInvalidArgument, "dt must divide every dwell");
  }
  return static_cast<std::size_t>(n);
}

}  // namespace

void PixelDynamicsConfig::validate() const {
  for (double tau : {tau_charge, tau_float, tau_ground, tau_sneak}) {
    if (!(tau > 0.0)) throw Error(Errc::kInvalidArgument, "time constants must be > 0");
  }
  if (std::isinf(tau_charge)) throw Error(Errc::kInvalidArgument, "tau_charge must be finite");
  if (!(residual_fraction >= 0.0 && residual_fraction < 1.0)) {
    throw Error(Errc::kInvalidArgument, "residual_fraction must lie in [0, 1)");
  }
}

PixelChargeState PixelChargeState::zero(std::size_t n_rows, std::size_t n_cols) {
  const auto r = static_cast<Eigen::Index>(n_rows), c = static_cast<Eigen::Index>(n_cols);
  return {RowMatrix::Zero(r, c), RowMatrix::Zero(r, c), 0.0};
}

const char* protocol_name(Protocol p) { return p == Protocol::kDpa ? "dpa" : "ps"; }

ScanSchedule ps_schedule(const VoltageGrid& target, double dwell, double v_supply,
                         std::span<const std::size_t> row_order) {
  if (!(dwell > 0.0)) throw Error(Errc::kInvalidArgument, "dwell must be > 0");
  if (!target.all_finite()) throw Error(Errc::kInvalidArgument, "target has non-finite entries");
  if (target.max_abs() > v_supply) {
    throw Error(Errc::kTargetExceedsSupply, "target magnitude " + text::format_exact(target.max_abs()) +
                                                " V exceeds supply " + text::format_exact(v_supply) + " V");
  }
  const std::size_t nr = target.rows(), nc = target.cols();
  std::vector<std::size_t> order(row_order.begin(), row_order.end());
  if (order.empty()) {
    order.resize(nr);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  {
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (sorted.size() != nr || sorted[k] != k) {
        throw Error(Errc::kInvalidArgument, "row order must be a permutation of the rows");
      }
    }
  }
  ScanSchedule s{Protocol::kPs, {}};
  s.steps.reserve(2 * nr);
  for (double sign : {1.0, -1.0}) {
    for (std::size_t i : order) {
      DriveAssignment d = DriveAssignment::floating(nr, nc);
      d.rows[i] = 0.0;
      for (std::size_t j = 0; j < nc; ++j)
        if (target(i, j) * sign > 0.0) d.cols[j] = -target(i, j);
      s.steps.push_back({std::move(d), dwell});
    }
  }
  return s;
}

ScanSchedule dpa_schedule(const DriveAssignment& drive, double dwell) {
  if (!(dwell > 0.0)) throw Error(Errc::kInvalidArgument, "dwell must be > 0");
  return {Protocol::kDpa, {{drive, dwell}}};
}

StepOperator::StepOperator(const CrossbarNetwork& net, const DriveAssignment& drive,
                           const PixelDynamicsConfig& dyn, const PixelChargeState& state)
    : n_rows_(net.config().n_rows), n_cols_(net.config().n_cols) {
  dyn.validate();
  const std::size_t n = n_rows_ * n_cols_;
  if (static_cast<std::size_t>(state.v_cap.size()) != n) {
    throw Error(Errc::kDimensionMismatch, "charge state does not match the array size");
  }
  vdc_ = drive.driven_count() > 0 ? solve_pixels(net, drive) : VoltageGrid(n_rows_, n_cols_);
  const bool current = drive.carries_current();

  cond_.resize(n);
  Eigen::VectorXd rate(n), goal(n);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t j = 0; j < n_cols_; ++j) {
      const std::size_t k = i * n_cols_ + j;
      const auto& r = drive.rows[i];
      const auto& c = drive.cols[j];
      if (r && c && *r == *c) {
        cond_[k] = PixelCondition::kGrounded;
        rate(k) = rate_of(dyn.tau_ground);
        goal(k) = dyn.residual_fraction * state.v_peak(i, j);
      } else if (r && c) {
        cond_[k] = PixelCondition::kAddressed;
        rate(k) = rate_of(dyn.tau_charge);
        goal(k) = vdc_(i, j);
      } else if (current) {
        cond_[k] = PixelCondition::kSneak;
        rate(k) = rate_of(dyn.tau_sneak);
        goal(k) = vdc_(i, j);
      } else {
        cond_[k] = PixelCondition::kFloating;
        rate(k) = rate_of(dyn.tau_float);
        goal(k) = 0.0;
      }
    }
  }

  const CrossbarConfig& cfg = net.config();
  const double k_lat = cfg.g_leak * cfg.blocker_factor / cfg.g_pixel / dyn.tau_charge;
  Eigen::MatrixXd a = rate.asDiagonal();
  auto couple = [&](std::size_t p, std::size_t q) {
    a(p, p) += k_lat;
    a(q, q) += k_lat;
    a(p, q) -= k_lat;
    a(q, p) -= k_lat;
  };
  if (k_lat > 0.0) {
    for (std::size_t i = 0; i < n_rows_; ++i) {
      for (std::size_t j = 0; j < n_cols_; ++j) {
        const std::size_t k = i * n_cols_ + j;
        if (j + 1 < n_cols_) couple(k, k + 1);
        if (i + 1 < n_rows_) couple(k, k + n_cols_);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(Errc::kSolverFailure, "eigen-decomposition of the pixel operator failed");
  }
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  drive_term_ = eigenvectors_.transpose() * rate.cwiseProduct(goal);
}

const StepOperator::Propagator& StepOperator::propagator(double dt) const {
  if (cache_.dt == dt) return cache_;
  const Eigen::Index n = eigenvalues_.size();
  Eigen::VectorXd e(n), phi(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lt = eigenvalues_(k) * dt;
    e(k) = std::exp(-lt);
    // (1 - e^{-lambda dt}) / lambda, with the lambda -> 0 limit dt
    phi(k) = std::abs(lt) < 1e-12 ? dt : -std::expm1(-lt) / eigenvalues_(k);
  }
  cache_.decay = eigenvectors_ * e.asDiagonal() * eigenvectors_.transpose();
  cache_.forced = eigenvectors_ * phi.cwiseProduct(drive_term_);
  cache_.dt = dt;
  return cache_;
}

void StepOperator::apply(PixelChargeState& state, double dt) const {
  if (!(dt >= 0.0)) throw Error(Errc::kInvalidArgument, "dt must be >= 0");
  if (dt == 0.0) return;
  const Propagator& p = propagator(dt);
  const Eigen::Index n = static_cast<Eigen::Index>(n_rows_ * n_cols_);
  Eigen::Map<Eigen::VectorXd> v(state.v_cap.data(), n);
  v = p.decay * v + p.forced;
  Eigen::Map<Eigen::VectorXd> peak(state.v_peak.data(), n);
  for (Eigen::Index k = 0; k < n; ++k)
    if (std::abs(v(k)) > std::abs(peak(k))) peak(k) = v(k);
  state.t += dt;
}

PixelChargeState step(const PixelChargeState& state, const CrossbarNetwork& net,
                      const DriveAssignment& drive, const PixelDynamicsConfig& dyn,
                      double dt) {
  PixelChargeState out = state;
  StepOperator(net, drive, dyn, state).apply(out, dt);
  return out;
}

RunResult run(const CrossbarNetwork& net, const ScanSchedule& schedule,
              const PixelDynamicsConfig& dyn, std::size_t cycles, const RunOptions& opts) {
  if (cycles < 1) throw Error(Errc::kInvalidArgument, "cycles must be >= 1");
  const std::size_t nr = net.config().n_rows, nc = net.config().n_cols;
  std::vector<std::size_t> samples;
  for (const ScanStep& s : schedule.steps) samples.push_back(samples_per_dwell(s.dwell, opts.dt));

  RunResult out;
  PixelChargeState state = PixelChargeState::zero(nr, nc);
  auto record = [&] {
    if (!opts.record_trace) return;
    out.trace.push_back({state.t, std::vector<double>(state.v_cap.data(),
                                                      state.v_cap.data() + state.v_cap.size())});
  };
  record();
  bool settled = false;
  for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
    for (std::size_t k = 0; k < schedule.steps.size() && !settled; ++k) {
      const StepOperator op(net, schedule.steps[k].drive, dyn, state);
      for (std::size_t s = 0; s < samples[k]; ++s) {
        const RowMatrix before = state.v_cap;
        op.apply(state, opts.dt);
        record();
        if (schedule.protocol == Protocol::kDpa &&
            (state.v_cap - before).cwiseAbs().maxCoeff() < opts.dpa_settle_tol) {
          settled = true;
          break;
        }
      }
    }
    out.after_cycle.emplace_back(state.v_cap);
  }
  out.settled = VoltageGrid(state.v_cap);
  out.final_state = std::move(state);
  return out;
}

PixelDynamicsConfig calibrate_dynamics(double retention_frac, double retention_time,
                                       double current_decay_frac, double decay_time,
                                       const PixelDynamicsConfig& base) {
  auto unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!unit(retention_frac) || !unit(current_decay_frac)) {
    throw Error(Errc::kInvalidArgument, "fractions must lie in (0, 1)");
  }
  if (!(retention_time > 0.0) || !(decay_time > 0.0)) {
    throw Error(Errc::kInvalidArgument, "times must be > 0");
  }
  PixelDynamicsConfig d = base;
  d.tau_float = -retention_time / std::log1p(-retention_frac);
  d.tau_charge = -decay_time / std::log1p(-current_decay_frac);
  return d;
}

std::string format_trace_csv(const std::vector<TraceSample>& trace, std::size_t n_rows,
                             std::size_t n_cols) {
  std::ostringstream os;
  os << 't';
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t j = 0; j < n_cols; ++j) os << ",pixel_" << i << '_' << j;
  os << '\n';
  for (const TraceSample& s : trace) {
    os << text::format_exact(s.t);
    for (double v : s.v) os << ',' << text::format_exact(v);
    os << '\n';
  }
  return os.str();
}

ScanOutcome scan_target(const CrossbarNetwork& net, const PixelDynamicsConfig& dyn,
                        const VoltageGrid& target, const ScanSettings& st) {
  const CrossbarConfig& cfg = net.config();
  if (target.rows() != cfg.n_rows || target.cols() != cfg.n_cols) {
    throw Error(Errc::kDimensionMismatch, "target grid does not match the array size");
  }
  ScanOutcome out;
  out.command = st.compensate ? compensate(target, attenuation_map(net)) : target;
  if (st.protocol == Protocol::kPs) {
    out.schedule = ps_schedule(out.command, st.row_dwell, st.v_supply);
  } else {
    const DriveAssignment d = dpa_drive(out.command);
    for (const auto* side : {&d.rows, &d.cols})
      for (const auto& c : *side)
        if (c && std::abs(*c) > st.v_supply) {
          throw Error(Errc::kTargetExceedsSupply, "DPA drive exceeds the supply voltage");
        }
    out.schedule = dpa_schedule(d, 2.0 * static_cast<double>(cfg.n_rows) * st.row_dwell);
  }
  RunOptions opts;
  opts.dt = st.dt;
  opts.record_trace = st.record_trace;
  out.result = run(net, out.schedule, dyn, st.cycles, opts);
  out.v_ref = default_v_ref(target);
  out.error = voltage_error(out.result.settled, target, out.v_ref);
  return out;
}

}  // namespace morph
