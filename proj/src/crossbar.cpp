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

#include "morphsurf/crossbar.hpp"

#include "morphsurf/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace morph {

void CrossbarConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::kInvalidArgument, what); };
  if (n_rows < 1 || n_cols < 1) fail("crossbar needs at least one row and column");
  if (!(r_segment > 0.0) || !std::isfinite(r_segment)) fail("r_segment must be > 0");
  if (!(g_pixel > 0.0) || !std::isfinite(g_pixel)) fail("g_pixel must be > 0");
  if (!(g_leak >= 0.0) || !std::isfinite(g_leak)) fail("g_leak must be >= 0");
  if (!(blocker_factor > 0.0 && blocker_factor <= 1.0)) fail("blocker_factor must lie in (0, 1]");
}

DriveAssignment DriveAssignment::floating(std::size_t n_rows, std::size_t n_cols) {
  return {std::vector<ContactState>(n_rows), std::vector<ContactState>(n_cols)};
}

std::size_t DriveAssignment::driven_count() const {
  auto count = [](const std::vector<ContactState>& v) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](const ContactState& c) { return c.has_value(); }));
  };
  return count(rows) + count(cols);
}

bool DriveAssignment::carries_current() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* side : {&rows, &cols}) {
    for (const auto& c : *side) {
      if (!c) continue;
      lo = std::min(lo, *c);
      hi = std::max(hi, *c);
    }
  }
  return hi > lo;
}

CrossbarNetwork::CrossbarNetwork(const CrossbarConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t nr = cfg_.n_rows, nc = cfg_.n_cols;
  const double gs = 1.0 / cfg_.r_segment;
  const double gl = cfg_.g_leak * cfg_.blocker_factor;
  edges_.reserve(5 * nr * nc + 2 * (nr + nc));
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      edges_.push_back({r_node(i, j), m_node(i, j), 2.0 * cfg_.g_pixel});
      edges_.push_back({m_node(i, j), c_node(i, j), 2.0 * cfg_.g_pixel});
    }
  }
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      if (j + 1 < nc) {
        edges_.push_back({m_node(i, j), m_node(i, j + 1), gl});
        ++leak_edges_;
      }
      if (i + 1 < nr) {
        edges_.push_back({m_node(i, j), m_node(i + 1, j), gl});
        ++leak_edges_;
      }
    }
  }
  for (std::size_t i = 0; i < nr; ++i) {
    edges_.push_back({row_contact(i), r_node(i, 0), gs});
    for (std::size_t j = 0; j + 1 < nc; ++j) edges_.push_back({r_node(i, j), r_node(i, j + 1), gs});
  }
  for (std::size_t j = 0; j < nc; ++j) {
    edges_.push_back({col_contact(j), c_node(0, j), gs});
    for (std::size_t i = 0; i + 1 < nr; ++i) edges_.push_back({c_node(i, j), c_node(i + 1, j), gs});
  }
}

std::size_t CrossbarNetwork::node_count() const {
  return 3 * pixels() + cfg_.n_rows + cfg_.n_cols;
}

CrossbarNetwork build_network(const CrossbarConfig& cfg) { return CrossbarNetwork(cfg); }

namespace {

constexpr std::size_t kDenseLimit = 16;
constexpr double kKclTolerance = 1e-9;

// Componentwise backward error of Kirchhoff's current law: the net current
// into each free node relative to the sum of |g| * (|v_a| + |v_b|) over its
// edges. Scale free, so stiff electrodes next to weak pixels do not inflate it.
double kcl_residual(const CrossbarNetwork& net, const std::vector<double>& v,
                    const std::vector<bool>& fixed) {
  std::vector<double> imbalance(v.size(), 0.0), scale(v.size(), 0.0);
  for (const Edge& e : net.edges()) {
    const double i_ab = e.g * (v[e.a] - v[e.b]);
    const double mag = e.g * (std::abs(v[e.a]) + std::abs(v[e.b]));
    imbalance[e.a] += i_ab;
    imbalance[e.b] -= i_ab;
    scale[e.a] += mag;
    scale[e.b] += mag;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!fixed[k] && scale[k] > 0.0) worst = std::max(worst, std::abs(imbalance[k]) / scale[k]);
  return worst;
}

}  // namespace

NodePotentials solve_dc(const CrossbarNetwork& net, const DriveAssignment& drive) {
  const CrossbarConfig& cfg = net.config();
  if (drive.rows.size() != cfg.n_rows || drive.cols.size() != cfg.n_cols) {
    throw Error(Errc::kDimensionMismatch, "drive assignment does not match the array size");
  }
  if (drive.driven_count() == 0) {
    throw Error(Errc::kSingularSystem, "no driven contact; potentials are undetermined");
  }
  const std::size_t n = net.node_count();
  std::vector<double> v(n, 0.0);
  std::vector<bool> fixed(n, false);
  for (std::size_t i = 0; i < cfg.n_rows; ++i) {
    if (const auto& c = drive.rows[i]) {
      if (!std::isfinite(*c)) throw Error(Errc::kInvalidArgument, "non-finite row drive");
      fixed[net.row_contact(i)] = true;
      v[net.row_contact(i)] = *c;
    }
  }
  for (std::size_t j = 0; j < cfg.n_cols; ++j) {
    if (const auto& c = drive.cols[j]) {
      if (!std::isfinite(*c)) throw Error(Errc::kInvalidArgument, "non-finite column drive");
      fixed[net.col_contact(j)] = true;
      v[net.col_contact(j)] = *c;
    }
  }

  std::vector<Eigen::Index> slot(n, -1);
  Eigen::Index n_free = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (!fixed[k]) slot[k] = n_free++;

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free);
  Eigen::VectorXd x;
  const bool dense = std::max(cfg.n_rows, cfg.n_cols) <= kDenseLimit;

  if (dense) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_free, n_free);
    for (const Edge& e : net.edges()) {
      const Eigen::Index sa = slot[e.a], sb = slot[e.b];
      if (sa >= 0) g(sa, sa) += e.g;
      if (sb >= 0) g(sb, sb) += e.g;
      if (sa >= 0 && sb >= 0) {
        g(sa, sb) -= e.g;
        g(sb, sa) -= e.g;
      } else if (sa >= 0) {
        rhs(sa) += e.g * v[e.b];
      } else if (sb >= 0) {
        rhs(sb) += e.g * v[e.a];
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
      throw Error(Errc::kSingularSystem, "reduced conductance matrix is not positive definite");
    }
    x = llt.solve(rhs);
  } else {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * net.edges().size());
    for (const Edge& e : net.edges()) {
      const Eigen::Index sa = slot[e.a], sb = slot[e.b];
      if (sa >= 0) trip.emplace_back(sa, sa, e.g);
      if (sb >= 0) trip.emplace_back(sb, sb, e.g);
      if (sa >= 0 && sb >= 0) {
        trip.emplace_back(sa, sb, -e.g);
        trip.emplace_back(sb, sa, -e.g);
      } else if (sa >= 0) {
        rhs(sa) += e.g * v[e.b];
      } else if (sb >= 0) {
        rhs(sb) += e.g * v[e.a];
      }
    }
    Eigen::SparseMatrix<double> g(n_free, n_free);
    g.setFromTriplets(trip.begin(), trip.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-15);
    cg.setMaxIterations(static_cast<Eigen::Index>(20 * n_free));
    cg.compute(g);
    x = cg.solve(rhs);
    if (cg.info() != Eigen::Success && cg.error() > 1e-12) {
      throw Error(Errc::kSolverFailure,
                  "conjugate gradient stalled at relative residual " + std::to_string(cg.error()));
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (slot[k] >= 0) v[k] = x(slot[k]);

  NodePotentials out{std::move(v), 0.0};
  out.kcl_residual = kcl_residual(net, out.potentials, fixed);
  if (!(out.kcl_residual < kKclTolerance)) {
    throw Error(Errc::kSolverFailure,
                "KCL residual " + std::to_string(out.kcl_residual) + " above tolerance");
  }
  return out;
}

VoltageGrid pixel_voltages(const CrossbarNetwork& net, const NodePotentials& pots) {
  const CrossbarConfig& cfg = net.config();
  if (pots.potentials.size() != net.node_count()) {
    throw Error(Errc::kDimensionMismatch, "potentials do not belong to this network");
  }
  VoltageGrid out(cfg.n_rows, cfg.n_cols);
  for (std::size_t i = 0; i < cfg.n_rows; ++i)
    for (std::size_t j = 0; j < cfg.n_cols; ++j)
      out(i, j) = pots.potentials[net.r_node(i, j)] - pots.potentials[net.c_node(i, j)];
  return out;
}

VoltageGrid solve_pixels(const CrossbarNetwork& net, const DriveAssignment& drive) {
  return pixel_voltages(net, solve_dc(net, drive));
}

bool dpa_representable(const VoltageGrid& t, double tol) {
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j)
      if (std::abs(t(i, j) - t(i, 0) - t(0, j) + t(0, 0)) > tol) return false;
  return true;
}

DriveAssignment dpa_drive(const VoltageGrid& t, double tol) {
  const std::size_t nr = t.rows(), nc = t.cols();
  DriveAssignment d = DriveAssignment::floating(nr, nc);
  std::vector<std::size_t> ri, cj;
  for (std::size_t i = 0; i < nr; ++i)
    if ((t.matrix().row(static_cast<Eigen::Index>(i)).array() != 0.0).any()) ri.push_back(i);
  for (std::size_t j = 0; j < nc; ++j)
    if ((t.matrix().col(static_cast<Eigen::Index>(j)).array() != 0.0).any()) cj.push_back(j);
  if (ri.empty()) {
    // all-zero target: hold everything at 0 V
    for (auto& r : d.rows) r = 0.0;
    for (auto& c : d.cols) c = 0.0;
    return d;
  }
  const std::size_t i0 = ri.front(), j0 = cj.front();
  for (std::size_t j : cj) d.cols[j] = t(i0, j0) - t(i0, j);
  for (std::size_t i : ri) d.rows[i] = t(i, j0);
  for (std::size_t i : ri) {
    for (std::size_t j : cj) {
      if (std::abs(*d.rows[i] - *d.cols[j] - t(i, j)) > tol) {
        throw Error(Errc::kNotRepresentable,
                    "target pixel (" + std::to_string(i) + "," + std::to_string(j) +
                        ") breaks the row-minus-column decomposition");
      }
    }
  }
  // centre the drive so row and column potentials are balanced around 0
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* side : {&d.rows, &d.cols})
    for (const auto& c : *side)
      if (c) {
        lo = std::min(lo, *c);
        hi = std::max(hi, *c);
      }
  const double shift = 0.5 * (lo + hi);
  for (auto* side : {&d.rows, &d.cols})
    for (auto& c : *side)
      if (c) *c -= shift;
  return d;
}

double attenuation_at(const CrossbarNetwork& net, std::size_t i, std::size_t j,
                      double probe_volts) {
  if (probe_volts == 0.0 || !std::isfinite(probe_volts)) {
    throw Error(Errc::kInvalidArgument, "probe voltage must be finite and nonzero");
  }
  const CrossbarConfig& cfg = net.config();
  DriveAssignment d = DriveAssignment::floating(cfg.n_rows, cfg.n_cols);
  d.rows[i] = 0.5 * probe_volts;
  d.cols[j] = -0.5 * probe_volts;
  return solve_pixels(net, d)(i, j) / probe_volts;
}

RowMatrix attenuation_map(const CrossbarNetwork& net, double probe_volts) {
  const CrossbarConfig& cfg = net.config();
  RowMatrix att(cfg.n_rows, cfg.n_cols);
  for (std::size_t i = 0; i < cfg.n_rows; ++i)
    for (std::size_t j = 0; j < cfg.n_cols; ++j)
      att(i, j) = attenuation_at(net, i, j, probe_volts);
  return att;
}

VoltageGrid compensate(const VoltageGrid& target, const RowMatrix& att) {
  if (static_cast<std::size_t>(att.rows()) != target.rows() ||
      static_cast<std::size_t>(att.cols()) != target.cols()) {
    throw Error(Errc::kDimensionMismatch, "attenuation map and target differ in shape");
  }
  VoltageGrid out(target.rows(), target.cols());
  for (std::size_t i = 0; i < target.rows(); ++i) {
    for (std::size_t j = 0; j < target.cols(); ++j) {
      const double a = att(i, j);
      if (a == 0.0) {
        throw Error(Errc::kDivisionByZero, "zero attenuation at pixel (" + std::to_string(i) +
                                               "," + std::to_string(j) + ")");
      }
      out(i, j) = target(i, j) / a;
    }
  }
  return out;
}

ErrorStats voltage_error(const VoltageGrid& measured, const VoltageGrid& target, double v_ref) {
  if (measured.rows() != target.rows() || measured.cols() != target.cols()) {
    throw Error(Errc::kDimensionMismatch, "measured and target grids differ in shape");
  }
  if (!(v_ref > 0.0)) throw Error(Errc::kInvalidArgument, "v_ref must be > 0");
  ErrorStats s;
  s.per_pixel_error = VoltageGrid(RowMatrix(measured.matrix() - target.matrix()));
  const auto abs = s.per_pixel_error.matrix().cwiseAbs();
  s.mean_abs_error_pct = 100.0 * abs.mean() / v_ref;
  s.max_abs_error_pct = 100.0 * abs.maxCoeff() / v_ref;
  return s;
}

double default_v_ref(const VoltageGrid& target) {
  const double m = target.max_abs();
  return m > 0.0 ? m : 1.0;
}

AddressingCount addressing_complexity(std::size_t n) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "array size must be >= 1");
  return {n * n, 2 * n};
}

CrossbarConfig calibrate_r_segment(CrossbarConfig cfg, double far_fraction) {
  if (!(far_fraction > 0.0 && far_fraction < 1.0)) {
    throw Error(Errc::kInvalidArgument, "far-corner fraction must lie in (0, 1)");
  }
  auto far = [&](double log_r) {
    cfg.r_segment = std::exp(log_r);
    return attenuation_at(CrossbarNetwork(cfg), cfg.n_rows - 1, cfg.n_cols - 1);
  };
  double lo = std::log(1e-6 / cfg.g_pixel);
  double hi = std::log(10.0 / cfg.g_pixel);
  if (far(hi) > far_fraction || far(lo) < far_fraction) {
    throw Error(Errc::kSolverFailure, "far-corner fraction not bracketed by the search range");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (far(mid) > far_fraction ? lo : hi) = mid;
  }
  cfg.r_segment = std::exp(0.5 * (lo + hi));
  return cfg;
}

}  // namespace morph
