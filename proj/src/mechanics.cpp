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

#include "morphsurf/mechanics.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace morph {

void StripConfig::validate() const {
  if (!(length > 0.0 && beta > 0.0 && h_sub > 0.0 && h_ppy > 0.0 && modulus_ratio > 0.0)) {
    throw Error(Errc::kInvalidArgument, "strip parameters must all be positive");
  }
}

double strip_curvature(double v, const StripConfig& cfg) {
  cfg.validate();
  // Timoshenko bilayer: m thickness ratio, n modulus ratio.
  const double m = cfg.h_sub / cfg.h_ppy;
  const double n = cfg.modulus_ratio;
  const double h = cfg.h_sub + cfg.h_ppy;
  const double num = 6.0 * (1.0 + m) * (1.0 + m);
  const double den = h * (3.0 * (1.0 + m) * (1.0 + m) + (1.0 + m * n) * (m * m + 1.0 / (m * n)));
  return num / den * cfg.beta * v;
}

TipPath strip_tip_path(const std::vector<double>& v_ramp, const StripConfig& cfg) {
  if (v_ramp.empty()) throw Error(Errc::kInvalidArgument, "voltage ramp is empty");
  TipPath out;
  const double len = cfg.length;
  for (double v : v_ramp) {
    const double k = strip_curvature(v, cfg);
    const double kl = k * len;
    if (std::abs(kl) < 1e-8) {
      // series limit of the arc formulas
      out.tips.push_back({len * (1.0 - kl * kl / 6.0), len * kl / 2.0});
    } else {
      out.tips.push_back({std::sin(kl) / k, (1.0 - std::cos(kl)) / k});
    }
  }
  for (std::size_t i = 1; i < out.tips.size(); ++i) {
    out.trajectory_length += std::hypot(out.tips[i][0] - out.tips[i - 1][0],
                                        out.tips[i][1] - out.tips[i - 1][1]);
  }
  return out;
}

void PlateConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::kInvalidArgument, what); };
  if (pixels_x < 1 || pixels_y < 1) fail("plate needs at least one pixel per side");
  if (!(pixel_pitch > 0.0)) fail("pixel_pitch must be > 0");
  if (!(active_width > 0.0 && active_width <= pixel_pitch)) fail("active_width must lie in (0, pitch]");
  if (grid_n < 3 || grid_n % 2 == 0) fail("grid_n must be odd and >= 3");
  if (!(kappa_per_volt > 0.0)) fail("kappa_per_volt must be > 0");
  if (!(nu >= 0.0 && nu < 0.5)) fail("nu must lie in [0, 0.5)");
}

struct PlateSolver::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  std::vector<Eigen::Index> rep;  // node -> unknown, -1 for the clamped centre
  Eigen::Index n_unknowns = 0;
};

namespace {

std::size_t nodes_along(double side, double h) {
  const double cells = side / h;
  const double r = std::round(cells);
  if (std::abs(cells - r) > 1e-9 * std::max(1.0, r)) {
    throw Error(Errc::kInvalidArgument, "plate sides are not commensurate with the node spacing");
  }
  return static_cast<std::size_t>(r) + 1;
}

// Control length of node i for the curvature terms; the first and last
// interior nodes also carry the adjacent boundary half-cell.
double control_lo(std::size_t i, double h) { return i == 1 ? 0.0 : (static_cast<double>(i) - 0.5) * h; }
double control_hi(std::size_t i, std::size_t n, double h) {
  return i == n - 2 ? static_cast<double>(n - 1) * h : (static_cast<double>(i) + 0.5) * h;
}

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

PlateSolver::PlateSolver(const PlateConfig& cfg) : cfg_(cfg), impl_(std::make_unique<Impl>()) {
  cfg_.validate();
  h_ = std::max(cfg_.side_x(), cfg_.side_y()) / static_cast<double>(cfg_.grid_n - 1);
  nx_ = nodes_along(cfg_.side_x(), h_);
  ny_ = nodes_along(cfg_.side_y(), h_);
  if (nx_ < 3 || ny_ < 3 || nx_ % 2 == 0 || ny_ % 2 == 0) {
    throw Error(Errc::kInvalidArgument, "both node counts must be odd and >= 3 for a centre clamp");
  }
  const std::size_t n = nx_ * ny_;
  auto id = [&](std::size_t i, std::size_t j) { return j * nx_ + i; };

  const std::size_t cx = nx_ / 2, cy = ny_ / 2;
  impl_->rep.assign(n, -1);
  Eigen::Index next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == id(cx, cy) || k == id(cx + 1, cy) || k == id(cx, cy + 1)) continue;
    impl_->rep[k] = next++;
  }
  impl_->rep[id(cx + 1, cy)] = impl_->rep[id(cx - 1, cy)];
  impl_->rep[id(cx, cy + 1)] = impl_->rep[id(cx, cy - 1)];
  impl_->n_unknowns = next;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 60);
  auto add_outer = [&](const std::array<std::pair<std::size_t, double>, 4>& a, std::size_t na,
                       const std::array<std::pair<std::size_t, double>, 4>& b, std::size_t nb,
                       double scale) {
    for (std::size_t p = 0; p < na; ++p) {
      const Eigen::Index ra = impl_->rep[a[p].first];
      if (ra < 0) continue;
      for (std::size_t q = 0; q < nb; ++q) {
        const Eigen::Index rb = impl_->rep[b[q].first];
        if (rb < 0) continue;
        trip.emplace_back(ra, rb, scale * a[p].second * b[q].second);
      }
    }
  };
  const double ih2 = 1.0 / (h_ * h_);
  const double nu = cfg_.nu;
  for (std::size_t j = 1; j + 1 < ny_; ++j) {
    for (std::size_t i = 1; i + 1 < nx_; ++i) {
      const double area = (control_hi(i, nx_, h_) - control_lo(i, h_)) *
                          (control_hi(j, ny_, h_) - control_lo(j, h_));
      const std::array<std::pair<std::size_t, double>, 4> bxx{
          {{id(i - 1, j), ih2}, {id(i, j), -2.0 * ih2}, {id(i + 1, j), ih2}, {0, 0.0}}};
      const std::array<std::pair<std::size_t, double>, 4> byy{
          {{id(i, j - 1), ih2}, {id(i, j), -2.0 * ih2}, {id(i, j + 1), ih2}, {0, 0.0}}};
      add_outer(bxx, 3, bxx, 3, area);
      add_outer(byy, 3, byy, 3, area);
      add_outer(bxx, 3, byy, 3, area * nu);
      add_outer(byy, 3, bxx, 3, area * nu);
    }
  }
  const double twist = 2.0 * (1.0 - nu) * h_ * h_;
  for (std::size_t j = 0; j + 1 < ny_; ++j) {
    for (std::size_t i = 0; i + 1 < nx_; ++i) {
      const std::array<std::pair<std::size_t, double>, 4> bxy{{{id(i + 1, j + 1), ih2},
                                                              {id(i + 1, j), -ih2},
                                                              {id(i, j + 1), -ih2},
                                                              {id(i, j), ih2}}};
      add_outer(bxy, 4, bxy, 4, twist);
    }
  }
  Eigen::SparseMatrix<double> k(impl_->n_unknowns, impl_->n_unknowns);
  k.setFromTriplets(trip.begin(), trip.end());
  impl_->ldlt.compute(k);
  if (impl_->ldlt.info() != Eigen::Success) {
    throw Error(Errc::kSolverFailure, "plate stiffness factorisation failed");
  }
}

PlateSolver::~PlateSolver() = default;
PlateSolver::PlateSolver(PlateSolver&&) noexcept = default;
PlateSolver& PlateSolver::operator=(PlateSolver&&) noexcept = default;

std::vector<double> PlateSolver::eigencurvature(const VoltageGrid& v) const {
  if (v.rows() != cfg_.pixels_y || v.cols() != cfg_.pixels_x) {
    throw Error(Errc::kDimensionMismatch, "voltage grid does not match the plate pixels");
  }
  const double gap = 0.5 * (cfg_.pixel_pitch - cfg_.active_width);
  std::vector<double> kappa(nx_ * ny_, 0.0);
  for (std::size_t j = 1; j + 1 < ny_; ++j) {
    const double y0 = control_lo(j, h_), y1 = control_hi(j, ny_, h_);
    for (std::size_t i = 1; i + 1 < nx_; ++i) {
      const double x0 = control_lo(i, h_), x1 = control_hi(i, nx_, h_);
      double acc = 0.0;
      // only pixels near the control cell can overlap it
      const auto px_lo = static_cast<std::size_t>(std::max(0.0, std::floor(x0 / cfg_.pixel_pitch)));
      const auto py_lo = static_cast<std::size_t>(std::max(0.0, std::floor(y0 / cfg_.pixel_pitch)));
      for (std::size_t py = py_lo; py < cfg_.pixels_y; ++py) {
        const double a0 = static_cast<double>(py) * cfg_.pixel_pitch + gap;
        if (a0 >= y1) break;
        const double oy = overlap(y0, y1, a0, a0 + cfg_.active_width);
        if (oy == 0.0) continue;
        for (std::size_t px = px_lo; px < cfg_.pixels_x; ++px) {
          const double b0 = static_cast<double>(px) * cfg_.pixel_pitch + gap;
          if (b0 >= x1) break;
          acc += v(py, px) * oy * overlap(x0, x1, b0, b0 + cfg_.active_width);
        }
      }
      kappa[j * nx_ + i] = cfg_.kappa_per_volt * acc / ((x1 - x0) * (y1 - y0));
    }
  }
  return kappa;
}

Heightfield PlateSolver::solve(const VoltageGrid& v, bool with_inplane) const {
  if (!v.all_finite()) throw Error(Errc::kInvalidArgument, "voltage grid has non-finite entries");
  const std::vector<double> kappa = eigencurvature(v);
  auto id = [&](std::size_t i, std::size_t j) { return j * nx_ + i; };
  Eigen::VectorXd f = Eigen::VectorXd::Zero(impl_->n_unknowns);
  const double ih2 = 1.0 / (h_ * h_);
  const double c = 1.0 + cfg_.nu;
  for (std::size_t j = 1; j + 1 < ny_; ++j) {
    for (std::size_t i = 1; i + 1 < nx_; ++i) {
      const double k = kappa[id(i, j)];
      if (k == 0.0) continue;
      const double area = (control_hi(i, nx_, h_) - control_lo(i, h_)) *
                          (control_hi(j, ny_, h_) - control_lo(j, h_));
      const double s = area * c * k * ih2;
      const std::pair<std::size_t, double> terms[] = {
          {id(i - 1, j), s}, {id(i + 1, j), s}, {id(i, j - 1), s}, {id(i, j + 1), s},
          {id(i, j), -4.0 * s}};
      for (const auto& [node, val] : terms) {
        const Eigen::Index r = impl_->rep[node];
        if (r >= 0) f(r) += val;
      }
    }
  }
  const Eigen::VectorXd u = impl_->ldlt.solve(f);
  if (impl_->ldlt.info() != Eigen::Success || !u.allFinite()) {
    throw Error(Errc::kSolverFailure, "plate back-substitution failed");
  }

  Heightfield out;
  out.nx = nx_;
  out.ny = ny_;
  const std::size_t n = nx_ * ny_;
  out.x.resize(n);
  out.y.resize(n);
  out.z.resize(n);
  for (std::size_t j = 0; j < ny_; ++j) {
    for (std::size_t i = 0; i < nx_; ++i) {
      const std::size_t k = id(i, j);
      out.x[k] = cfg_.side_x() * static_cast<double>(i) / static_cast<double>(nx_ - 1);
      out.y[k] = cfg_.side_y() * static_cast<double>(j) / static_cast<double>(ny_ - 1);
      out.z[k] = impl_->rep[k] >= 0 ? u(impl_->rep[k]) : 0.0;
    }
  }
  if (with_inplane) {
    // Inextensible foreshortening: arc length measured from the centre line
    // is preserved, so nodes pull in by the integral of w'^2 / 2.
    out.dx.assign(n, 0.0);
    out.dy.assign(n, 0.0);
    const std::size_t cx = nx_ / 2, cy = ny_ / 2;
    auto shrink = [&](double dw) { return 0.5 * dw * dw / h_; };
    for (std::size_t j = 0; j < ny_; ++j) {
      for (std::size_t i = cx + 1; i < nx_; ++i)
        out.dx[id(i, j)] = out.dx[id(i - 1, j)] - shrink(out.z[id(i, j)] - out.z[id(i - 1, j)]);
      for (std::size_t i = cx; i-- > 0;)
        out.dx[id(i, j)] = out.dx[id(i + 1, j)] + shrink(out.z[id(i + 1, j)] - out.z[id(i, j)]);
    }
    for (std::size_t i = 0; i < nx_; ++i) {
      for (std::size_t j = cy + 1; j < ny_; ++j)
        out.dy[id(i, j)] = out.dy[id(i, j - 1)] - shrink(out.z[id(i, j)] - out.z[id(i, j - 1)]);
      for (std::size_t j = cy; j-- > 0;)
        out.dy[id(i, j)] = out.dy[id(i, j + 1)] + shrink(out.z[id(i, j + 1)] - out.z[id(i, j)]);
    }
  }
  return out;
}

Heightfield plate_solve(const VoltageGrid& v, const PlateConfig& cfg) {
  return PlateSolver(cfg).solve(v);
}

Heightfield sample_nodes(const Heightfield& f, std::size_t n) {
  if (n < 2 || n > std::min(f.nx, f.ny)) {
    throw Error(Errc::kInvalidArgument, "sample count must lie in [2, grid resolution]");
  }
  Heightfield out;
  out.nx = out.ny = n;
  const std::size_t m = n * n;
  out.x.resize(m);
  out.y.resize(m);
  out.z.resize(m);
  if (f.has_full()) {
    out.dx.resize(m);
    out.dy.resize(m);
  }
  const double x0 = f.x.front(), x1 = f.x[f.nx - 1];
  const double y0 = f.y.front(), y1 = f.y[(f.ny - 1) * f.nx];
  auto locate = [](std::size_t k, std::size_t n_out, std::size_t n_in, std::size_t& i0, double& t) {
    const double s = static_cast<double>(k * (n_in - 1)) / static_cast<double>(n_out - 1);
    i0 = std::min(static_cast<std::size_t>(s), n_in - 2);
    t = s - static_cast<double>(i0);
  };
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t j0;
    double ty;
    locate(b, n, f.ny, j0, ty);
    for (std::size_t a = 0; a < n; ++a) {
      std::size_t i0;
      double tx;
      locate(a, n, f.nx, i0, tx);
      const std::size_t k00 = j0 * f.nx + i0, k10 = k00 + 1, k01 = k00 + f.nx, k11 = k01 + 1;
      auto lerp = [&](const std::vector<double>& q) {
        return (1.0 - ty) * ((1.0 - tx) * q[k00] + tx * q[k10]) + ty * ((1.0 - tx) * q[k01] + tx * q[k11]);
      };
      const std::size_t k = b * n + a;
      out.x[k] = x0 + (x1 - x0) * static_cast<double>(a) / static_cast<double>(n - 1);
      out.y[k] = y0 + (y1 - y0) * static_cast<double>(b) / static_cast<double>(n - 1);
      out.z[k] = lerp(f.z);
      if (f.has_full()) {
        out.dx[k] = lerp(f.dx);
        out.dy[k] = lerp(f.dy);
      }
    }
  }
  return out;
}

std::string format_heightfield_csv(const Heightfield& f) {
  std::ostringstream os;
  os << (f.has_full() ? "x,y,z,dx,dy,dz\n" : "x,y,z\n");
  for (std::size_t k = 0; k < f.size(); ++k) {
    os << text::format_exact(f.x[k]) << ',' << text::format_exact(f.y[k]) << ','
       << text::format_exact(f.z[k]);
    if (f.has_full()) {
      os << ',' << text::format_exact(f.dx[k]) << ',' << text::format_exact(f.dy[k]) << ','
         << text::format_exact(f.z[k]);
    }
    os << '\n';
  }
  return os.str();
}

std::string format_heightfield_matrix(const Heightfield& f) {
  std::ostringstream os;
  for (std::size_t j = 0; j < f.ny; ++j) {
    for (std::size_t i = 0; i < f.nx; ++i) {
      if (i) os << ' ';
      os << text::format_exact(f.z[j * f.nx + i]);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace morph
