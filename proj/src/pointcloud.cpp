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

#include "morphsurf/pointcloud.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace morph {

namespace {

Point3 centroid(const std::vector<Point3>& pts) {
  Point3 c = Point3::Zero();
  for (const Point3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

Plane fit_plane(const PointCloud& cloud) {
  const auto& pts = cloud.points;
  if (pts.size() < 3) throw Error(Errc::kDegenerateCloud, "plane fit needs at least 3 points");
  for (const Point3& p : pts)
    if (!p.allFinite()) throw Error(Errc::kInvalidArgument, "cloud has non-finite coordinates");
  const Point3 c = centroid(pts);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Point3& p : pts) {
    const Point3 q = p - c;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw Error(Errc::kDegenerateCloud, "points are coincident or collinear");
  }
  Point3 n = es.eigenvectors().col(0).normalized();
  const bool flip = n.z() < 0.0 || (n.z() == 0.0 && (n.x() < 0.0 || (n.x() == 0.0 && n.y() < 0.0)));
  if (flip) n = -n;
  return {n, n.dot(c)};
}

PointCloud align_to_plane(const PointCloud& cloud, const Plane& plane) {
  if (cloud.points.empty()) return cloud;
  const Point3 n = plane.normal.normalized();
  const Point3 ez = Point3::UnitZ();
  const Point3 k = n.cross(ez);
  const double c = n.dot(ez);
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  if (k.norm() > 1e-15) {
    Eigen::Matrix3d kx;
    kx << 0.0, -k.z(), k.y(), k.z(), 0.0, -k.x(), -k.y(), k.x(), 0.0;
    // Rodrigues with unnormalised axis: I + K + K^2 / (1 + cos)
    r += kx + kx * kx / (1.0 + c);
  } else if (c < 0.0) {
    r = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  }
  const Point3 cen = centroid(cloud.points);
  const Point3 shift(cen.x(), cen.y(), 0.0);
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Point3& p : cloud.points) out.points.push_back(r * (p - cen) + shift);
  return out;
}

PointCloud crop_box(const PointCloud& cloud, const Point3& lo, const Point3& hi) {
  if ((lo.array() > hi.array()).any()) throw Error(Errc::kInvalidArgument, "box lower corner exceeds upper");
  PointCloud out;
  for (const Point3& p : cloud.points)
    if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all()) out.points.push_back(p);
  return out;
}

XYMatch match_by_xy(const std::vector<std::array<double, 2>>& reference, const PointCloud& cloud) {
  const auto& pts = cloud.points;
  if (pts.empty()) throw Error(Errc::kInvalidArgument, "cannot match against an empty cloud");

  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const Point3& p : pts) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  }
  const double span = std::max({x1 - x0, y1 - y0, 1e-12});
  const auto per_side = static_cast<long>(
      std::clamp(std::sqrt(static_cast<double>(pts.size())), 1.0, 1024.0));
  const double cell = span / static_cast<double>(per_side);
  const long gx = std::max(1L, static_cast<long>((x1 - x0) / cell) + 1);
  const long gy = std::max(1L, static_cast<long>((y1 - y0) / cell) + 1);
  std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(gx * gy));
  auto cell_of = [&](double v, double lo) { return static_cast<long>(std::floor((v - lo) / cell)); };
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const long cx = std::clamp(cell_of(pts[k].x(), x0), 0L, gx - 1);
    const long cy = std::clamp(cell_of(pts[k].y(), y0), 0L, gy - 1);
    grid[static_cast<std::size_t>(cy * gx + cx)].push_back(k);
  }

  XYMatch out;
  out.points.reserve(reference.size());
  out.indices.reserve(reference.size());
  for (const auto& q : reference) {
    // Searching from the nearest in-grid cell keeps the ring bound valid for
    // queries outside the cloud's bounding box.
    const long qx = std::clamp(cell_of(q[0], x0), 0L, gx - 1);
    const long qy = std::clamp(cell_of(q[1], y0), 0L, gy - 1);
    const long r_max = std::max(gx, gy);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    auto visit = [&](long cx, long cy) {
      if (cx < 0 || cy < 0 || cx >= gx || cy >= gy) return;
      for (std::size_t k : grid[static_cast<std::size_t>(cy * gx + cx)]) {
        const double dx = pts[k].x() - q[0], dy = pts[k].y() - q[1];
        const double d2 = dx * dx + dy * dy;
        if (d2 < best || (d2 == best && k < best_k)) {
          best = d2;
          best_k = k;
        }
      }
    };
    for (long r = 0; r <= r_max; ++r) {
      if (r == 0) {
        visit(qx, qy);
      } else {
        for (long t = -r; t <= r; ++t) {
          visit(qx + t, qy - r);
          visit(qx + t, qy + r);
        }
        for (long t = -r + 1; t <= r - 1; ++t) {
          visit(qx - r, qy + t);
          visit(qx + r, qy + t);
        }
      }
      // anything in ring r + 1 or beyond is at least r * cell away
      const double bound = static_cast<double>(r) * cell;
      if (best < bound * bound) break;
    }
    out.points.push_back(pts[best_k]);
    out.indices.push_back(best_k);
    out.max_distance = std::max(out.max_distance, std::sqrt(best));
  }
  return out;
}

SurfaceErrorReport surface_error(const std::vector<Point3>& a, const std::vector<Point3>& b,
                                 double xy_tol, std::size_t bins) {
  if (a.size() != b.size()) throw Error(Errc::kDimensionMismatch, "point lists differ in length");
  if (a.empty()) throw Error(Errc::kDimensionMismatch, "no points to compare");
  if (bins < 1) throw Error(Errc::kInvalidArgument, "histogram needs at least one bin");
  SurfaceErrorReport r;
  r.signed_error.resize(a.size());
  double sum_abs = 0.0, sum_sq = 0.0;
  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::hypot(a[k].x() - b[k].x(), a[k].y() - b[k].y()) > xy_tol) {
      throw Error(Errc::kXYMismatch, "point " + std::to_string(k) + " differs in x-y");
    }
    const double e = a[k].z() - b[k].z();
    r.signed_error[k] = e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
    r.max_abs = std::max(r.max_abs, std::abs(e));
    zmin = std::min(zmin, b[k].z());
    zmax = std::max(zmax, b[k].z());
  }
  const double n = static_cast<double>(a.size());
  r.mean_abs = sum_abs / n;
  r.mse_rm = std::sqrt(sum_sq / n);
  const double range = zmax - zmin;
  if (range > 0.0) {
    r.pct_of_max_height = 100.0 * r.mean_abs / range;
  } else {
    r.pct_of_max_height = r.mean_abs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  const double half = r.max_abs > 0.0 ? r.max_abs : 1.0;
  r.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    r.bin_edges[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(bins);
  r.counts.assign(bins, 0);
  for (double e : r.signed_error) {
    const auto idx = static_cast<std::size_t>(
        std::clamp(std::floor((e + half) / (2.0 * half) * static_cast<double>(bins)), 0.0,
                   static_cast<double>(bins - 1)));
    ++r.counts[idx];
  }
  return r;
}

PointCloud parse_xyz(const std::string& text) {
  PointCloud out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view s = text::trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::string norm(s);
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::replace(norm.begin(), norm.end(), '\t', ' ');
    std::vector<double> vals;
    for (std::string_view tok : text::split(norm, ' ')) {
      if (tok.empty()) continue;
      double v;
      if (!text::parse_double(tok, v)) {
        throw Error(Errc::kFormatError, "line " + std::to_string(line_no) + ": bad number '" +
                                            std::string(tok) + "'");
      }
      vals.push_back(v);
    }
    if (vals.size() != 3) {
      throw Error(Errc::kFormatError,
                  "line " + std::to_string(line_no) + ": expected 3 fields, got " +
                      std::to_string(vals.size()));
    }
    out.points.emplace_back(vals[0], vals[1], vals[2]);
  }
  return out;
}

PointCloud read_xyz(const std::string& path) { return parse_xyz(text::read_file(path)); }

std::string format_xyz(const PointCloud& cloud) {
  std::ostringstream os;
  for (const Point3& p : cloud.points) {
    os << text::format_exact(p.x()) << ' ' << text::format_exact(p.y()) << ' '
       << text::format_exact(p.z()) << '\n';
  }
  return os.str();
}

std::string format_error_report(const SurfaceErrorReport& r) {
  std::ostringstream os;
  os << "points: " << r.signed_error.size() << '\n'
     << "mean_abs_mm: " << text::format_exact(r.mean_abs) << '\n'
     << "mse_rm_mm: " << text::format_exact(r.mse_rm) << '\n'
     << "max_abs_mm: " << text::format_exact(r.max_abs) << '\n'
     << "pct_of_max_height: " << text::format_exact(r.pct_of_max_height) << '\n';
  return os.str();
}

std::string format_error_histogram_csv(const SurfaceErrorReport& r) {
  std::ostringstream os;
  os << "lo,hi,count\n";
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    os << text::format_exact(r.bin_edges[i]) << ',' << text::format_exact(r.bin_edges[i + 1])
       << ',' << r.counts[i] << '\n';
  }
  return os.str();
}

}  // namespace morph
