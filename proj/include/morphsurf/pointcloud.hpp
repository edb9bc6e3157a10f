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

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace morph {

using Point3 = Eigen::Vector3d;

struct PointCloud {
  std::vector<Point3> points;
};

// Plane normal . p = d with a unit normal.
struct Plane {
  Point3 normal;
  double d;
};

// Orthogonal-distance least squares. The normal points to +z (ties: +x).
Plane fit_plane(const PointCloud& cloud);

// Rotates about the centroid taking the plane normal onto +z, then shifts so
// the centroid sits at z = 0.
PointCloud align_to_plane(const PointCloud& cloud, const Plane& plane);

// Keeps points inside the axis-aligned box [lo, hi]; replaces manual
// outlier deletion before fitting.
PointCloud crop_box(const PointCloud& cloud, const Point3& lo, const Point3& hi);

struct XYMatch {
  std::vector<Point3> points;
  std::vector<std::size_t> indices;
  double max_distance = 0.0;
};

// Nearest cloud point in x-y for every reference location; ties go to the
// lowest cloud index.
XYMatch match_by_xy(const std::vector<std::array<double, 2>>& reference,
                    const PointCloud& cloud);

struct SurfaceErrorReport {
  double mean_abs = 0.0;
  double mse_rm = 0.0;  // root of the mean squared z difference, mm
  double max_abs = 0.0;
  double pct_of_max_height = 0.0;
  // Signed error histogram over [-max_abs, max_abs].
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::vector<double> signed_error;
};

// Errors are z_a - z_b per point; x-y positions must agree within xy_tol.
SurfaceErrorReport surface_error(const std::vector<Point3>& a, const std::vector<Point3>& b,
                                 double xy_tol = 1e-6, std::size_t bins = 21);

// '.xyz' style: three whitespace or comma separated numbers per line.
PointCloud read_xyz(const std::string& path);
PointCloud parse_xyz(const std::string& text);
std::string format_xyz(const PointCloud& cloud);

std::string format_error_report(const SurfaceErrorReport& r);
std::string format_error_histogram_csv(const SurfaceErrorReport& r);

}  // namespace morph
