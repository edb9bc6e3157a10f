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

#include "morphsurf/report.hpp"

#include "morphsurf/crossbar.hpp"
#include "morphsurf/errors.hpp"
#include "morphsurf/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace morph {

namespace {

double half_range(const RowMatrix& v, std::optional<double> range) {
  if (!v.allFinite()) throw Error(Errc::kInvalidArgument, "heatmap values must be finite");
  if (range) {
    if (!(*range >= 0.0) || !std::isfinite(*range)) {
      throw Error(Errc::kInvalidArgument, "heatmap range must be finite and >= 0");
    }
    return *range;
  }
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Scaled cell value in [-1, 1].
double unit(double v, double m) { return m > 0.0 ? std::clamp(v / m, -1.0, 1.0) : 0.0; }

int level(double u) { return static_cast<int>(std::lround(255.0 * (u + 1.0) / 2.0)); }

template <class Cell>
std::string render(const char* magic, const RowMatrix& v, std::size_t scale, Cell cell) {
  if (scale < 1) throw Error(Errc::kInvalidArgument, "scale must be >= 1");
  std::ostringstream os;
  os << magic << '\n' << v.cols() * scale << ' ' << v.rows() * scale << "\n255\n";
  // plain netpbm readers expect lines of at most 70 characters
  std::size_t width = 0;
  auto put = [&](const std::string& tok) {
    if (width > 0 && width + 1 + tok.size() > 70) {
      os << '\n';
      width = 0;
    }
    if (width > 0) {
      os << ' ';
      ++width;
    }
    os << tok;
    width += tok.size();
  };
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < v.cols(); ++j) cells.push_back(cell(v(i, j)));
    for (std::size_t si = 0; si < scale; ++si) {
      for (const std::string& c : cells) {
        for (std::size_t sj = 0; sj < scale; ++sj) put(c);
      }
      os << '\n';
      width = 0;
    }
  }
  return os.str();
}

}  // namespace

std::string format_pgm(const RowMatrix& values, std::size_t scale, std::optional<double> range) {
  const double m = half_range(values, range);
  return render("P2", values, scale, [m](double v) { return std::to_string(level(unit(v, m))); });
}

std::string format_ppm(const RowMatrix& values, std::size_t scale, std::optional<double> range) {
  const double m = half_range(values, range);
  return render("P3", values, scale, [m](double v) {
    const double u = unit(v, m);
    // fade the two channels that are not the sign's colour
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(u))));
    const int r = u < 0.0 ? fade : 255;
    const int b = u > 0.0 ? fade : 255;
    return std::to_string(r) + ' ' + std::to_string(fade) + ' ' + std::to_string(b);
  });
}

std::vector<ReportFile> render_report(const VoltageGrid& grid, const VoltageGrid* target,
                                      std::size_t scale) {
  std::vector<ReportFile> out;
  std::ostringstream sum;
  double m = grid.max_abs();
  if (target) {
    if (target->rows() != grid.rows() || target->cols() != grid.cols()) {
      throw Error(Errc::kDimensionMismatch, "grid and target sizes differ");
    }
    m = std::max(m, target->max_abs());
  }
  sum << "rows: " << grid.rows() << "\ncols: " << grid.cols() << '\n';
  sum << "color_range: " << text::format_exact(m) << '\n';
  sum << "grid_max_abs: " << text::format_exact(grid.max_abs()) << '\n';
  out.push_back({"grid.pgm", format_pgm(grid.matrix(), scale, m)});
  out.push_back({"grid.ppm", format_ppm(grid.matrix(), scale, m)});
  if (target) {
    const RowMatrix err = grid.matrix() - target->matrix();
    const ErrorStats st = voltage_error(grid, *target, default_v_ref(*target));
    sum << "v_ref: " << text::format_exact(default_v_ref(*target)) << '\n';
    sum << "mean_abs_error_pct: " << text::format_exact(st.mean_abs_error_pct) << '\n';
    sum << "max_abs_error_pct: " << text::format_exact(st.max_abs_error_pct) << '\n';
    out.push_back({"target.pgm", format_pgm(target->matrix(), scale, m)});
    out.push_back({"target.ppm", format_ppm(target->matrix(), scale, m)});
    // error images use their own range so small errors stay visible
    sum << "error_range: " << text::format_exact(err.size() ? err.cwiseAbs().maxCoeff() : 0.0) << '\n';
    out.push_back({"error.pgm", format_pgm(err, scale)});
    out.push_back({"error.ppm", format_ppm(err, scale)});
  }
  out.push_back({"summary.txt", sum.str()});
  return out;
}

}  // namespace morph
