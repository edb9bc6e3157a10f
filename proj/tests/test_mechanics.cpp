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

#include "morphsurf/errors.hpp"
#include "morphsurf/mechanics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace morph;

namespace {

const PlateSolver& default_solver() {
  static const PlateSolver s(PlateConfig::square(6));
  return s;
}

VoltageGrid random_grid(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VoltageGrid v(6, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) v(i, j) = u(gen);
  return v;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::size_t centre_index(const Heightfield& f) { return (f.ny / 2) * f.nx + f.nx / 2; }

}  // namespace

TEST_SUITE("mechanics") {
  TEST_CASE("strip curvature") {
    StripConfig c;
    CHECK(strip_curvature(0.0, c) == 0.0);
    CHECK(strip_curvature(2.0, c) == doctest::Approx(2.0 * strip_curvature(1.0, c)));
    CHECK(strip_curvature(-1.0, c) == doctest::Approx(-strip_curvature(1.0, c)));

    // Equal layers: 6 eps (1+m)^2 / (h (3(1+m)^2 + (1+mn)(m^2 + 1/(mn)))) with
    // m = n = 1 evaluates to 24 eps / (16 h) = 1.5 eps / h.
    c.h_sub = c.h_ppy = 0.05;
    c.modulus_ratio = 1.0;
    CHECK(strip_curvature(0.8, c) == doctest::Approx(1.5 * c.beta * 0.8 / 0.1).epsilon(1e-12));

    // General case, hand evaluation for m = 7.5, n = 2.
    StripConfig d;
    d.modulus_ratio = 2.0;
    const double m = 7.5, n = 2.0, h = 0.102;
    const double expect =
        6.0 * d.beta * (1 + m) * (1 + m) / (h * (3 * (1 + m) * (1 + m) + (1 + m * n) * (m * m + 1 / (m * n))));
    CHECK(strip_curvature(1.0, d) == doctest::Approx(expect).epsilon(1e-12));

    c.h_ppy = 0.0;
    CHECK_THROWS_AS(strip_curvature(1.0, c), Error);
  }

  TEST_CASE("default strip reaches about a tenth of its length at 1 V") {
    const StripConfig c;
    const TipPath p = strip_tip_path({1.0}, c);
    CHECK(p.tips[0][1] / c.length == doctest::Approx(0.1).epsilon(0.15));
  }

  TEST_CASE("strip tip path") {
    StripConfig c;
    CHECK(strip_tip_path({0.7, 0.7}, c).trajectory_length == 0.0);
    const TipPath zero = strip_tip_path({0.0}, c);
    CHECK(zero.tips[0][0] == c.length);
    CHECK(zero.tips[0][1] == 0.0);

    // small angle: tip rises by kappa L^2 / 2
    const double v = 0.01;
    const double k = strip_curvature(v, c);
    REQUIRE(k * c.length < 0.01);
    const TipPath small = strip_tip_path({0.0, v}, c);
    CHECK(small.trajectory_length == doctest::Approx(k * c.length * c.length / 2).epsilon(0.01));

    // kappa L = pi closes a half circle
    const double v_pi = std::numbers::pi / (c.length * strip_curvature(1.0, c));
    const TipPath half = strip_tip_path({v_pi}, c);
    const double kp = strip_curvature(v_pi, c);
    CHECK(std::abs(half.tips[0][0]) < 1e-9);
    CHECK(half.tips[0][1] == doctest::Approx(2.0 / kp).epsilon(1e-12));
    CHECK_THROWS_AS(strip_tip_path({}, c), Error);
  }

  TEST_CASE("zero voltage gives a flat plate") {
    const Heightfield f = default_solver().solve(VoltageGrid(6, 6));
    CHECK(max_abs(f.z) == 0.0);
    CHECK(max_abs(f.dx) == 0.0);
    CHECK(max_abs(f.dy) == 0.0);
  }

  TEST_CASE("uniform voltage makes a symmetric bowl") {
    const Heightfield f = default_solver().solve(VoltageGrid(6, 6, 1.0));
    const std::size_t n = f.nx;
    REQUIRE(f.ny == n);
    const double c0 = f.z[0];
    CHECK(c0 > 0.0);
    CHECK(f.z[n - 1] == doctest::Approx(c0).epsilon(1e-6));
    CHECK(f.z[n * (n - 1)] == doctest::Approx(c0).epsilon(1e-6));
    CHECK(f.z[n * n - 1] == doctest::Approx(c0).epsilon(1e-6));
    CHECK(std::abs(f.z[centre_index(f)]) < 1e-12);
    // 4-fold symmetry everywhere
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(f.z[i * n + j] == doctest::Approx(f.z[j * n + i]).epsilon(1e-8));
  }

  TEST_CASE("superposition") {
    const VoltageGrid v1 = random_grid(1), v2 = random_grid(2);
    const double a = 0.6, b = -1.7;
    const VoltageGrid mix(a * v1.matrix() + b * v2.matrix());
    const Heightfield f1 = default_solver().solve(v1), f2 = default_solver().solve(v2);
    const Heightfield fm = default_solver().solve(mix);
    const double scale = max_abs(fm.z);
    for (std::size_t k = 0; k < fm.size(); ++k) CHECK(std::abs(fm.z[k] - (a * f1.z[k] + b * f2.z[k])) <= 1e-8 * scale);
  }

  TEST_CASE("rotating the voltages rotates the surface") {
    const VoltageGrid v = random_grid(5);
    VoltageGrid rot(6, 6);
    // quarter turn: new(i, j) = old(5 - j, i)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) rot(i, j) = v(5 - j, i);
    const Heightfield f = default_solver().solve(v, false), g = default_solver().solve(rot, false);
    const std::size_t n = f.nx;
    const double scale = max_abs(f.z);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(g.z[i * n + j] - f.z[(n - 1 - j) * n + i]) <= 1e-9 * scale);
  }

  TEST_CASE("centre node stays clamped") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Heightfield f = default_solver().solve(random_grid(10 + s));
      CHECK(std::abs(f.z[centre_index(f)]) < 1e-12);
    }
  }

  TEST_CASE("mesh convergence of the sampled surface") {
    PlateConfig fine = PlateConfig::square(6);
    fine.grid_n = 121;
    const VoltageGrid v(6, 6, 1.0);
    const Heightfield a = sample_nodes(default_solver().solve(v, false), 20);
    const Heightfield b = sample_nodes(PlateSolver(fine).solve(v, false), 20);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      num += (a.z[k] - b.z[k]) * (a.z[k] - b.z[k]);
      den += b.z[k] * b.z[k];
    }
    CHECK(std::sqrt(num / den) < 0.01);
  }

  TEST_CASE("positive pixel bends towards +z over its footprint") {
    VoltageGrid v(6, 6);
    v(2, 3) = 1.0;
    const PlateConfig& c = default_solver().config();
    const Heightfield f = default_solver().solve(v, false);
    const double x0 = 3 * c.pixel_pitch + (c.pixel_pitch - c.active_width) / 2;
    const double y0 = 2 * c.pixel_pitch + (c.pixel_pitch - c.active_width) / 2;
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (f.x[k] > x0 && f.x[k] < x0 + c.active_width && f.y[k] > y0 && f.y[k] < y0 + c.active_width) {
        sum += f.z[k];
        ++count;
      }
    }
    REQUIRE(count > 0);
    CHECK(sum / count > 0.0);
  }

  TEST_CASE("one-pixel-wide plate follows the constant-curvature arc") {
    PlateConfig c;
    c.pixels_x = 6;
    c.pixels_y = 1;
    c.active_width = c.pixel_pitch;  // continuous strip
    c.kappa_per_volt = strip_curvature(1.0, StripConfig{});
    const Heightfield f = PlateSolver(c).solve(VoltageGrid(1, 6, 1.0), false);
    const double k = c.kappa_per_volt, xc = c.side_x() / 2;
    const std::size_t row = f.ny / 2;
    double worst = 0.0;
    for (std::size_t i = 0; i < f.nx; ++i) {
      const double x = f.x[row * f.nx + i] - xc;
      if (std::abs(x) < c.pixel_pitch / 2) continue;  // relative error is ill-posed near the clamp
      const double arc = (1.0 - std::cos(k * x)) / k;
      worst = std::max(worst, std::abs(f.z[row * f.nx + i] - arc) / arc);
    }
    CHECK(worst < 0.02);
  }

  TEST_CASE("eigencurvature is zero in the gaps") {
    const VoltageGrid v(6, 6, 1.0);
    const std::vector<double> kap = default_solver().eigencurvature(v);
    const PlateConfig& c = default_solver().config();
    const Heightfield f = default_solver().solve(VoltageGrid(6, 6), false);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double u = std::fmod(f.x[k], c.pixel_pitch);
      const double gap = (c.pixel_pitch - c.active_width) / 2;
      if (u > 1e-9 && u < gap - 1e-9) CHECK(kap[k] == 0.0);
    }
    CHECK(*std::max_element(kap.begin(), kap.end()) == doctest::Approx(c.kappa_per_volt));
  }

  TEST_CASE("sample_nodes") {
    const Heightfield f = default_solver().solve(random_grid(3));
    const Heightfield same = sample_nodes(f, f.nx);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(same.z[k] == doctest::Approx(f.z[k]).epsilon(1e-12));

    Heightfield lin = f;
    for (std::size_t k = 0; k < lin.size(); ++k) {
      lin.z[k] = 0.3 * lin.x[k] - 0.1 * lin.y[k] + 2.0;
      lin.dx[k] = 5.0;
    }
    const Heightfield s = sample_nodes(lin, 20);
    CHECK(s.nx == 20);
    CHECK(s.ny == 20);
    CHECK(s.x.front() == f.x.front());
    CHECK(s.x[19] == doctest::Approx(f.x[f.nx - 1]));
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(s.z[k] == doctest::Approx(0.3 * s.x[k] - 0.1 * s.y[k] + 2.0).epsilon(1e-12));
      CHECK(s.dx[k] == doctest::Approx(5.0));
    }
    CHECK_THROWS_AS(sample_nodes(f, 1), Error);
    CHECK_THROWS_AS(sample_nodes(f, f.nx + 1), Error);
  }

  TEST_CASE("heightfield export") {
    const Heightfield f = sample_nodes(default_solver().solve(random_grid(4)), 3);
    const std::string csv = format_heightfield_csv(f);
    CHECK(csv.substr(0, csv.find('\n')) == "x,y,z,dx,dy,dz");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
    const std::string mat = format_heightfield_matrix(f);
    CHECK(std::count(mat.begin(), mat.end(), '\n') == 3);
  }

  TEST_CASE("plate config validation") {
    PlateConfig c = PlateConfig::square(6);
    c.grid_n = 60;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PlateConfig::square(6);
    c.nu = 0.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PlateConfig::square(6);
    c.active_width = 10.0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_THROWS_AS(default_solver().solve(VoltageGrid(5, 6)), Error);
  }
}
