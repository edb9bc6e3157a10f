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
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

using namespace morph;

namespace {

// Independent dense nodal solve. Topology written out here from the device
// description, not taken from CrossbarNetwork.
VoltageGrid brute_force(const CrossbarConfig& c, const DriveAssignment& d) {
  const std::size_t n = c.n_rows, m = c.n_cols, p = n * m;
  const std::size_t nodes = 3 * p + n + m;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nodes, nodes);
  auto link = [&](std::size_t a, std::size_t b, double s) {
    g(a, a) += s;
    g(b, b) += s;
    g(a, b) -= s;
    g(b, a) -= s;
  };
  auto R = [&](std::size_t i, std::size_t j) { return i * m + j; };
  auto M = [&](std::size_t i, std::size_t j) { return p + i * m + j; };
  auto C = [&](std::size_t i, std::size_t j) { return 2 * p + i * m + j; };
  const double gs = 1.0 / c.r_segment, gl = c.g_leak * c.blocker_factor;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      link(R(i, j), M(i, j), 2 * c.g_pixel);
      link(M(i, j), C(i, j), 2 * c.g_pixel);
      if (j + 1 < m && gl > 0) link(M(i, j), M(i, j + 1), gl);
      if (i + 1 < n && gl > 0) link(M(i, j), M(i + 1, j), gl);
      if (j + 1 < m) link(R(i, j), R(i, j + 1), gs);
      if (i + 1 < n) link(C(i, j), C(i + 1, j), gs);
    }
    link(3 * p + i, R(i, 0), gs);
  }
  for (std::size_t j = 0; j < m; ++j) link(3 * p + n + j, C(0, j), gs);

  std::map<std::size_t, double> fixed;
  for (std::size_t i = 0; i < n; ++i)
    if (d.rows[i]) fixed[3 * p + i] = *d.rows[i];
  for (std::size_t j = 0; j < m; ++j)
    if (d.cols[j]) fixed[3 * p + n + j] = *d.cols[j];
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < nodes; ++k)
    if (!fixed.count(k)) free.push_back(k);
  Eigen::MatrixXd a(free.size(), free.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free.size());
  for (std::size_t r = 0; r < free.size(); ++r) {
    for (std::size_t s = 0; s < free.size(); ++s) a(r, s) = g(free[r], free[s]);
    for (const auto& [k, v] : fixed) rhs(r) -= g(free[r], k) * v;
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(rhs);
  std::vector<double> pot(nodes);
  for (const auto& [k, v] : fixed) pot[k] = v;
  for (std::size_t r = 0; r < free.size(); ++r) pot[free[r]] = x(r);
  VoltageGrid out(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = pot[R(i, j)] - pot[C(i, j)];
  return out;
}

DriveAssignment random_drive(std::size_t n, std::size_t m, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::bernoulli_distribution coin(0.6);
  DriveAssignment d = DriveAssignment::floating(n, m);
  for (auto& r : d.rows)
    if (coin(gen)) r = u(gen);
  for (auto& c : d.cols)
    if (coin(gen)) c = u(gen);
  if (d.driven_count() == 0) d.rows[0] = 1.0;
  return d;
}

double max_diff(const VoltageGrid& a, const VoltageGrid& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("crossbar") {
  TEST_CASE("topology counts") {
    CrossbarConfig one;
    one.n_rows = one.n_cols = 1;
    const CrossbarNetwork n1(one);
    CHECK(n1.node_count() == 5);
    CHECK(n1.leak_edge_count() == 0);

    const CrossbarNetwork n6(CrossbarConfig{});
    CHECK(n6.node_count() == 120);
    CHECK(n6.leak_edge_count() == 60);
    // 2 pixel halves * 36 + 60 leak + 6*6 row links + 6*6 column links
    CHECK(n6.edges().size() == 72 + 60 + 36 + 36);
  }

  TEST_CASE("blocker factor scales only leak conductances") {
    CrossbarConfig a, b;
    a.blocker_factor = 1.0;
    b.blocker_factor = 0.5;
    const CrossbarNetwork na(a), nb(b);
    REQUIRE(na.edges().size() == nb.edges().size());
    std::size_t halved = 0;
    for (std::size_t e = 0; e < na.edges().size(); ++e) {
      CHECK(na.edges()[e].a == nb.edges()[e].a);
      CHECK(na.edges()[e].b == nb.edges()[e].b);
      if (na.edges()[e].g != nb.edges()[e].g) {
        CHECK(nb.edges()[e].g == doctest::Approx(0.5 * na.edges()[e].g));
        ++halved;
      }
    }
    CHECK(halved == na.leak_edge_count());
  }

  TEST_CASE("1x1 ladder matches hand nodal analysis") {
    CrossbarConfig c;
    c.n_rows = c.n_cols = 1;
    c.r_segment = 25.0;
    const CrossbarNetwork net(c);
    DriveAssignment d = DriveAssignment::floating(1, 1);
    d.rows[0] = 1.0;
    d.cols[0] = 0.0;
    // series chain: r_segment, 1/(2 g_pixel) twice, r_segment
    const double expect = 1.0 / (1.0 + 2.0 * c.g_pixel * c.r_segment);
    CHECK(solve_pixels(net, d)(0, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(attenuation_at(net, 0, 0) == doctest::Approx(expect).epsilon(1e-12));

    c.r_segment = 1e-6;
    CHECK(solve_pixels(CrossbarNetwork(c), d)(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("2x2 sneak path carries a third of the drive") {
    CrossbarConfig c;
    c.n_rows = c.n_cols = 2;
    c.g_leak = 0.0;
    c.r_segment = 1e-9 / c.g_pixel;
    DriveAssignment d = DriveAssignment::floating(2, 2);
    d.rows[0] = 1.0;
    d.cols[0] = 0.0;
    const VoltageGrid v = solve_pixels(CrossbarNetwork(c), d);
    CHECK(v(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(v(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(v(1, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-6));
    CHECK(v(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  }

  TEST_CASE("small arrays match the brute-force dense solve") {
    std::mt19937_64 gen(7);
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t m = 1; m <= 3; ++m) {
        for (int trial = 0; trial < 6; ++trial) {
          CrossbarConfig c;
          c.n_rows = n;
          c.n_cols = m;
          c.r_segment = std::exp(std::uniform_real_distribution<double>(0.0, 6.0)(gen));
          c.g_leak = trial % 3 == 0 ? 0.0 : 1e-4;
          c.blocker_factor = trial % 2 ? 1.0 : 0.2;
          const DriveAssignment d = random_drive(n, m, gen);
          const CrossbarNetwork net(c);
          const NodePotentials pots = solve_dc(net, d);
          CHECK(pots.kcl_residual < 1e-9);
          CHECK(max_diff(pixel_voltages(net, pots), brute_force(c, d)) < 1e-9);
        }
      }
    }
  }

  TEST_CASE("driven contacts are pinned and KCL holds on 6x6") {
    std::mt19937_64 gen(3);
    const CrossbarNetwork net(CrossbarConfig{});
    for (int t = 0; t < 10; ++t) {
      const DriveAssignment d = random_drive(6, 6, gen);
      const NodePotentials pots = solve_dc(net, d);
      CHECK(pots.kcl_residual < 1e-9);
      for (std::size_t i = 0; i < 6; ++i)
        if (d.rows[i]) CHECK(pots.potentials[net.row_contact(i)] == *d.rows[i]);
      for (std::size_t j = 0; j < 6; ++j)
        if (d.cols[j]) CHECK(pots.potentials[net.col_contact(j)] == *d.cols[j]);
    }
  }

  TEST_CASE("large arrays use the iterative path and still satisfy KCL") {
    CrossbarConfig c;
    c.n_rows = 20;
    c.n_cols = 18;
    const CrossbarNetwork net(c);
    std::mt19937_64 gen(5);
    const DriveAssignment d = random_drive(20, 18, gen);
    CHECK(solve_dc(net, d).kcl_residual < 1e-9);
  }

  TEST_CASE("solution is linear in the drive") {
    const CrossbarNetwork net(CrossbarConfig{});
    std::mt19937_64 gen(11);
    DriveAssignment d1 = random_drive(6, 6, gen);
    DriveAssignment d2 = d1, mix = d1;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a = 0.7, b = -1.3;
    for (std::size_t i = 0; i < 6; ++i) {
      if (d1.rows[i]) {
        d2.rows[i] = u(gen);
        mix.rows[i] = a * *d1.rows[i] + b * *d2.rows[i];
      }
      if (d1.cols[i]) {
        d2.cols[i] = u(gen);
        mix.cols[i] = a * *d1.cols[i] + b * *d2.cols[i];
      }
    }
    const auto p1 = solve_dc(net, d1).potentials, p2 = solve_dc(net, d2).potentials;
    const auto pm = solve_dc(net, mix).potentials;
    double scale = 0.0;
    for (double x : pm) scale = std::max(scale, std::abs(x));
    for (std::size_t k = 0; k < pm.size(); ++k) CHECK(std::abs(pm[k] - (a * p1[k] + b * p2[k])) <= 1e-9 * scale);
  }

  TEST_CASE("swapping row and column drives negates the grid") {
    CrossbarConfig c;
    c.n_rows = c.n_cols = 4;
    const CrossbarNetwork net(c);
    DriveAssignment d = DriveAssignment::floating(4, 4), s = d;
    d.rows = {0.3, std::nullopt, -0.2, 0.9};
    d.cols = {std::nullopt, 0.5, 0.1, std::nullopt};
    s.rows = d.cols;
    s.cols = d.rows;
    const VoltageGrid a = solve_pixels(net, d), b = solve_pixels(net, s);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(b(j, i) == doctest::Approx(-a(i, j)).epsilon(1e-10));
  }

  TEST_CASE("zero drive gives zero potentials; no drive is singular") {
    const CrossbarNetwork net(CrossbarConfig{});
    DriveAssignment d = DriveAssignment::floating(6, 6);
    CHECK_THROWS_AS(solve_dc(net, d), Error);
    try {
      solve_dc(net, d);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kSingularSystem);
    }
    for (auto& r : d.rows) r = 0.0;
    for (auto& c : d.cols) c = 0.0;
    for (double p : solve_dc(net, d).potentials) CHECK(p == 0.0);
  }

  TEST_CASE("ideal electrodes without leakage give row minus column") {
    CrossbarConfig c;
    c.g_leak = 0.0;
    c.r_segment = 1e-12;
    const CrossbarNetwork net(c);
    DriveAssignment d = DriveAssignment::floating(6, 6);
    for (std::size_t i = 0; i < 6; ++i) {
      d.rows[i] = 0.1 * double(i) - 0.2;
      d.cols[i] = 0.3 - 0.07 * double(i);
    }
    const VoltageGrid v = solve_pixels(net, d);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) CHECK(v(i, j) == doctest::Approx(*d.rows[i] - *d.cols[j]).epsilon(1e-8));
  }

  TEST_CASE("dpa representability") {
    CHECK(dpa_representable(VoltageGrid(6, 6)));
    VoltageGrid t(4, 5);
    const double a[] = {0.2, -0.4, 1.0, 0.0}, b[] = {0.1, 0.5, -0.3, 0.0, 0.7};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 5; ++j) t(i, j) = a[i] - b[j];
    CHECK(dpa_representable(t));
    VoltageGrid shifted = t;
    shifted.matrix().array() += 0.37;
    CHECK(dpa_representable(shifted));

    VoltageGrid eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    CHECK_FALSE(dpa_representable(eye));
    eye.matrix().array() += 0.37;
    CHECK_FALSE(dpa_representable(eye));
    CHECK_THROWS_AS(dpa_drive(eye), Error);
  }

  TEST_CASE("dpa drive reproduces representable targets with ideal electrodes") {
    CrossbarConfig c;
    c.g_leak = 0.0;
    c.r_segment = 1e-12;
    const CrossbarNetwork net(c);
    VoltageGrid stripes(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) stripes(i, j) = i % 2 ? -1.0 : 1.0;
    CHECK(max_diff(solve_pixels(net, dpa_drive(stripes)), stripes) < 1e-8);

    VoltageGrid zero(6, 6);
    const DriveAssignment dz = dpa_drive(zero);
    CHECK(dz.driven_count() == 12);
    CHECK_FALSE(dz.carries_current());
  }

  TEST_CASE("attenuation map") {
    CrossbarConfig c;
    c.g_leak = 0.0;
    const RowMatrix att = attenuation_map(CrossbarNetwork(c));
    for (Eigen::Index i = 0; i < att.rows(); ++i) {
      for (Eigen::Index j = 0; j < att.cols(); ++j) {
        CHECK(att(i, j) > 0.0);
        CHECK(att(i, j) <= 1.0);
        if (j + 1 < att.cols()) CHECK(att(i, j + 1) < att(i, j));
        if (i + 1 < att.rows()) CHECK(att(i + 1, j) < att(i, j));
      }
    }
    c.r_segment = 1e-12;
    CHECK(attenuation_map(CrossbarNetwork(c)).minCoeff() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(attenuation_at(CrossbarNetwork(c), 2, 3, -0.5) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("calibration hits the far-corner fraction") {
    const CrossbarConfig cal = calibrate_r_segment(CrossbarConfig{}, 0.796);
    CHECK(attenuation_at(CrossbarNetwork(cal), 5, 5) == doctest::Approx(0.796).epsilon(1e-9));
    CHECK(cal.g_pixel == CrossbarConfig{}.g_pixel);
  }

  TEST_CASE("compensate") {
    VoltageGrid t(2, 2, 0.4);
    RowMatrix att = RowMatrix::Constant(2, 2, 0.5);
    CHECK(compensate(t, att) == VoltageGrid(2, 2, 0.8));
    CHECK(compensate(t, RowMatrix::Ones(2, 2)) == t);
    VoltageGrid far(6, 6);
    far(5, 5) = 0.796;
    RowMatrix a6 = RowMatrix::Ones(6, 6);
    a6(5, 5) = 0.796;
    CHECK(compensate(far, a6)(5, 5) == doctest::Approx(1.0));
    att(1, 0) = 0.0;
    CHECK_THROWS_AS(compensate(t, att), Error);
  }

  TEST_CASE("voltage error statistics") {
    VoltageGrid target(6, 6), measured(6, 6);
    ErrorStats z = voltage_error(measured, target, 1.0);
    CHECK(z.mean_abs_error_pct == 0.0);
    CHECK(z.max_abs_error_pct == 0.0);
    measured(3, 4) = 0.372;
    const ErrorStats one = voltage_error(measured, target, 1.0);
    CHECK(one.max_abs_error_pct == doctest::Approx(37.2));
    CHECK(one.mean_abs_error_pct == doctest::Approx(37.2 / 36.0));
    CHECK(one.per_pixel_error(3, 4) == doctest::Approx(0.372));
    const ErrorStats off = voltage_error(VoltageGrid(6, 6, 0.1), target, 1.0);
    CHECK(off.mean_abs_error_pct == doctest::Approx(10.0));
    CHECK(off.max_abs_error_pct == doctest::Approx(10.0));
    CHECK_THROWS_AS(voltage_error(VoltageGrid(5, 6), target, 1.0), Error);
    CHECK(default_v_ref(target) == 1.0);
    target(0, 0) = -2.5;
    CHECK(default_v_ref(target) == 2.5);
  }

  TEST_CASE("addressing complexity") {
    CHECK(addressing_complexity(6).direct == 36);
    CHECK(addressing_complexity(6).passive == 12);
    CHECK(addressing_complexity(1).passive == 2);
    CHECK(addressing_complexity(30).direct == 900);
    CHECK(addressing_complexity(30).passive == 60);
  }

  TEST_CASE("config validation") {
    CrossbarConfig c;
    c.blocker_factor = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.n_rows = 0;
    CHECK_THROWS_AS(CrossbarNetwork{c}, Error);
    c = {};
    c.g_leak = -1;
    CHECK_THROWS_AS(c.validate(), Error);
  }
}
