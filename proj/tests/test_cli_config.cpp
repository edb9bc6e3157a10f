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

#include "morphsurf/config.hpp"
#include "morphsurf/control.hpp"
#include "morphsurf/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace morph;

namespace {

Errc code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInvalidArgument;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped defaults equal the built-in defaults") {
    const ExperimentConfig file = load_config(MORPHSURF_SOURCE_DIR "/configs/default.cfg");
    CHECK(format_config(file) == format_config(ExperimentConfig{}));
    CHECK(file.auto_r_segment);
    CHECK(file.forward_spec().input_dim == 36);
    CHECK(file.forward_spec().output_dim == 400);
    CHECK(file.inverse_spec().input_dim == 400);
    CHECK(file.inverse_spec().hidden_dims == std::vector<std::size_t>{901, 700, 550, 300, 180});
  }

  TEST_CASE("format and parse round trip") {
    ExperimentConfig c;
    c.crossbar.blocker_factor = 1.0;
    c.auto_r_segment = false;
    c.crossbar.r_segment = 12.25;
    c.dynamics.tau_float = std::numeric_limits<double>::infinity();
    c.scan.protocol = Protocol::kDpa;
    c.sim.adjacency_cap.reset();
    c.mode = DisplacementMode::kTotal;
    c.forward.hidden_dims = {8, 4};
    c.set_seed(77);
    const ExperimentConfig back = parse_config(format_config(c));
    CHECK(format_config(back) == format_config(c));
    CHECK(std::isinf(back.dynamics.tau_float));
    CHECK(back.dataset_seed == 77);
    CHECK(back.forward.seed == 77);
    CHECK(back.inverse.seed == 78);
    CHECK_FALSE(back.sim.adjacency_cap.has_value());
    CHECK(back.crossbar.r_segment == 12.25);
  }

  TEST_CASE("overrides and comments") {
    const ExperimentConfig c = parse_config(
        "# comment\n[crossbar]\nblocker_factor = 1.0  # no blockers\n\n[scan]\nprotocol=dpa\ncycles = 4\n"
        "[plate]\npixels_per_side = 4\n[crossbar]\nn_rows = 4\nn_cols = 4\n");
    CHECK(c.crossbar.blocker_factor == 1.0);
    CHECK(c.scan.protocol == Protocol::kDpa);
    CHECK(c.scan.cycles == 4);
    CHECK(c.n_voltages() == 16);
    CHECK(c.forward_spec().input_dim == 16);
  }

  TEST_CASE("rejections carry the line number") {
    CHECK(code_of("[crossbar]\nfoo = 1\n") == Errc::kConfigError);
    CHECK(message_of("[crossbar]\n\nfoo = 1\n").find("line 3") != std::string::npos);
    CHECK(code_of("[nope]\n") == Errc::kConfigError);
    CHECK(code_of("n_rows = 3\n") == Errc::kConfigError);
    CHECK(code_of("[crossbar]\nn_rows\n") == Errc::kConfigError);
    CHECK(code_of("[crossbar]\nn_rows = 2.5\n") == Errc::kConfigError);
    CHECK(code_of("[crossbar]\ng_pixel = abc\n") == Errc::kConfigError);
    CHECK(code_of("[scan]\ncompensate = maybe\n") == Errc::kConfigError);
    CHECK(code_of("[dynamics]\ntau_charge = inf\n") == Errc::kConfigError);
    CHECK(code_of("[crossbar]\nblocker_factor = 0\n") == Errc::kConfigError);
    CHECK(code_of("[crossbar]\nn_rows = 5\n") == Errc::kConfigError);  // plate still 6x6
    CHECK(code_of("[mlp]\nforward_hidden = 3,,4\n") == Errc::kConfigError);
    CHECK(code_of("[dataset]\nmode = xyz\n") == Errc::kConfigError);
    CHECK(code_of("[crossbar\n") == Errc::kConfigError);
    CHECK_NOTHROW(parse_config("[dynamics]\ntau_float = inf\ntau_sneak = inf\n"));
    CHECK_THROWS_AS(load_config("/nonexistent/morphsurf.cfg"), Error);
  }

  TEST_CASE("calibrated electrodes") {
    const ExperimentConfig c;
    const CrossbarConfig xb = c.resolved_crossbar();
    CHECK(attenuation_at(CrossbarNetwork(xb), 5, 5) == doctest::Approx(0.796).epsilon(1e-9));
    ExperimentConfig fixed;
    fixed.auto_r_segment = false;
    CHECK(fixed.resolved_crossbar().r_segment == fixed.crossbar.r_segment);
  }
}

TEST_SUITE("control") {
  TEST_CASE("commands are clamped and snapped") {
    const VoltageGrid g = to_command({1.7, -3.0, 0.33, -0.024, 0.026, -0.0}, 2, 3);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == -1.0);
    CHECK(g(0, 2) == doctest::Approx(0.35));
    CHECK(g(1, 0) == 0.0);
    CHECK_FALSE(std::signbit(g(1, 0)));
    CHECK(g(1, 1) == doctest::Approx(0.05));
    const VoltageGrid raw = to_command({0.33, 2.0}, 1, 2, false);
    CHECK(raw(0, 0) == 0.33);
    CHECK(raw(0, 1) == 1.0);
    CHECK_THROWS_AS(to_command({0.1}, 1, 2), Error);
    CHECK_THROWS_AS(to_command({0.1, std::nan("")}, 1, 2), Error);
  }

  TEST_CASE("surface r2") {
    const std::vector<double> t{1.0, 2.0, 3.0};
    CHECK(surface_r2(t, t) == 1.0);
    CHECK(surface_r2({1.0, 2.0, 2.0}, t) == doctest::Approx(0.5));
    CHECK_THROWS_AS(surface_r2({1.0}, t), Error);
  }

  TEST_CASE("closed loop plumbing") {
    SimConfig sim;
    sim.plate.grid_n = 31;
    sim.sample_n = 6;
    const PlateSolver solver(sim.plate);
    MlpSpec s;
    s.input_dim = 36;
    s.hidden_dims = {8};
    s.output_dim = 36;
    const MlpModel inv = init(s);
    VoltageGrid v(6, 6);
    v(1, 2) = 0.6;
    v(4, 4) = -0.3;
    const std::vector<double> target = simulate_surface(solver, sim, DisplacementMode::kZ, v);
    const ClosedLoopResult r = closed_loop(inv, solver, sim, DisplacementMode::kZ, target);
    CHECK(r.achieved == simulate_surface(solver, sim, DisplacementMode::kZ, r.command));
    CHECK(r.r2 == surface_r2(r.achieved, target));
    CHECK(r.error.signed_error.size() == 36);
    const auto [lo, hi] = std::minmax_element(target.begin(), target.end());
    CHECK(r.height_range == *hi - *lo);
    const PointCloud cloud = surface_cloud(solver, 6, target);
    CHECK(cloud.points.front().x() == 0.0);
    CHECK(cloud.points.back().x() == doctest::Approx(54.0));
    CHECK(cloud.points[7].z() == target[7]);
  }
}
