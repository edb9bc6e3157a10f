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
#include "morphsurf/kernels.hpp"
#include "morphsurf/mlp.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace morph;

namespace {

MlpSpec small_spec(std::size_t in, std::vector<std::size_t> hidden, std::size_t out, std::uint64_t seed) {
  MlpSpec s;
  s.input_dim = in;
  s.hidden_dims = std::move(hidden);
  s.output_dim = out;
  s.seed = seed;
  return s;
}

RowMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

double& param(MlpModel& m, std::size_t layer, std::size_t k, bool bias) {
  return bias ? m.layers[layer].b[k] : m.layers[layer].wt[k];
}

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("init is deterministic and chains shapes") {
    const MlpSpec f = MlpSpec::forward_model();
    const MlpModel a = init(f), b = init(f);
    const std::size_t dims[] = {36, 73, 300, 580, 880, 1200, 400};
    REQUIRE(a.layers.size() == 6);
    for (std::size_t l = 0; l < 6; ++l) {
      CHECK(a.layers[l].in == dims[l]);
      CHECK(a.layers[l].out == dims[l + 1]);
      CHECK(a.layers[l].wt == b.layers[l].wt);
    }
    const MlpModel inv = init(MlpSpec::inverse_model());
    CHECK(inv.layers.front().in == 400);
    CHECK(inv.layers.front().out == 901);
    CHECK(inv.layers.back().out == 36);

    MlpSpec other = f;
    other.seed = 2;
    CHECK(init(other).layers[0].wt != a.layers[0].wt);

    const MlpModel tiny = init(small_spec(3, {1}, 2, 1));
    CHECK(predict(tiny, {1.0, 2.0, 3.0}).size() == 2);
  }

  TEST_CASE("MlpSpec validation") {
    CHECK_THROWS_AS(init(small_spec(0, {3}, 1, 1)), Error);
    CHECK_THROWS_AS(init(small_spec(2, {}, 1, 1)), Error);
    CHECK_THROWS_AS(init(small_spec(2, {0}, 1, 1)), Error);
    MlpSpec s = small_spec(2, {3}, 1, 1);
    s.activation = "tanh";
    CHECK_THROWS_AS(init(s), Error);
  }

  TEST_CASE("hand-set models") {
    MlpModel z = init(small_spec(3, {4}, 2, 1));
    for (auto& l : z.layers) std::fill(l.wt.begin(), l.wt.end(), 0.0);
    z.layers[1].b = {0.25, -7.0};
    CHECK(predict(z, {1.0, -2.0, 3.0}) == std::vector<double>{0.25, -7.0});

    MlpModel id = init(small_spec(1, {1}, 1, 1));
    id.layers[0].wt = {1.0};
    id.layers[0].b = {0.0};
    id.layers[1].wt = {1.0};
    id.layers[1].b = {0.0};
    CHECK(predict(id, {3.0})[0] == 3.0);
    CHECK(predict(id, {-3.0})[0] == 0.0);  // ReLU cuts negatives
    CHECK_THROWS_AS(predict(id, {1.0, 2.0}), Error);
  }

  TEST_CASE("backprop matches central differences") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const std::size_t in = 2 + seed % 5, out = 1 + seed % 4;
      MlpModel m = init(small_spec(in, {3 + seed % 6, 8}, out, seed));
      for (auto& l : m.layers)
        for (double& b : l.b) b = 0.1;
      const RowMatrix xs = random_matrix(7, in, 100 + seed), ys = random_matrix(7, out, 200 + seed);
      Gradients g;
      loss_and_gradient(m, xs, ys, &g);
      const double h = 1e-5;
      double num = 0.0, den = 0.0;
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        for (bool bias : {false, true}) {
          const std::size_t count = bias ? m.layers[l].b.size() : m.layers[l].wt.size();
          for (std::size_t k = 0; k < count; ++k) {
            double& p = param(m, l, k, bias);
            const double saved = p;
            p = saved + h;
            const double up = loss_and_gradient(m, xs, ys, nullptr);
            p = saved - h;
            const double down = loss_and_gradient(m, xs, ys, nullptr);
            p = saved;
            const double fd = (up - down) / (2 * h);
            const double bp = bias ? g.b[l][k] : g.wt[l][k];
            num += (fd - bp) * (fd - bp);
            den += (fd + bp) * (fd + bp);
            CHECK(std::abs(fd - bp) <= 1e-5 * std::max(std::abs(bp), 1e-2));
          }
        }
      }
      CAPTURE(seed);
      CHECK(std::sqrt(num / den) < 1e-5);
    }
  }

  TEST_CASE("gradients agree between kernel variants") {
    if (!kernels::isa_supported(kernels::Isa::kAvx2)) return;
    const kernels::Isa saved = kernels::active_isa();
    const MlpModel m = init(small_spec(9, {17, 33}, 5, 3));
    const RowMatrix xs = random_matrix(37, 9, 1), ys = random_matrix(37, 5, 2);
    Gradients gs, gv;
    kernels::set_isa(kernels::Isa::kScalar);
    const double ls = loss_and_gradient(m, xs, ys, &gs);
    kernels::set_isa(kernels::Isa::kAvx2);
    const double lv = loss_and_gradient(m, xs, ys, &gv);
    kernels::set_isa(saved);
    CHECK(ls == doctest::Approx(lv).epsilon(1e-12));
    for (std::size_t l = 0; l < gs.wt.size(); ++l)
      for (std::size_t k = 0; k < gs.wt[l].size(); ++k) CHECK(gs.wt[l][k] == doctest::Approx(gv.wt[l][k]).epsilon(1e-10).scale(1e-3));
  }

  TEST_CASE("learns a linear map") {
    RowMatrix x(100, 1), y(100, 1);
    for (int i = 0; i < 100; ++i) {
      x(i, 0) = -1.0 + 0.02 * i;
      y(i, 0) = 2.0 * x(i, 0);
    }
    MlpSpec s = small_spec(1, {8}, 1, 4);
    s.max_epochs = 300;
    s.learning_rate = 1e-2;
    MlpModel m = init(s);
    const TrainReport r = train(m, x, y);
    CHECK(r.r2 > 0.999);
    CHECK(r.n_train + r.n_val == 100);
    CHECK(r.epochs <= s.max_epochs);
    CHECK(r.train_loss.size() == r.epochs);
    for (std::size_t e = 1; e < r.train_loss.size(); ++e) CHECK(r.train_loss[e] <= r.train_loss[e - 1]);
    for (std::size_t e = 1; e < r.learning_rate.size(); ++e) CHECK(r.learning_rate[e] <= r.learning_rate[e - 1]);
    CHECK(predict(m, {0.5})[0] == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("training is deterministic") {
    const RowMatrix x = random_matrix(60, 4, 5);
    RowMatrix y(60, 2);
    for (Eigen::Index i = 0; i < 60; ++i) {
      y(i, 0) = std::sin(x(i, 0)) + x(i, 1) * x(i, 2);
      y(i, 1) = x(i, 3) - x(i, 0);
    }
    MlpSpec s = small_spec(4, {16, 16}, 2, 8);
    s.max_epochs = 15;
    MlpModel a = init(s), b = init(s);
    train(a, x, y);
    train(b, x, y);
    CHECK(format_model(a) == format_model(b));
  }

  TEST_CASE("non-finite data aborts training") {
    RowMatrix x = random_matrix(10, 2, 1), y = random_matrix(10, 1, 2);
    y(3, 0) = std::nan("");
    MlpModel m = init(small_spec(2, {3}, 1, 1));
    try {
      train(m, x, y);
      FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kNonFiniteLoss);
    }
    CHECK_THROWS_AS(train(m, random_matrix(1, 2, 1), random_matrix(1, 1, 1)), Error);
    CHECK_THROWS_AS(train(m, random_matrix(5, 2, 1), random_matrix(4, 1, 1)), Error);
  }

  TEST_CASE("r2 and mse") {
    RowMatrix t(3, 1), p(3, 1);
    t << 1, 2, 3;
    p << 1, 2, 2;
    CHECK(r2_score(p, t) == doctest::Approx(0.5));
    CHECK(r2_score(t, t) == 1.0);
    RowMatrix mean_pred = RowMatrix::Constant(3, 1, 2.0);
    CHECK(r2_score(mean_pred, t) == doctest::Approx(0.0));
    CHECK(mse(p, t) == doctest::Approx(1.0 / 3.0));
    CHECK(mse(t.array() + 0.5, t) == doctest::Approx(0.25));

    // constant columns: 1 when matched, 0 otherwise
    RowMatrix t2(3, 2), p2(3, 2);
    t2 << 1, 5, 2, 5, 3, 5;
    p2 << 1, 5, 2, 5, 3, 5;
    CHECK(r2_score(p2, t2) == 1.0);
    p2(0, 1) = 4.0;
    CHECK(r2_score(p2, t2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(r2_score(RowMatrix(3, 1), RowMatrix(3, 2)), Error);
    CHECK_THROWS_AS(mse(RowMatrix(2, 1), RowMatrix(3, 1)), Error);
  }

  TEST_CASE("model files round trip exactly") {
    const RowMatrix x = random_matrix(40, 3, 7), y = random_matrix(40, 2, 8);
    MlpSpec s = small_spec(3, {5, 4}, 2, 9);
    s.max_epochs = 5;
    MlpModel m = init(s);
    TrainOptions o;
    o.fingerprint = "abcdef0123456789";
    train(m, x, y, o);
    const std::string path = (std::filesystem::temp_directory_path() / "morphsurf_model_test.txt").string();
    save_model(m, path);
    const MlpModel back = load_model(path);
    std::remove(path.c_str());
    CHECK(back.training_fingerprint == "abcdef0123456789");
    CHECK(back.spec.seed == 9);
    CHECK(back.spec.hidden_dims == s.hidden_dims);
    CHECK(back.x_norm.mean == m.x_norm.mean);
    CHECK(back.y_norm.scale == m.y_norm.scale);
    CHECK(format_model(back) == format_model(m));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const std::vector<double> xi(x.row(i).data(), x.row(i).data() + 3);
      CHECK(predict(back, xi) == predict(m, xi));
    }
  }

  TEST_CASE("corrupted model files are rejected") {
    const std::string text = format_model(init(small_spec(2, {3}, 1, 1)));
    CHECK_NOTHROW(parse_model(text));
    CHECK_THROWS_AS(parse_model(text.substr(0, text.size() / 2)), Error);
    std::string bad = text;
    bad.replace(0, 5, "xxxxx");
    CHECK_THROWS_AS(parse_model(bad), Error);
    std::string nan = text;
    const auto pos = nan.rfind("b ");
    nan.replace(pos + 2, 1, "q");
    try {
      parse_model(nan);
      FAIL("expected FormatError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kFormatError);
    }
  }

  TEST_CASE("forward predict latency") {
    const MlpModel m = init(MlpSpec::forward_model());
    const std::vector<double> x(36, 0.3);
    predict(m, x);
    const auto t0 = std::chrono::steady_clock::now();
    predict(m, x);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms < 20.0);
  }
}
