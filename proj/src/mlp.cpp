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

#include "morphsurf/mlp.hpp"

#include "morphsurf/errors.hpp"
#include "morphsurf/kernels.hpp"
#include "morphsurf/text_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace morph {

namespace k = kernels;

void MlpSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::kInvalidArgument, what); };
  if (input_dim < 1 || output_dim < 1) fail("network dimensions must be >= 1");
  if (hidden_dims.empty()) fail("at least one hidden layer is required");
  for (std::size_t h : hidden_dims)
    if (h < 1) fail("hidden layer widths must be >= 1");
  if (activation != "relu") fail("unsupported activation '" + activation + "'");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay must lie in (0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail("validation_fraction must lie in [0, 1)");
}

MlpSpec MlpSpec::forward_model() {
  MlpSpec s;
  s.input_dim = 36;
  s.hidden_dims = {73, 300, 580, 880, 1200};
  s.output_dim = 400;
  return s;
}

MlpSpec MlpSpec::inverse_model() {
  MlpSpec s;
  s.input_dim = 400;
  s.hidden_dims = {901, 700, 550, 300, 180};
  s.output_dim = 36;
  return s;
}

Standardizer Standardizer::identity(std::size_t n) {
  return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
}

Standardizer Standardizer::fit(const RowMatrix& data) {
  const auto cols = static_cast<std::size_t>(data.cols());
  Standardizer s = identity(cols);
  if (data.rows() == 0) return s;
  for (std::size_t c = 0; c < cols; ++c) {
    const auto col = data.col(static_cast<Eigen::Index>(c));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    s.mean[c] = mean;
    s.scale[c] = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return s;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.wt.size() + l.b.size();
  return n;
}

MlpModel init(const MlpSpec& spec) {
  spec.validate();
  MlpModel m;
  m.spec = spec;
  std::vector<std::size_t> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  dims.push_back(spec.output_dim);
  std::mt19937_64 rng(spec.seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    const bool last = l + 2 == dims.size();
    // He-uniform into ReLU layers, Glorot-uniform into the linear output
    const double limit = last ? std::sqrt(6.0 / static_cast<double>(layer.in + layer.out))
                              : std::sqrt(6.0 / static_cast<double>(layer.in));
    layer.wt.resize(layer.in * layer.out);
    for (double& w : layer.wt) w = (2.0 * unit() - 1.0) * limit;
    layer.b.assign(layer.out, 0.0);
    m.layers.push_back(std::move(layer));
  }
  m.x_norm = Standardizer::identity(spec.input_dim);
  m.y_norm = Standardizer::identity(spec.output_dim);
  return m;
}

namespace {

// Activations for one batch; acts[0] is the input.
struct Workspace {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> delta;  // gradient w.r.t. layer output
  std::vector<double> transposed;
};

void forward_batch(const MlpModel& m, const double* x, std::size_t rows, Workspace& ws) {
  const std::size_t n_layers = m.layers.size();
  ws.acts.resize(n_layers + 1);
  ws.acts[0].assign(x, x + rows * m.spec.input_dim);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = m.layers[l];
    std::vector<double>& z = ws.acts[l + 1];
    z.resize(rows * layer.out);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(layer.b.begin(), layer.b.end(), z.begin() + static_cast<std::ptrdiff_t>(r * layer.out));
    k::gemm_acc({ws.acts[l].data(), rows, layer.in, layer.in},
                {layer.wt.data(), layer.in, layer.out, layer.out},
                {z.data(), rows, layer.out, layer.out});
    if (l + 1 < n_layers) k::relu(z);
  }
}

void transpose(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kTile)
    for (std::size_t j0 = 0; j0 < cols; j0 += kTile)
      for (std::size_t i = i0; i < std::min(rows, i0 + kTile); ++i)
        for (std::size_t j = j0; j < std::min(cols, j0 + kTile); ++j) dst[j * rows + i] = src[i * cols + j];
}

// Returns the batch loss; fills grads (which must be sized) when non-null.
double batch_step(const MlpModel& m, const double* x, const double* y, std::size_t rows,
                  Workspace& ws, Gradients* grads) {
  forward_batch(m, x, rows, ws);
  const std::size_t n_layers = m.layers.size();
  const std::size_t out = m.spec.output_dim;
  const std::vector<double>& pred = ws.acts[n_layers];
  const double norm = 1.0 / static_cast<double>(rows * out);
  ws.delta.resize(n_layers + 1);
  std::vector<double>& g = ws.delta[n_layers];
  g.resize(rows * out);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows * out; ++i) {
    const double e = pred[i] - y[i];
    loss += e * e;
    g[i] = 2.0 * e * norm;
  }
  loss *= norm;
  if (!grads) return loss;

  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = m.layers[l];
    const std::vector<double>& gl = ws.delta[l + 1];
    ws.transposed.resize(layer.in * rows);
    transpose(ws.acts[l].data(), rows, layer.in, ws.transposed.data());
    std::vector<double>& dwt = grads->wt[l];
    std::fill(dwt.begin(), dwt.end(), 0.0);
    k::gemm_acc({ws.transposed.data(), layer.in, rows, rows}, {gl.data(), rows, layer.out, layer.out},
                {dwt.data(), layer.in, layer.out, layer.out});
    std::vector<double>& db = grads->b[l];
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      k::axpy(1.0, std::span<const double>(gl.data() + r * layer.out, layer.out), db);
    if (l == 0) break;
    std::vector<double>& da = ws.delta[l];
    da.assign(rows * layer.in, 0.0);
    k::gemm_acc_bt({gl.data(), rows, layer.out, layer.out}, {layer.wt.data(), layer.in, layer.out, layer.out},
                   {da.data(), rows, layer.in, layer.in});
    k::relu_mask(ws.acts[l], da);
  }
  return loss;
}

Gradients zero_gradients(const MlpModel& m) {
  Gradients g;
  for (const DenseLayer& l : m.layers) {
    g.wt.emplace_back(l.wt.size(), 0.0);
    g.b.emplace_back(l.b.size(), 0.0);
  }
  return g;
}

RowMatrix standardize(const RowMatrix& data, const Standardizer& s) {
  RowMatrix out(data.rows(), data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      out(r, c) = (data(r, c) - s.mean[static_cast<std::size_t>(c)]) / s.scale[static_cast<std::size_t>(c)];
  return out;
}

void unstandardize(RowMatrix& data, const Standardizer& s) {
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      data(r, c) = data(r, c) * s.scale[static_cast<std::size_t>(c)] + s.mean[static_cast<std::size_t>(c)];
}

RowMatrix gather_rows(const RowMatrix& src, const std::vector<std::size_t>& idx) {
  RowMatrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

double dataset_loss(const MlpModel& m, const RowMatrix& xs, const RowMatrix& ys, Workspace& ws) {
  constexpr std::size_t kChunk = 256;
  const auto n = static_cast<std::size_t>(xs.rows());
  double total = 0.0;
  for (std::size_t r0 = 0; r0 < n; r0 += kChunk) {
    const std::size_t rows = std::min(kChunk, n - r0);
    const double l = batch_step(m, xs.data() + r0 * m.spec.input_dim,
                                ys.data() + r0 * m.spec.output_dim, rows, ws, nullptr);
    total += l * static_cast<double>(rows);
  }
  return total / static_cast<double>(n);
}

// Deterministic index shuffling independent of the standard library's
// distribution implementations.
class Shuffler {
 public:
  explicit Shuffler(std::uint64_t seed) : state_(seed) {}
  void shuffle(std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::size_t below(std::size_t n) {
    const auto m = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - m) % m;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return static_cast<std::size_t>(x % m);
    }
  }
  std::uint64_t state_;
};

struct AdamState {
  std::vector<std::vector<double>> m_wt, v_wt, m_b, v_b;
  std::uint64_t t = 0;

  void reset() {
    for (auto* group : {&m_wt, &v_wt, &m_b, &v_b})
      for (auto& vec : *group) std::fill(vec.begin(), vec.end(), 0.0);
    t = 0;
  }
};

}  // namespace

RowMatrix forward_standardized(const MlpModel& m, const RowMatrix& xs) {
  if (static_cast<std::size_t>(xs.cols()) != m.spec.input_dim) {
    throw Error(Errc::kDimensionMismatch, "input width " + std::to_string(xs.cols()) +
                                              " != " + std::to_string(m.spec.input_dim));
  }
  Workspace ws;
  const auto rows = static_cast<std::size_t>(xs.rows());
  forward_batch(m, xs.data(), rows, ws);
  RowMatrix out(xs.rows(), static_cast<Eigen::Index>(m.spec.output_dim));
  std::copy(ws.acts.back().begin(), ws.acts.back().end(), out.data());
  return out;
}

RowMatrix predict_batch(const MlpModel& m, const RowMatrix& x) {
  if (static_cast<std::size_t>(x.cols()) != m.spec.input_dim) {
    throw Error(Errc::kDimensionMismatch, "input width " + std::to_string(x.cols()) +
                                              " != " + std::to_string(m.spec.input_dim));
  }
  RowMatrix y = forward_standardized(m, standardize(x, m.x_norm));
  unstandardize(y, m.y_norm);
  return y;
}

std::vector<double> predict(const MlpModel& m, const std::vector<double>& x) {
  if (x.size() != m.spec.input_dim) {
    throw Error(Errc::kDimensionMismatch, "input length " + std::to_string(x.size()) +
                                              " != " + std::to_string(m.spec.input_dim));
  }
  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = (x[i] - m.x_norm.mean[i]) / m.x_norm.scale[i];
  Workspace ws;
  forward_batch(m, xs.data(), 1, ws);
  std::vector<double> y = ws.acts.back();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] * m.y_norm.scale[i] + m.y_norm.mean[i];
  return y;
}

double loss_and_gradient(const MlpModel& m, const RowMatrix& xs, const RowMatrix& ys, Gradients* grads) {
  if (static_cast<std::size_t>(xs.cols()) != m.spec.input_dim ||
      static_cast<std::size_t>(ys.cols()) != m.spec.output_dim || xs.rows() != ys.rows() || xs.rows() < 1) {
    throw Error(Errc::kDimensionMismatch, "data does not match the network shape");
  }
  Workspace ws;
  if (grads) *grads = zero_gradients(m);
  return batch_step(m, xs.data(), ys.data(), static_cast<std::size_t>(xs.rows()), ws, grads);
}

TrainReport train(MlpModel& model, const RowMatrix& x, const RowMatrix& y, const TrainOptions& opts) {
  const MlpSpec& spec = model.spec;
  spec.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (static_cast<std::size_t>(x.cols()) != spec.input_dim ||
      static_cast<std::size_t>(y.cols()) != spec.output_dim || y.rows() != x.rows()) {
    throw Error(Errc::kDimensionMismatch, "training data does not match the network shape");
  }
  if (n < 2) throw Error(Errc::kInvalidArgument, "training needs at least 2 samples");
  const auto t_start = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Shuffler rng(spec.seed ^ 0x5eedf00dULL);
  rng.shuffle(order);
  std::size_t n_val = 0;
  if (spec.validation_fraction > 0.0) {
    n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(n))), 1, n - 1);
  }
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  const std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  const RowMatrix x_train = gather_rows(x, train_idx), y_train = gather_rows(y, train_idx);
  model.x_norm = Standardizer::fit(x_train);
  model.y_norm = Standardizer::fit(y_train);
  model.training_fingerprint = opts.fingerprint;
  const RowMatrix xs = standardize(x_train, model.x_norm), ys = standardize(y_train, model.y_norm);
  RowMatrix xv, yv;
  if (n_val > 0) {
    xv = standardize(gather_rows(x, val_idx), model.x_norm);
    yv = standardize(gather_rows(y, val_idx), model.y_norm);
  }

  Workspace ws;
  Gradients grads = zero_gradients(model);
  AdamState adam;
  for (const DenseLayer& l : model.layers) {
    adam.m_wt.emplace_back(l.wt.size(), 0.0);
    adam.v_wt.emplace_back(l.wt.size(), 0.0);
    adam.m_b.emplace_back(l.b.size(), 0.0);
    adam.v_b.emplace_back(l.b.size(), 0.0);
  }

  TrainReport rep;
  rep.n_train = train_idx.size();
  rep.n_val = n_val;
  double lr = spec.learning_rate;
  double prev_loss = dataset_loss(model, xs, ys, ws);
  double best_val = n_val > 0 ? dataset_loss(model, xv, yv, ws) : prev_loss;
  std::vector<DenseLayer> best_layers = model.layers;
  std::size_t since_best = 0;

  std::vector<std::size_t> batch_order(train_idx.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  RowMatrix bx(static_cast<Eigen::Index>(spec.batch_size), xs.cols());
  RowMatrix by(static_cast<Eigen::Index>(spec.batch_size), ys.cols());

  for (std::size_t epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    const std::vector<DenseLayer> start_layers = model.layers;
    const AdamState start_adam = adam;
    rng.shuffle(batch_order);
    for (std::size_t b0 = 0; b0 < batch_order.size(); b0 += spec.batch_size) {
      const std::size_t rows = std::min(spec.batch_size, batch_order.size() - b0);
      for (std::size_t r = 0; r < rows; ++r) {
        bx.row(static_cast<Eigen::Index>(r)) = xs.row(static_cast<Eigen::Index>(batch_order[b0 + r]));
        by.row(static_cast<Eigen::Index>(r)) = ys.row(static_cast<Eigen::Index>(batch_order[b0 + r]));
      }
      const double loss = batch_step(model, bx.data(), by.data(), rows, ws, &grads);
      if (!std::isfinite(loss)) {
        throw Error(Errc::kNonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch starting at " +
                                              std::to_string(b0) + ": loss " + text::format_exact(loss) +
                                              " at learning rate " + text::format_exact(lr));
      }
      ++adam.t;
      const k::AdamStep step{lr,
                             spec.beta1,
                             spec.beta2,
                             spec.epsilon,
                             1.0 - std::pow(spec.beta1, static_cast<double>(adam.t)),
                             1.0 - std::pow(spec.beta2, static_cast<double>(adam.t))};
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        k::adam_update(step, grads.wt[l], model.layers[l].wt, adam.m_wt[l], adam.v_wt[l]);
        k::adam_update(step, grads.b[l], model.layers[l].b, adam.m_b[l], adam.v_b[l]);
      }
    }

    double train_loss = dataset_loss(model, xs, ys, ws);
    if (!std::isfinite(train_loss)) {
      throw Error(Errc::kNonFiniteLoss, "epoch " + std::to_string(epoch) + ": training loss " +
                                            text::format_exact(train_loss));
    }
    if (train_loss > prev_loss) {
      // Plateau: undo the epoch and retry with a smaller step. The moments
      // are cleared too; restored momentum would repeat the same bad step.
      model.layers = start_layers;
      adam = start_adam;
      adam.reset();
      train_loss = prev_loss;
      lr *= spec.lr_decay;
    }
    prev_loss = train_loss;
    const double val_loss = n_val > 0 ? dataset_loss(model, xv, yv, ws) : train_loss;
    rep.train_loss.push_back(train_loss);
    rep.val_loss.push_back(val_loss);
    rep.learning_rate.push_back(lr);
    rep.epochs = epoch;
    if (opts.on_epoch) opts.on_epoch(epoch, train_loss, val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best_layers = model.layers;
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= spec.patience) {
      break;
    }
  }
  model.layers = std::move(best_layers);

  const RowMatrix x_eval = n_val > 0 ? gather_rows(x, val_idx) : x_train;
  const RowMatrix y_eval = n_val > 0 ? gather_rows(y, val_idx) : y_train;
  if (x_eval.rows() >= 2) {
    const RowMatrix p = predict_batch(model, x_eval);
    rep.r2 = r2_score(p, y_eval);
    rep.mse = mse(p, y_eval);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

double r2_score(const RowMatrix& pred, const RowMatrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw Error(Errc::kDimensionMismatch, "prediction and truth differ in shape");
  }
  if (truth.rows() < 2 || truth.cols() < 1) {
    throw Error(Errc::kDimensionMismatch, "R^2 needs at least 2 rows");
  }
  double acc = 0.0;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double mean = truth.col(c).mean();
    const double ss_tot = (truth.col(c).array() - mean).square().sum();
    const double ss_res = (truth.col(c) - pred.col(c)).squaredNorm();
    if (ss_tot == 0.0) {
      acc += ss_res == 0.0 ? 1.0 : 0.0;
    } else {
      acc += 1.0 - ss_res / ss_tot;
    }
  }
  return acc / static_cast<double>(truth.cols());
}

double mse(const RowMatrix& pred, const RowMatrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || pred.size() == 0) {
    throw Error(Errc::kDimensionMismatch, "prediction and truth differ in shape");
  }
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

// ---- persistence -----------------------------------------------------------

namespace {

void put_vector(std::ostringstream& os, const char* key, const std::vector<double>& v) {
  os << key;
  for (double d : v) os << ' ' << text::format_exact(d);
  os << '\n';
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : is_(text) {}

  std::vector<std::string_view> next(const std::string& key) {
    do {
      if (!std::getline(is_, line_)) fail("unexpected end of file, wanted '" + key + "'");
      ++line_no_;
    } while (text::trim(line_).empty());
    std::vector<std::string_view> tok;
    for (std::string_view t : text::split(text::trim(line_), ' '))
      if (!t.empty()) tok.push_back(t);
    if (tok.empty() || tok[0] != key) fail("expected '" + key + "'");
    tok.erase(tok.begin());
    return tok;
  }

  std::vector<double> doubles(const std::string& key, std::size_t count) {
    const auto tok = next(key);
    if (tok.size() != count) {
      fail("'" + key + "' has " + std::to_string(tok.size()) + " values, expected " + std::to_string(count));
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
      if (!text::parse_double(tok[i], out[i])) fail("field " + std::to_string(i + 1) + " of '" + key + "' is not a number");
    return out;
  }

  std::size_t size(const std::string& key) {
    const auto v = doubles(key, 1);
    if (v[0] < 0 || v[0] != std::floor(v[0])) fail("'" + key + "' must be a count");
    return static_cast<std::size_t>(v[0]);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::kFormatError, "model line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istringstream is_;
  std::string line_;
  std::size_t line_no_ = 0;
};

constexpr const char* kMagic = "morphsurf-mlp";

}  // namespace

std::string format_model(const MlpModel& m) {
  const MlpSpec& s = m.spec;
  std::ostringstream os;
  os << kMagic << " 1\n"
     << "input_dim " << s.input_dim << '\n'
     << "output_dim " << s.output_dim << '\n'
     << "hidden " << s.hidden_dims.size();
  for (std::size_t h : s.hidden_dims) os << ' ' << h;
  os << '\n'
     << "activation " << s.activation << '\n'
     << "seed " << s.seed << '\n'
     << "learning_rate " << text::format_exact(s.learning_rate) << '\n'
     << "lr_decay " << text::format_exact(s.lr_decay) << '\n'
     << "beta1 " << text::format_exact(s.beta1) << '\n'
     << "beta2 " << text::format_exact(s.beta2) << '\n'
     << "epsilon " << text::format_exact(s.epsilon) << '\n'
     << "batch_size " << s.batch_size << '\n'
     << "max_epochs " << s.max_epochs << '\n'
     << "patience " << s.patience << '\n'
     << "validation_fraction " << text::format_exact(s.validation_fraction) << '\n'
     << "fingerprint " << (m.training_fingerprint.empty() ? "-" : m.training_fingerprint) << '\n';
  put_vector(os, "x_mean", m.x_norm.mean);
  put_vector(os, "x_scale", m.x_norm.scale);
  put_vector(os, "y_mean", m.y_norm.mean);
  put_vector(os, "y_scale", m.y_norm.scale);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const DenseLayer& layer = m.layers[l];
    os << "layer " << l << ' ' << layer.in << ' ' << layer.out << '\n';
    for (std::size_t p = 0; p < layer.in; ++p) {
      os << "w";
      for (std::size_t j = 0; j < layer.out; ++j) os << ' ' << text::format_exact(layer.wt[p * layer.out + j]);
      os << '\n';
    }
    put_vector(os, "b", layer.b);
  }
  return os.str();
}

MlpModel parse_model(const std::string& text) {
  LineReader rd(text);
  const auto magic = rd.next(kMagic);
  if (magic.size() != 1 || magic[0] != "1") rd.fail("unsupported model version");
  MlpSpec s;
  s.input_dim = rd.size("input_dim");
  s.output_dim = rd.size("output_dim");
  {
    const auto tok = rd.next("hidden");
    double count;
    if (tok.empty() || !text::parse_double(tok[0], count) || count != static_cast<double>(tok.size() - 1)) {
      rd.fail("malformed hidden layer list");
    }
    s.hidden_dims.clear();
    for (std::size_t i = 1; i < tok.size(); ++i) {
      double h;
      if (!text::parse_double(tok[i], h) || h < 1 || h != std::floor(h)) rd.fail("bad hidden width");
      s.hidden_dims.push_back(static_cast<std::size_t>(h));
    }
  }
  {
    const auto tok = rd.next("activation");
    if (tok.size() != 1) rd.fail("malformed activation");
    s.activation = std::string(tok[0]);
  }
  {
    const auto tok = rd.next("seed");
    if (tok.size() != 1) rd.fail("malformed seed");
    try {
      s.seed = std::stoull(std::string(tok[0]));
    } catch (const std::exception&) {
      rd.fail("malformed seed");
    }
  }
  s.learning_rate = rd.doubles("learning_rate", 1)[0];
  s.lr_decay = rd.doubles("lr_decay", 1)[0];
  s.beta1 = rd.doubles("beta1", 1)[0];
  s.beta2 = rd.doubles("beta2", 1)[0];
  s.epsilon = rd.doubles("epsilon", 1)[0];
  s.batch_size = rd.size("batch_size");
  s.max_epochs = rd.size("max_epochs");
  s.patience = rd.size("patience");
  s.validation_fraction = rd.doubles("validation_fraction", 1)[0];
  MlpModel m;
  {
    const auto tok = rd.next("fingerprint");
    if (tok.size() != 1) rd.fail("malformed fingerprint");
    m.training_fingerprint = tok[0] == "-" ? std::string() : std::string(tok[0]);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    rd.fail(e.what());
  }
  m.spec = s;
  m.x_norm.mean = rd.doubles("x_mean", s.input_dim);
  m.x_norm.scale = rd.doubles("x_scale", s.input_dim);
  m.y_norm.mean = rd.doubles("y_mean", s.output_dim);
  m.y_norm.scale = rd.doubles("y_scale", s.output_dim);
  std::vector<std::size_t> dims{s.input_dim};
  dims.insert(dims.end(), s.hidden_dims.begin(), s.hidden_dims.end());
  dims.push_back(s.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto hdr = rd.doubles("layer", 3);
    if (hdr[0] != static_cast<double>(l) || hdr[1] != static_cast<double>(dims[l]) ||
        hdr[2] != static_cast<double>(dims[l + 1])) {
      rd.fail("layer header does not match the declared shape");
    }
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.wt.reserve(layer.in * layer.out);
    for (std::size_t p = 0; p < layer.in; ++p) {
      const auto row = rd.doubles("w", layer.out);
      layer.wt.insert(layer.wt.end(), row.begin(), row.end());
    }
    layer.b = rd.doubles("b", layer.out);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

void save_model(const MlpModel& m, const std::string& path) {
  text::write_file_atomic(path, format_model(m));
}

MlpModel load_model(const std::string& path) { return parse_model(text::read_file(path)); }

}  // namespace morph
