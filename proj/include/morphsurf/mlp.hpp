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

#include "morphsurf/voltage_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace morph {

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims{1};
  std::size_t output_dim = 1;
  std::string activation = "relu";  // hidden layers; the output is linear
  std::uint64_t seed = 1;

  // Adam with step halving when an epoch fails to lower the training loss.
  double learning_rate = 1e-3;
  double lr_decay = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double validation_fraction = 0.1;

  void validate() const;
  static MlpSpec forward_model();  // 36 -> 400
  static MlpSpec inverse_model();  // 400 -> 36
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> wt;  // in x out, row-major (transposed weights)
  std::vector<double> b;
};

// Per-dimension affine map to zero mean, unit variance.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer identity(std::size_t n);
  static Standardizer fit(const RowMatrix& data);
};

struct MlpModel {
  MlpSpec spec;
  std::vector<DenseLayer> layers;
  Standardizer x_norm;
  Standardizer y_norm;
  std::string training_fingerprint;

  std::size_t parameter_count() const;
};

MlpModel init(const MlpSpec& spec);

// Raw units in and out; standardisation is applied internally.
std::vector<double> predict(const MlpModel& model, const std::vector<double>& x);
RowMatrix predict_batch(const MlpModel& model, const RowMatrix& x);

// Network output for already standardised inputs (no output un-scaling).
RowMatrix forward_standardized(const MlpModel& model, const RowMatrix& xs);

struct Gradients {
  std::vector<std::vector<double>> wt;
  std::vector<std::vector<double>> b;
};

// Mean squared error over all entries for standardised data, and its
// gradient with respect to every parameter when grads is non-null.
double loss_and_gradient(const MlpModel& model, const RowMatrix& xs, const RowMatrix& ys,
                         Gradients* grads);

struct TrainReport {
  std::vector<double> train_loss;  // standardised MSE on the training split
  std::vector<double> val_loss;
  std::vector<double> learning_rate;
  double r2 = 0.0;   // held-out split, raw units
  double mse = 0.0;
  double seconds = 0.0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
};

struct TrainOptions {
  std::function<void(std::size_t epoch, double train_loss, double val_loss)> on_epoch;
  std::string fingerprint;
};

// Rows of x and y are samples. The model is re-standardised on the training
// split and its weights replaced by the best validation epoch.
TrainReport train(MlpModel& model, const RowMatrix& x, const RowMatrix& y,
                  const TrainOptions& opts = {});

double r2_score(const RowMatrix& pred, const RowMatrix& truth);
double mse(const RowMatrix& pred, const RowMatrix& truth);

std::string format_model(const MlpModel& model);
MlpModel parse_model(const std::string& text);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace morph
