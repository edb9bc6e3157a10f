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

#include "morphsurf/kernels.hpp"

#include <cmath>

namespace morph::kernels::scalar {

void gemm_acc(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* crow = c.data + i * c.stride;
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double aip = a.data[i * a.stride + p];
      const double* brow = b.data + p * b.stride;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aip * brow[j];
    }
  }
}

void gemm_acc_bt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data + i * a.stride;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data + j * b.stride;
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) s += arow[p] * brow[p];
      c.data[i * c.stride + j] += s;
    }
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void relu(std::span<double> x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
}

void relu_mask(std::span<const double> activation, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activation[i] > 0.0)) grad[i] = 0.0;
}

void adam_update(const AdamStep& s, std::span<const double> grad,
                 std::span<double> weights, std::span<double> m,
                 std::span<double> v) {
  const double one_m_b1 = 1.0 - s.beta1;
  const double one_m_b2 = 1.0 - s.beta2;
  const double step = s.lr / s.bias_correction1;
  const double inv_bc2 = 1.0 / s.bias_correction2;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + one_m_b1 * g;
    v[i] = s.beta2 * v[i] + one_m_b2 * (g * g);
    const double denom = std::sqrt(v[i] * inv_bc2) + s.eps;
    weights[i] -= step * m[i] / denom;
  }
}

}  // namespace morph::kernels::scalar
