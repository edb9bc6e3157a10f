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

#include <cstddef>
#include <span>

namespace morph::kernels {

// Dense row-major views. stride is the distance between consecutive rows.
struct ConstMatrixView {
  const double* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t stride;
};

struct MatrixView {
  double* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t stride;

  operator ConstMatrixView() const { return {data, rows, cols, stride}; }
};

enum class Isa { kScalar, kAvx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);

// Best supported ISA, detected once from the running CPU. Can be pinned with
// set_isa() (tests use it to compare variants) or MORPHSURF_ISA=scalar|avx2.
Isa active_isa();
void set_isa(Isa isa);

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

// c += a * b
void gemm_acc(ConstMatrixView a, ConstMatrixView b, MatrixView c);
// c += a * b^T, with b stored n x k
void gemm_acc_bt(ConstMatrixView a, ConstMatrixView b, MatrixView c);
double dot(std::span<const double> x, std::span<const double> y);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void relu(std::span<double> x);
// grad[i] = 0 where activation[i] <= 0
void relu_mask(std::span<const double> activation, std::span<double> grad);
void adam_update(const AdamStep& step, std::span<const double> grad,
                 std::span<double> weights, std::span<double> m,
                 std::span<double> v);

// Explicit-variant entry points; the dispatching functions above forward to
// one of these.
namespace scalar {
void gemm_acc(ConstMatrixView a, ConstMatrixView b, MatrixView c);
void gemm_acc_bt(ConstMatrixView a, ConstMatrixView b, MatrixView c);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void relu(std::span<double> x);
void relu_mask(std::span<const double> activation, std::span<double> grad);
void adam_update(const AdamStep& step, std::span<const double> grad,
                 std::span<double> weights, std::span<double> m,
                 std::span<double> v);
}  // namespace scalar

namespace avx2 {
void gemm_acc(ConstMatrixView a, ConstMatrixView b, MatrixView c);
void gemm_acc_bt(ConstMatrixView a, ConstMatrixView b, MatrixView c);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void relu(std::span<double> x);
void relu_mask(std::span<const double> activation, std::span<double> grad);
void adam_update(const AdamStep& step, std::span<const double> grad,
                 std::span<double> weights, std::span<double> m,
                 std::span<double> v);
}  // namespace avx2

}  // namespace morph::kernels
