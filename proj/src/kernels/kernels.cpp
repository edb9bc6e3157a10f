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

#include "morphsurf/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace morph::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("MORPHSURF_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::kScalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Isa::kAvx2;
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<int>& isa_slot() {
  static std::atomic<int> slot{static_cast<int>(detect())};
  return slot;
}

bool use_avx2() { return isa_slot().load(std::memory_order_relaxed) == 1; }

void check_gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
    throw Error(Errc::kDimensionMismatch, "gemm operand shapes do not chain");
  }
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::kScalar || cpu_has_avx2(); }

Isa active_isa() { return use_avx2() ? Isa::kAvx2 : Isa::kScalar; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(Errc::kInvalidArgument,
                std::string("ISA not supported on this CPU: ") + isa_name(isa));
  }
  isa_slot().store(isa == Isa::kAvx2 ? 1 : 0);
}

void gemm_acc(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  check_gemm(a, b, c);
  use_avx2() ? avx2::gemm_acc(a, b, c) : scalar::gemm_acc(a, b, c);
}

void gemm_acc_bt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  if (a.cols != b.cols || c.rows != a.rows || c.cols != b.rows) {
    throw Error(Errc::kDimensionMismatch, "gemm_bt operand shapes do not chain");
  }
  use_avx2() ? avx2::gemm_acc_bt(a, b, c) : scalar::gemm_acc_bt(a, b, c);
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::kDimensionMismatch, "dot lengths differ");
  return use_avx2() ? avx2::dot(x, y) : scalar::dot(x, y);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(Errc::kDimensionMismatch, "axpy lengths differ");
  use_avx2() ? avx2::axpy(alpha, x, y) : scalar::axpy(alpha, x, y);
}

void relu(std::span<double> x) { use_avx2() ? avx2::relu(x) : scalar::relu(x); }

void relu_mask(std::span<const double> activation, std::span<double> grad) {
  if (activation.size() != grad.size())
    throw Error(Errc::kDimensionMismatch, "relu_mask lengths differ");
  use_avx2() ? avx2::relu_mask(activation, grad) : scalar::relu_mask(activation, grad);
}

void adam_update(const AdamStep& step, std::span<const double> grad,
                 std::span<double> weights, std::span<double> m,
                 std::span<double> v) {
  if (grad.size() != weights.size() || m.size() != weights.size() ||
      v.size() != weights.size()) {
    throw Error(Errc::kDimensionMismatch, "adam buffers differ in length");
  }
  use_avx2() ? avx2::adam_update(step, grad, weights, m, v)
             : scalar::adam_update(step, grad, weights, m, v);
}

}  // namespace morph::kernels
