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

// Built with -mavx2 -mfma -ffp-contract=off; only reached after a runtime
// CPU check. FMA is used explicitly where rounding may differ from scalar.
#include "morphsurf/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace morph::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// 4 rows of A against an 8-column panel of B.
inline void kernel_4x8(std::size_t k, const double* a, std::size_t lda,
                       const double* b, std::size_t ldb, double* c,
                       std::size_t ldc) {
  __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  const double* a0 = a;
  const double* a1 = a + lda;
  const double* a2 = a + 2 * lda;
  const double* a3 = a + 3 * lda;
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d av = _mm256_broadcast_sd(a0 + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a1 + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a2 + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a3 + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

inline void kernel_1x8(std::size_t k, const double* a, const double* b,
                       std::size_t ldb, double* c) {
  __m256d c0 = _mm256_loadu_pd(c), c1 = _mm256_loadu_pd(c + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

inline void kernel_1x4(std::size_t k, const double* a, const double* b,
                       std::size_t ldb, double* c) {
  __m256d c0 = _mm256_loadu_pd(c);
  for (std::size_t p = 0; p < k; ++p)
    c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + p * ldb), c0);
  _mm256_storeu_pd(c, c0);
}

}  // namespace

void gemm_acc(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  const std::size_t m = a.rows, n = b.cols, k = a.cols;
  // B panels are packed kKc x 8 so each one stays in L1 across row blocks.
  constexpr std::size_t kKc = 256;
  thread_local std::vector<double> pack;
  pack.resize(kKc * 8);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (std::size_t k0 = 0; k0 < k; k0 += kKc) {
      const std::size_t kc = std::min(kKc, k - k0);
      for (std::size_t p = 0; p < kc; ++p) {
        const double* src = b.data + (k0 + p) * b.stride + j;
        _mm256_storeu_pd(&pack[p * 8], _mm256_loadu_pd(src));
        _mm256_storeu_pd(&pack[p * 8 + 4], _mm256_loadu_pd(src + 4));
      }
      std::size_t i = 0;
      for (; i + 4 <= m; i += 4) {
        kernel_4x8(kc, a.data + i * a.stride + k0, a.stride, pack.data(), 8,
                   c.data + i * c.stride + j, c.stride);
      }
      for (; i < m; ++i) {
        kernel_1x8(kc, a.data + i * a.stride + k0, pack.data(), 8, c.data + i * c.stride + j);
      }
    }
  }
  if (j + 4 <= n) {
    for (std::size_t i = 0; i < m; ++i) {
      kernel_1x4(k, a.data + i * a.stride, b.data + j, b.stride,
                 c.data + i * c.stride + j);
    }
    j += 4;
  }
  for (; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = c.data[i * c.stride + j];
      for (std::size_t p = 0; p < k; ++p)
        s += a.data[i * a.stride + p] * b.data[p * b.stride + j];
      c.data[i * c.stride + j] = s;
    }
  }
}

namespace {

// Horizontal sums of four vectors, lane i holding the sum of xi.
inline __m256d reduce4(__m256d x0, __m256d x1, __m256d x2, __m256d x3) {
  const __m256d t0 = _mm256_hadd_pd(x0, x1);
  const __m256d t1 = _mm256_hadd_pd(x2, x3);
  return _mm256_add_pd(_mm256_permute2f128_pd(t0, t1, 0x20),
                       _mm256_permute2f128_pd(t0, t1, 0x31));
}

// Two rows of A against four rows of B, dot products along k.
inline void kernel_bt_2x4(std::size_t k, const double* a0, const double* a1,
                          const double* b, std::size_t ldb, double* c0,
                          double* c1) {
  const double* b0 = b;
  const double* b1 = b + ldb;
  const double* b2 = b + 2 * ldb;
  const double* b3 = b + 3 * ldb;
  __m256d s00 = _mm256_setzero_pd(), s01 = s00, s02 = s00, s03 = s00;
  __m256d s10 = s00, s11 = s00, s12 = s00, s13 = s00;
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const __m256d x0 = _mm256_loadu_pd(a0 + p), x1 = _mm256_loadu_pd(a1 + p);
    __m256d y = _mm256_loadu_pd(b0 + p);
    s00 = _mm256_fmadd_pd(x0, y, s00);
    s10 = _mm256_fmadd_pd(x1, y, s10);
    y = _mm256_loadu_pd(b1 + p);
    s01 = _mm256_fmadd_pd(x0, y, s01);
    s11 = _mm256_fmadd_pd(x1, y, s11);
    y = _mm256_loadu_pd(b2 + p);
    s02 = _mm256_fmadd_pd(x0, y, s02);
    s12 = _mm256_fmadd_pd(x1, y, s12);
    y = _mm256_loadu_pd(b3 + p);
    s03 = _mm256_fmadd_pd(x0, y, s03);
    s13 = _mm256_fmadd_pd(x1, y, s13);
  }
  __m256d r0 = reduce4(s00, s01, s02, s03);
  __m256d r1 = reduce4(s10, s11, s12, s13);
  if (p < k) {
    double t0[4] = {0, 0, 0, 0}, t1[4] = {0, 0, 0, 0};
    for (; p < k; ++p) {
      t0[0] += a0[p] * b0[p];
      t0[1] += a0[p] * b1[p];
      t0[2] += a0[p] * b2[p];
      t0[3] += a0[p] * b3[p];
      t1[0] += a1[p] * b0[p];
      t1[1] += a1[p] * b1[p];
      t1[2] += a1[p] * b2[p];
      t1[3] += a1[p] * b3[p];
    }
    r0 = _mm256_add_pd(r0, _mm256_loadu_pd(t0));
    r1 = _mm256_add_pd(r1, _mm256_loadu_pd(t1));
  }
  _mm256_storeu_pd(c0, _mm256_add_pd(_mm256_loadu_pd(c0), r0));
  _mm256_storeu_pd(c1, _mm256_add_pd(_mm256_loadu_pd(c1), r1));
}

}  // namespace

void gemm_acc_bt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  const std::size_t m = a.rows, n = b.rows, k = a.cols;
  constexpr std::size_t kKc = 256;
  const std::size_t n4 = n - n % 4, m2 = m - m % 2;
  for (std::size_t k0 = 0; k0 < k; k0 += kKc) {
    const std::size_t kc = std::min(kKc, k - k0);
    for (std::size_t j = 0; j < n4; j += 4) {
      for (std::size_t i = 0; i < m2; i += 2) {
        kernel_bt_2x4(kc, a.data + i * a.stride + k0, a.data + (i + 1) * a.stride + k0,
                      b.data + j * b.stride + k0, b.stride, c.data + i * c.stride + j,
                      c.data + (i + 1) * c.stride + j);
      }
    }
  }
  // leftover row and columns
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = (i < m2 ? n4 : 0); j < n; ++j) {
      c.data[i * c.stride + j] +=
          dot({a.data + i * a.stride, k}, {b.data + j * b.stride, k});
    }
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i + 4]), _mm256_loadu_pd(&y[i + 4]), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  // separate multiply and add so results match the scalar path bit for bit
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_add_pd(_mm256_loadu_pd(&y[i]),
                                          _mm256_mul_pd(av, _mm256_loadu_pd(&x[i]))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu(std::span<double> x) {
  const std::size_t n = x.size();
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    // keeps v only where v > 0 (NaN maps to 0, matching the scalar path)
    _mm256_storeu_pd(&x[i], _mm256_and_pd(v, _mm256_cmp_pd(v, zero, _CMP_GT_OQ)));
  }
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask(std::span<const double> activation, std::span<double> grad) {
  const std::size_t n = grad.size();
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(&activation[i]), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(&grad[i], _mm256_and_pd(_mm256_loadu_pd(&grad[i]), mask));
  }
  for (; i < n; ++i)
    if (!(activation[i] > 0.0)) grad[i] = 0.0;
}

void adam_update(const AdamStep& s, std::span<const double> grad,
                 std::span<double> weights, std::span<double> m,
                 std::span<double> v) {
  // Same operation order as the scalar kernel, no FMA: results are bitwise
  // identical.
  const std::size_t n = grad.size();
  const double step = s.lr / s.bias_correction1;
  const double inv_bc2 = 1.0 / s.bias_correction2;
  const __m256d b1 = _mm256_set1_pd(s.beta1), b2 = _mm256_set1_pd(s.beta2);
  const __m256d ob1 = _mm256_set1_pd(1.0 - s.beta1), ob2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d stepv = _mm256_set1_pd(step), ibc2 = _mm256_set1_pd(inv_bc2);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(&grad[i]);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(&m[i])),
                                     _mm256_mul_pd(ob1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(&v[i])),
                                     _mm256_mul_pd(ob2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(&m[i], mi);
    _mm256_storeu_pd(&v[i], vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, ibc2)), eps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(stepv, mi), denom);
    _mm256_storeu_pd(&weights[i], _mm256_sub_pd(_mm256_loadu_pd(&weights[i]), upd));
  }
  scalar::adam_update(s, grad.subspan(i), weights.subspan(i), m.subspan(i),
                      v.subspan(i));
}

}  // namespace morph::kernels::avx2
