// turntake/nn/kernels.cc

// Copyright 2026  The Turntake Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "turntake/nn/kernels.h"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace turntake {
namespace nn {
namespace kernels {

namespace {

bool g_parallel = true;

// one output row of C; identical inner order in serial and parallel paths
inline void matmul_row(const double *a, const double *b, double *c_row, int i,
                       int n, int k, bool trans_a, bool trans_b, bool accumulate,
                       int lda_m) {
  if (!accumulate) std::memset(c_row, 0, sizeof(double) * n);
  if (!trans_b) {
    // C[i,:] += sum_k A[i,k] * B[k,:]
    for (int kk = 0; kk < k; ++kk) {
      double av = trans_a ? a[static_cast<int64_t>(kk) * lda_m + i]
                          : a[static_cast<int64_t>(i) * k + kk];
      const double *b_row = b + static_cast<int64_t>(kk) * n;
      for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  } else {
    // C[i,j] += dot(A[i,:], B[j,:])
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const double *b_row = b + static_cast<int64_t>(j) * k;
      if (!trans_a) {
        const double *a_row = a + static_cast<int64_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) acc += a_row[kk] * b_row[kk];
      } else {
        for (int kk = 0; kk < k; ++kk)
          acc += a[static_cast<int64_t>(kk) * lda_m + i] * b_row[kk];
      }
      c_row[j] += acc;
    }
  }
}

}  // namespace

void matmul_serial(const double *a, const double *b, double *c, int m, int n,
                   int k, bool trans_a, bool trans_b, bool accumulate) {
  for (int i = 0; i < m; ++i)
    matmul_row(a, b, c + static_cast<int64_t>(i) * n, i, n, k, trans_a, trans_b,
               accumulate, m);
}

void matmul_parallel(const double *a, const double *b, double *c, int m, int n,
                     int k, bool trans_a, bool trans_b, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    matmul_row(a, b, c + static_cast<int64_t>(i) * n, i, n, k, trans_a, trans_b,
               accumulate, m);
}

void matmul(const double *a, const double *b, double *c, int m, int n, int k,
            bool trans_a, bool trans_b, bool accumulate) {
  int64_t work = static_cast<int64_t>(m) * n * k;
  if (g_parallel && max_threads() > 1 && work >= (1 << 16) && m >= 4)
    matmul_parallel(a, b, c, m, n, k, trans_a, trans_b, accumulate);
  else
    matmul_serial(a, b, c, m, n, k, trans_a, trans_b, accumulate);
}

bool parallel_enabled() { return g_parallel; }
void set_parallel_enabled(bool enabled) { g_parallel = enabled; }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void im2col(const double *x, int c, int h, int w, int kh, int kw, int sh, int sw,
            int out_h, int out_w, int pad_top, int pad_left, double *cols) {
  int ckk = c * kh * kw;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      double *row = cols + (static_cast<int64_t>(oy) * out_w + ox) * ckk;
      int idx = 0;
      for (int ch = 0; ch < c; ++ch) {
        const double *plane = x + static_cast<int64_t>(ch) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
          int iy = oy * sh - pad_top + ky;
          for (int kx = 0; kx < kw; ++kx, ++idx) {
            int ix = ox * sw - pad_left + kx;
            row[idx] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                           ? plane[static_cast<int64_t>(iy) * w + ix]
                           : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double *cols, int c, int h, int w, int kh, int kw, int sh, int sw,
            int out_h, int out_w, int pad_top, int pad_left, double *x_grad) {
  int ckk = c * kh * kw;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const double *row = cols + (static_cast<int64_t>(oy) * out_w + ox) * ckk;
      int idx = 0;
      for (int ch = 0; ch < c; ++ch) {
        double *plane = x_grad + static_cast<int64_t>(ch) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
          int iy = oy * sh - pad_top + ky;
          for (int kx = 0; kx < kw; ++kx, ++idx) {
            int ix = ox * sw - pad_left + kx;
            if (iy >= 0 && iy < h && ix >= 0 && ix < w)
              plane[static_cast<int64_t>(iy) * w + ix] += row[idx];
          }
        }
      }
    }
  }
}

}  // namespace kernels
}  // namespace nn
}  // namespace turntake
