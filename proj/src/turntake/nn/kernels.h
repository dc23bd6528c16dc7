// turntake/nn/kernels.h

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

#ifndef TURNTAKE_NN_KERNELS_H_
#define TURNTAKE_NN_KERNELS_H_

#include <cstdint>

namespace turntake {
namespace nn {
namespace kernels {

// C (M x N) = op(A) * op(B), or += when accumulate. op(A) is A (M x K) or,
// with trans_a, A stored as (K x M). Likewise op(B) is (K x N) or stored
// (N x K) with trans_b. All matrices row-major.
//
// The parallel variant partitions output rows across threads; every output
// element is computed by exactly one thread with the same inner-loop order
// as the serial kernel, so results are bit-identical to matmul_serial for
// any thread count.
void matmul_serial(const double *a, const double *b, double *c, int m, int n,
                   int k, bool trans_a, bool trans_b, bool accumulate);
void matmul_parallel(const double *a, const double *b, double *c, int m, int n,
                     int k, bool trans_a, bool trans_b, bool accumulate);
// dispatches to the parallel kernel for large-enough work
void matmul(const double *a, const double *b, double *c, int m, int n, int k,
            bool trans_a = false, bool trans_b = false, bool accumulate = false);

bool parallel_enabled();
void set_parallel_enabled(bool enabled);
int max_threads();

// im2col / col2im for one NCHW image with per-axis stride and same padding.
// cols is (out_h * out_w) x (c * kh * kw).
void im2col(const double *x, int c, int h, int w, int kh, int kw, int sh, int sw,
            int out_h, int out_w, int pad_top, int pad_left, double *cols);
// transpose of im2col: accumulates cols back into the image gradient
void col2im(const double *cols, int c, int h, int w, int kh, int kw, int sh, int sw,
            int out_h, int out_w, int pad_top, int pad_left, double *x_grad);

}  // namespace kernels
}  // namespace nn
}  // namespace turntake

#endif  // TURNTAKE_NN_KERNELS_H_
