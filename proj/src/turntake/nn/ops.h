// turntake/nn/ops.h

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

#ifndef TURNTAKE_NN_OPS_H_
#define TURNTAKE_NN_OPS_H_

#include <cstdint>
#include <vector>

#include "turntake/nn/tensor.h"

namespace turntake {
namespace nn {

// All forward ops record a backward rule when grad mode is on and any input
// requires grad. Every op validates shapes and rejects non-finite outputs.

// 2-D matrix product; trans flags interpret the stored operand as transposed.
Tensor matmul(const Tensor &a, const Tensor &b, bool trans_a = false,
              bool trans_b = false);

// elementwise with numpy-style trailing broadcast
Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);

Tensor scale(const Tensor &a, double c);
Tensor add_scalar(const Tensor &a, double c);
Tensor add_n(const std::vector<Tensor> &xs);

Tensor relu(const Tensor &x);
Tensor tanh_op(const Tensor &x);
Tensor sigmoid(const Tensor &x);
Tensor log_op(const Tensor &x);
Tensor clamp(const Tensor &x, double lo, double hi);
Tensor signed_sqrt(const Tensor &x);  // sign(x) * sqrt(|x|)

Tensor softmax(const Tensor &x, int axis);

// last-axis layer norm with learned gain/bias
Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias,
                  double eps = 1e-10);

Tensor concat(const std::vector<Tensor> &xs, int axis);
Tensor slice(const Tensor &x, int axis, int start, int end);
Tensor reshape(const Tensor &x, const Shape &new_shape);

Tensor sum_all(const Tensor &x);
Tensor mean_all(const Tensor &x);

// train mode zeroes with probability p and scales kept units by 1/(1-p);
// eval mode is the identity. The mask depends only on (seed, size).
Tensor dropout(const Tensor &x, double p, uint64_t seed, bool train);

// table (V x E), ids -> (ids.size() x E); backward scatter-adds rows
Tensor embedding_lookup(const Tensor &table, const std::vector<int> &ids);

// NCHW convolution with same padding and per-axis stride; weight is
// (OC x C x kh x kw); bias (OC) may be an undefined Tensor for none.
Tensor conv2d(const Tensor &x, const Tensor &weight, const Tensor &bias,
              int stride_h, int stride_w);

Tensor global_avg_pool(const Tensor &x);  // NCHW -> NC

// 4-D NCHW batch norm; running stats are plain buffers updated as a forward
// side effect in train mode and consumed in eval mode.
Tensor batch_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                  std::vector<double> *running_mean, std::vector<double> *running_var,
                  bool train, double momentum = 0.9, double eps = 1e-5);

Tensor l2_normalize(const Tensor &x);  // flat; zero vector maps to zero
Tensor cosine_similarity(const Tensor &a, const Tensor &b);  // flat -> scalar

}  // namespace nn
}  // namespace turntake

#endif  // TURNTAKE_NN_OPS_H_
