// turntake/fusion.h

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

#ifndef TURNTAKE_FUSION_H_
#define TURNTAKE_FUSION_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "turntake/nn/ops.h"
#include "turntake/nn/tensor.h"

namespace turntake {
namespace fusion {

enum class FusionMethod { kGmf, kConcat, kSum, kMult, kMfb };

FusionMethod fusion_from_name(const std::string &name);
std::string fusion_name(FusionMethod m);

constexpr int kMfbFactor = 5;

// Trainable fusion weights. Only the tensors needed by the active method
// (and surviving ablation paths) are defined.
struct GmfParams {
  int d = 0;
  // gated fusion: two 2d->d affines, gate (no bias), classifier d->1
  nn::Tensor w_sa, b_sa, w_st, b_st, w_g;
  // concatenation baseline: 3d->d affine
  nn::Tensor w_cat, b_cat;
  // MFB baseline: low-rank pair factors, d -> d*k
  nn::Tensor u_sa, v_sa, u_st, v_st;
  // classifier head
  nn::Tensor w_f, b_f;
};

GmfParams make_fusion_params(FusionMethod method, int d, nn::ParamRegistry *registry,
                             Rng *init_rng, bool need_sa = true, bool need_st = true);

// r = g . r_sa + (1 - g) . r_st with g = sigmoid(W_g [r_sa; r_st]).
// Inputs are (B x d). Returns (fused, gate). gate_override (same shape)
// replaces the computed gate; it exists for tests.
std::pair<nn::Tensor, nn::Tensor> fuse_gated(const nn::Tensor &r_s,
                                             const nn::Tensor &r_a,
                                             const nn::Tensor &r_t,
                                             const GmfParams &params,
                                             const nn::Tensor *gate_override = nullptr);

// concat / sum / mult baselines; rejects gmf and mfb
nn::Tensor fuse_baseline(FusionMethod method, const nn::Tensor &r_s,
                         const nn::Tensor &r_a, const nn::Tensor &r_t,
                         const GmfParams &params);

// pairwise factorized bilinear pooling MFB(s,a) + MFB(s,t), power-normalized
// then L2-normalized rowwise
nn::Tensor fuse_mfb(const nn::Tensor &r_s, const nn::Tensor &r_a,
                    const nn::Tensor &r_t, const GmfParams &params);

// yhat = sigmoid(W_f r + b), (B x 1); threshold 0.5 maps to hold=0 / switch=1
nn::Tensor predict(const nn::Tensor &r, const GmfParams &params);

// mean binary cross-entropy with yhat clamped to [1e-12, 1 - 1e-12]
nn::Tensor loss_ce(const nn::Tensor &yhat, const std::vector<double> &labels);

// InfoNCE with cosine similarity; the positive pair is included in the
// denominator. anchors/positives are (1 x d) rows; negatives per anchor.
// Anchors must come with at least one negative each.
nn::Tensor loss_contrastive(const std::vector<nn::Tensor> &anchors,
                            const std::vector<nn::Tensor> &positives,
                            const std::vector<std::vector<nn::Tensor>> &negatives,
                            double tau);

// L = L_ce + L_cl; with CL disabled returns l_ce itself (bitwise identical)
nn::Tensor loss_total(const nn::Tensor &l_ce, const std::optional<nn::Tensor> &l_cl);

}  // namespace fusion
}  // namespace turntake

#endif  // TURNTAKE_FUSION_H_
