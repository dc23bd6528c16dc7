// turntake/fusion.cc

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

#include "turntake/fusion.h"

#include <cmath>

#include "turntake/encoders.h"

namespace turntake {
namespace fusion {

using nn::Tensor;

FusionMethod fusion_from_name(const std::string &name) {
  if (name == "gmf") return FusionMethod::kGmf;
  if (name == "concat") return FusionMethod::kConcat;
  if (name == "sum") return FusionMethod::kSum;
  if (name == "mult") return FusionMethod::kMult;
  if (name == "mfb") return FusionMethod::kMfb;
  throw DataError("unknown fusion method: " + name);
}

std::string fusion_name(FusionMethod m) {
  switch (m) {
    case FusionMethod::kGmf: return "gmf";
    case FusionMethod::kConcat: return "concat";
    case FusionMethod::kSum: return "sum";
    case FusionMethod::kMult: return "mult";
    default: return "mfb";
  }
}

GmfParams make_fusion_params(FusionMethod method, int d, nn::ParamRegistry *registry,
                             Rng *init_rng, bool need_sa, bool need_st) {
  GmfParams p;
  p.d = d;
  auto xavier = [&](int fin, int fout) { return encoders::xavier_init(init_rng, fin, fout); };
  if (method == FusionMethod::kGmf) {
    if (need_sa) {
      p.w_sa = registry->add("fusion.w_sa", {d, 2 * d}, xavier(2 * d, d));
      p.b_sa = registry->add("fusion.b_sa", {d}, encoders::const_init(0.0));
    }
    if (need_st) {
      p.w_st = registry->add("fusion.w_st", {d, 2 * d}, xavier(2 * d, d));
      p.b_st = registry->add("fusion.b_st", {d}, encoders::const_init(0.0));
    }
    // zero gate start: g = 0.5 everywhere, so both fusion paths receive
    // gradient from the first step
    if (need_sa && need_st)
      p.w_g = registry->add("fusion.w_g", {d, 2 * d}, encoders::const_init(0.0));
  } else if (method == FusionMethod::kConcat) {
    p.w_cat = registry->add("fusion.w_cat", {d, 3 * d}, xavier(3 * d, d));
    p.b_cat = registry->add("fusion.b_cat", {d}, encoders::const_init(0.0));
  } else if (method == FusionMethod::kMfb) {
    int dk = d * kMfbFactor;
    p.u_sa = registry->add("fusion.mfb.u_sa", {dk, d}, xavier(d, dk));
    p.v_sa = registry->add("fusion.mfb.v_sa", {dk, d}, xavier(d, dk));
    p.u_st = registry->add("fusion.mfb.u_st", {dk, d}, xavier(d, dk));
    p.v_st = registry->add("fusion.mfb.v_st", {dk, d}, xavier(d, dk));
  }
  p.w_f = registry->add("fusion.w_f", {1, d}, xavier(d, 1));
  p.b_f = registry->add("fusion.b_f", {1}, encoders::const_init(0.0));
  return p;
}

std::pair<Tensor, Tensor> fuse_gated(const Tensor &r_s, const Tensor &r_a,
                                     const Tensor &r_t, const GmfParams &params,
                                     const Tensor *gate_override) {
  Tensor r_sa = nn::tanh_op(
      nn::add(nn::matmul(nn::concat({r_s, r_a}, 1), params.w_sa, false, true),
              params.b_sa));
  Tensor r_st = nn::tanh_op(
      nn::add(nn::matmul(nn::concat({r_s, r_t}, 1), params.w_st, false, true),
              params.b_st));
  Tensor g;
  if (gate_override != nullptr) {
    g = *gate_override;
  } else {
    // Eq as printed: gate has no bias term
    g = nn::sigmoid(nn::matmul(nn::concat({r_sa, r_st}, 1), params.w_g, false, true));
  }
  Tensor one_minus_g = nn::add_scalar(nn::scale(g, -1.0), 1.0);
  Tensor r = nn::add(nn::mul(g, r_sa), nn::mul(one_minus_g, r_st));
  return {r, g};
}

Tensor fuse_baseline(FusionMethod method, const Tensor &r_s, const Tensor &r_a,
                     const Tensor &r_t, const GmfParams &params) {
  switch (method) {
    case FusionMethod::kConcat:
      return nn::add(nn::matmul(nn::concat({r_a, r_s, r_t}, 1), params.w_cat,
                                false, true),
                     params.b_cat);
    case FusionMethod::kSum:
      return nn::add_n({r_a, r_s, r_t});
    case FusionMethod::kMult:
      return nn::mul(nn::mul(r_a, r_s), r_t);
    default:
      throw std::invalid_argument("fuse_baseline: gmf/mfb have dedicated entry points");
  }
}

namespace {

// z = sumpool_k(U x . V y), (B x d)
Tensor mfb_pair(const Tensor &x, const Tensor &y, const Tensor &u, const Tensor &v,
                int d) {
  Tensor zx = nn::matmul(x, u, false, true);  // (B x dk)
  Tensor zy = nn::matmul(y, v, false, true);
  Tensor prod = nn::mul(zx, zy);
  int b = prod.shape()[0];
  Tensor grouped = nn::reshape(prod, {b * d, kMfbFactor});
  Tensor ones = Tensor::constant({1, kMfbFactor}, 1.0);
  Tensor pooled = nn::matmul(grouped, ones, false, true);  // (b*d x 1)
  return nn::reshape(pooled, {b, d});
}

}  // namespace

Tensor fuse_mfb(const Tensor &r_s, const Tensor &r_a, const Tensor &r_t,
                const GmfParams &params) {
  int d = params.d;
  Tensor z_sa = nn::signed_sqrt(mfb_pair(r_s, r_a, params.u_sa, params.v_sa, d));
  Tensor z_st = nn::signed_sqrt(mfb_pair(r_s, r_t, params.u_st, params.v_st, d));
  return nn::l2_normalize(nn::add(z_sa, z_st));
}

Tensor predict(const Tensor &r, const GmfParams &params) {
  return nn::sigmoid(nn::add(nn::matmul(r, params.w_f, false, true), params.b_f));
}

Tensor loss_ce(const Tensor &yhat, const std::vector<double> &labels) {
  if (yhat.size() != static_cast<int64_t>(labels.size()))
    throw std::invalid_argument("loss_ce: labels/yhat size mismatch");
  for (double y : labels)
    if (y != 0.0 && y != 1.0)
      throw std::invalid_argument("loss_ce: labels must be 0 or 1");
  int n = static_cast<int>(labels.size());
  Tensor y = Tensor::from_values(yhat.shape(), std::vector<double>(labels));
  Tensor one_minus_y = nn::add_scalar(nn::scale(y, -1.0), 1.0);
  Tensor p = nn::clamp(yhat, 1e-12, 1.0 - 1e-12);
  Tensor one_minus_p = nn::add_scalar(nn::scale(p, -1.0), 1.0);
  Tensor ll = nn::add(nn::mul(y, nn::log_op(p)),
                      nn::mul(one_minus_y, nn::log_op(one_minus_p)));
  (void)n;
  return nn::scale(nn::mean_all(ll), -1.0);
}

Tensor loss_contrastive(const std::vector<Tensor> &anchors,
                        const std::vector<Tensor> &positives,
                        const std::vector<std::vector<Tensor>> &negatives,
                        double tau) {
  if (tau <= 0.0) throw std::invalid_argument("loss_contrastive: tau must be positive");
  if (anchors.empty()) throw std::invalid_argument("loss_contrastive: no anchors");
  if (anchors.size() != positives.size() || anchors.size() != negatives.size())
    throw std::invalid_argument("loss_contrastive: mismatched anchor lists");

  std::vector<Tensor> per_anchor;
  for (size_t i = 0; i < anchors.size(); ++i) {
    if (negatives[i].empty())
      throw std::invalid_argument("loss_contrastive: anchor without negatives");
    std::vector<Tensor> sims;
    sims.push_back(nn::reshape(nn::cosine_similarity(anchors[i], positives[i]), {1}));
    for (const auto &neg : negatives[i])
      sims.push_back(nn::reshape(nn::cosine_similarity(anchors[i], neg), {1}));
    Tensor s = nn::scale(nn::concat(sims, 0), 1.0 / tau);
    Tensor probs = nn::softmax(s, 0);
    Tensor pos_prob = nn::slice(probs, 0, 0, 1);
    per_anchor.push_back(nn::scale(nn::log_op(pos_prob), -1.0));
  }
  Tensor sum = per_anchor.size() == 1 ? per_anchor[0] : nn::add_n(per_anchor);
  return nn::reshape(nn::scale(sum, 1.0 / static_cast<double>(per_anchor.size())), {});
}

Tensor loss_total(const Tensor &l_ce, const std::optional<Tensor> &l_cl) {
  if (!l_cl.has_value()) return l_ce;
  return nn::add(l_ce, *l_cl);
}

}  // namespace fusion
}  // namespace turntake
