// turntake/model.cc

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

#include "turntake/model.h"

namespace turntake {
namespace model {

using nn::Tensor;

Ablation ablation_from_name(const std::string &name) {
  if (name.empty() || name == "none") return Ablation::kNone;
  if (name == "semantic") return Ablation::kNoSemantic;
  if (name == "context") return Ablation::kNoContext;
  if (name == "acoustic") return Ablation::kNoAcoustic;
  if (name == "timing") return Ablation::kNoTiming;
  throw DataError("unknown ablation: " + name);
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoSemantic: return "semantic";
    case Ablation::kNoContext: return "context";
    case Ablation::kNoAcoustic: return "acoustic";
    default: return "timing";
  }
}

GmfModel::GmfModel(const ModelConfig &config, int vocab_size, uint64_t init_seed,
                   const text::EmbeddingTable *pretrained)
    : config_(config), vocab_size_(vocab_size) {
  config.encoder.validate();
  if (config.ablation != Ablation::kNone && config.ablation != Ablation::kNoContext &&
      config.method != fusion::FusionMethod::kGmf)
    throw std::invalid_argument("modality ablations are defined for gmf fusion only");

  Rng init_rng(init_seed);
  bool have_semantic = config.ablation != Ablation::kNoSemantic;
  bool have_acoustic = config.ablation != Ablation::kNoAcoustic;
  bool have_timing = config.ablation != Ablation::kNoTiming;

  if (have_semantic)
    text_enc_ = std::make_unique<encoders::TextEncoder>(config.encoder, vocab_size,
                                                        &registry_, &init_rng, pretrained);
  if (have_acoustic)
    audio_enc_ = std::make_unique<encoders::AudioEncoder>(config.encoder, &registry_,
                                                          &init_rng);
  if (have_timing)
    timing_enc_ = std::make_unique<encoders::TimingEncoder>(config.encoder, &registry_,
                                                            &init_rng);
  fusion_ = fusion::make_fusion_params(config.method, config.encoder.d_model,
                                       &registry_, &init_rng,
                                       /*need_sa=*/have_acoustic,
                                       /*need_st=*/have_timing);
}

GmfModel::Forward GmfModel::forward(const std::vector<const EncodedSample *> &batch,
                                    bool train, Rng *drop_seeds) {
  int b = static_cast<int>(batch.size());
  if (b == 0) throw std::invalid_argument("forward: empty batch");
  if (train && drop_seeds == nullptr)
    throw std::invalid_argument("forward: train mode needs a dropout seed stream");
  Rng unused_seeds(0);
  if (drop_seeds == nullptr) drop_seeds = &unused_seeds;

  int d = config_.encoder.d_model;
  bool have_semantic = config_.ablation != Ablation::kNoSemantic;
  bool have_acoustic = config_.ablation != Ablation::kNoAcoustic;
  bool have_timing = config_.ablation != Ablation::kNoTiming;

  // semantic branch: per-sample Transformer, rows stacked to (B x d);
  // when ablated the fusion affines see a zero text representation
  Tensor r_s;
  if (have_semantic) {
    std::vector<Tensor> rows;
    rows.reserve(b);
    for (const auto *s : batch)
      rows.push_back(text_enc_->encode(s->tokens, train, drop_seeds));
    r_s = b == 1 ? rows[0] : nn::concat(rows, 0);
  } else {
    r_s = Tensor::zeros({b, d});
  }

  Tensor r_a;
  if (have_acoustic) {
    std::vector<const dsp::FrameMatrix *> frames;
    frames.reserve(b);
    for (const auto *s : batch) frames.push_back(s->frames);
    r_a = audio_enc_->encode(frames, train);
  }

  Tensor r_t;
  if (have_timing) {
    std::vector<std::array<int, 4>> ids;
    ids.reserve(b);
    for (const auto *s : batch) ids.push_back(s->bucket_ids);
    r_t = timing_enc_->encode(ids);
  }

  Tensor fused;
  if (config_.method == fusion::FusionMethod::kGmf) {
    if (!have_acoustic) {
      // surviving pair fuses through the r_st affine alone
      fused = nn::tanh_op(nn::add(
          nn::matmul(nn::concat({r_s, r_t}, 1), fusion_.w_st, false, true),
          fusion_.b_st));
    } else if (!have_timing) {
      fused = nn::tanh_op(nn::add(
          nn::matmul(nn::concat({r_s, r_a}, 1), fusion_.w_sa, false, true),
          fusion_.b_sa));
    } else {
      fused = fusion::fuse_gated(r_s, r_a, r_t, fusion_).first;
    }
  } else if (config_.method == fusion::FusionMethod::kMfb) {
    fused = fusion::fuse_mfb(r_s, r_a, r_t, fusion_);
  } else {
    fused = fusion::fuse_baseline(config_.method, r_s, r_a, r_t, fusion_);
  }

  Forward out;
  out.fused = fused;
  out.yhat = fusion::predict(fused, fusion_);
  return out;
}

}  // namespace model
}  // namespace turntake
