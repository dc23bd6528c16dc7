// turntake/encoders.h

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

#ifndef TURNTAKE_ENCODERS_H_
#define TURNTAKE_ENCODERS_H_

#include <array>
#include <optional>
#include <vector>

#include "turntake/dsp.h"
#include "turntake/nn/ops.h"
#include "turntake/nn/tensor.h"
#include "turntake/text.h"

namespace turntake {
namespace encoders {

// The three-encoder stack is 3 Transformer layers / an 18-weight-layer
// ResNet / 3 MLP layers. Widths are configurable; the layer structure is not.
constexpr int kResNetStages = 4;
constexpr int kBlocksPerStage = 2;
// 1 stem conv + 4 stages * 2 blocks * 2 convs + 1 output projection
constexpr int kResNetWeightLayers = 18;

struct EncoderConfig {
  int d_model = 128;
  int heads = 4;
  int transformer_layers = 3;
  int ffn_dim = 512;
  std::array<int, kResNetStages> resnet_channels = {16, 32, 64, 128};
  int mlp_layers = 3;
  double dropout_p = 0.1;
  int n_frames = dsp::kNumFrames;  // acoustic input rows (40 in production)
  int l_max = 128;
  int n_buckets = 10;
  int bucket_emb_dim() const { return d_model / 4; }

  void validate() const;
};

// init helpers shared by the encoders and fusion/classifier params
std::function<double()> xavier_init(Rng *rng, int fan_in, int fan_out);
std::function<double()> he_conv_init(Rng *rng, int fan_in);
std::function<double()> embedding_init(Rng *rng);
std::function<double()> const_init(double v);

// Transformer encoder over token/position/segment embeddings; pre-norm
// blocks with a padding mask; the CLS output is the text representation.
class TextEncoder {
 public:
  TextEncoder(const EncoderConfig &config, int vocab_size, nn::ParamRegistry *registry,
              Rng *init_rng, const text::EmbeddingTable *pretrained = nullptr);

  // returns the (1 x d_model) representation at the CLS position
  nn::Tensor encode(const text::TokenSequence &seq, bool train, Rng *drop_seeds) const;

 private:
  struct Layer {
    nn::Tensor ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    nn::Tensor ln2_g, ln2_b, w1, b1, w2, b2;
  };
  EncoderConfig config_;
  nn::Tensor tok_emb_;   // (V x d), or (V x dim_in) with a projection
  nn::Tensor emb_proj_;  // defined only with pretrained embeddings
  nn::Tensor pos_emb_, seg_emb_;
  std::vector<Layer> layers_;
  nn::Tensor lnf_g_, lnf_b_;
};

// 18-layer residual conv net over the (1 x n_frames x 30) feature image;
// time axis is downsampled at stages 2..4, the frequency axis never is.
class AudioEncoder {
 public:
  AudioEncoder(const EncoderConfig &config, nn::ParamRegistry *registry, Rng *init_rng);

  // frames: one FrameMatrix per batch row; returns (B x d_model)
  nn::Tensor encode(const std::vector<const dsp::FrameMatrix *> &frames,
                    bool train) const;

 private:
  struct BnParams {
    nn::Tensor gamma, beta;
    std::vector<double> *running_mean = nullptr;
    std::vector<double> *running_var = nullptr;
  };
  struct Block {
    nn::Tensor conv1, conv2;
    BnParams bn1, bn2;
    nn::Tensor down_conv;  // defined when the skip needs reshaping
    BnParams down_bn;
    int stride_h = 1;
  };
  nn::Tensor apply_bn(const nn::Tensor &x, const BnParams &bn, bool train) const;

  EncoderConfig config_;
  nn::Tensor stem_conv_;
  BnParams stem_bn_;
  std::vector<Block> blocks_;
  nn::Tensor proj_w_, proj_b_;
};

// four bucket embeddings concatenated, then mlp_layers affine+relu layers
class TimingEncoder {
 public:
  TimingEncoder(const EncoderConfig &config, nn::ParamRegistry *registry, Rng *init_rng);

  // bucket_ids: 4 ids per batch row; returns (B x d_model)
  nn::Tensor encode(const std::vector<std::array<int, 4>> &bucket_ids) const;

 private:
  EncoderConfig config_;
  std::array<nn::Tensor, 4> emb_;
  std::vector<std::pair<nn::Tensor, nn::Tensor>> layers_;  // (w, b)
};

}  // namespace encoders
}  // namespace turntake

#endif  // TURNTAKE_ENCODERS_H_
