// turntake/encoders.cc

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

#include "turntake/encoders.h"

#include <cmath>

namespace turntake {
namespace encoders {

using nn::Tensor;

void EncoderConfig::validate() const {
  if (d_model < 4 || d_model % 4 != 0)
    throw std::invalid_argument("EncoderConfig: d_model must be a positive multiple of 4");
  if (heads < 1 || d_model % heads != 0)
    throw std::invalid_argument("EncoderConfig: d_model must be divisible by heads");
  if (transformer_layers < 1 || mlp_layers < 1 || ffn_dim < 1)
    throw std::invalid_argument("EncoderConfig: layer sizes must be positive");
  for (int c : resnet_channels)
    if (c < 1) throw std::invalid_argument("EncoderConfig: resnet channels must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw std::invalid_argument("EncoderConfig: dropout_p must be in [0, 1)");
  if (n_frames < 1 || l_max < 4 || n_buckets < 2)
    throw std::invalid_argument("EncoderConfig: bad input sizes");
}

std::function<double()> xavier_init(Rng *rng, int fan_in, int fan_out) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  return [rng, limit]() { return rng->uniform(-limit, limit); };
}

std::function<double()> he_conv_init(Rng *rng, int fan_in) {
  double stddev = std::sqrt(2.0 / fan_in);
  return [rng, stddev]() { return rng->normal(0.0, stddev); };
}

std::function<double()> embedding_init(Rng *rng) {
  return [rng]() { return rng->normal(0.0, 0.1); };
}

std::function<double()> const_init(double v) {
  return [v]() { return v; };
}

// ---------------------------------------------------------------------------
// TextEncoder

TextEncoder::TextEncoder(const EncoderConfig &config, int vocab_size,
                         nn::ParamRegistry *registry, Rng *init_rng,
                         const text::EmbeddingTable *pretrained)
    : config_(config) {
  config.validate();
  int d = config.d_model;
  if (pretrained) {
    if (static_cast<int>(pretrained->rows.size()) != vocab_size)
      throw std::invalid_argument("pretrained table does not match vocabulary size");
    int dim_in = pretrained->dim;
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(vocab_size) * dim_in);
    for (const auto &row : pretrained->rows) flat.insert(flat.end(), row.begin(), row.end());
    size_t i = 0;
    tok_emb_ = registry->add("text.tok_emb", {vocab_size, dim_in},
                             [&flat, &i]() { return flat[i++]; });
    emb_proj_ = registry->add("text.emb_proj", {d, dim_in}, xavier_init(init_rng, dim_in, d));
  } else {
    tok_emb_ = registry->add("text.tok_emb", {vocab_size, d}, embedding_init(init_rng));
  }
  pos_emb_ = registry->add("text.pos_emb", {config.l_max, d}, embedding_init(init_rng));
  seg_emb_ = registry->add("text.seg_emb", {2, d}, embedding_init(init_rng));
  for (int l = 0; l < config.transformer_layers; ++l) {
    std::string p = "text.layer" + std::to_string(l) + ".";
    Layer layer;
    layer.ln1_g = registry->add(p + "ln1.g", {d}, const_init(1.0));
    layer.ln1_b = registry->add(p + "ln1.b", {d}, const_init(0.0));
    layer.wq = registry->add(p + "wq", {d, d}, xavier_init(init_rng, d, d));
    layer.bq = registry->add(p + "bq", {d}, const_init(0.0));
    layer.wk = registry->add(p + "wk", {d, d}, xavier_init(init_rng, d, d));
    layer.bk = registry->add(p + "bk", {d}, const_init(0.0));
    layer.wv = registry->add(p + "wv", {d, d}, xavier_init(init_rng, d, d));
    layer.bv = registry->add(p + "bv", {d}, const_init(0.0));
    layer.wo = registry->add(p + "wo", {d, d}, xavier_init(init_rng, d, d));
    layer.bo = registry->add(p + "bo", {d}, const_init(0.0));
    layer.ln2_g = registry->add(p + "ln2.g", {d}, const_init(1.0));
    layer.ln2_b = registry->add(p + "ln2.b", {d}, const_init(0.0));
    layer.w1 = registry->add(p + "ffn.w1", {config.ffn_dim, d},
                             xavier_init(init_rng, d, config.ffn_dim));
    layer.b1 = registry->add(p + "ffn.b1", {config.ffn_dim}, const_init(0.0));
    layer.w2 = registry->add(p + "ffn.w2", {d, config.ffn_dim},
                             xavier_init(init_rng, config.ffn_dim, d));
    layer.b2 = registry->add(p + "ffn.b2", {d}, const_init(0.0));
    layers_.push_back(std::move(layer));
  }
  lnf_g_ = registry->add("text.lnf.g", {d}, const_init(1.0));
  lnf_b_ = registry->add("text.lnf.b", {d}, const_init(0.0));
}

Tensor TextEncoder::encode(const text::TokenSequence &seq, bool train,
                           Rng *drop_seeds) const {
  int len = static_cast<int>(seq.token_ids.size());
  if (len == 0) throw std::invalid_argument("encode_text: empty sequence");
  if (len > config_.l_max)
    throw std::invalid_argument("encode_text: sequence longer than l_max");
  if (seq.segment_ids.size() != seq.token_ids.size())
    throw std::invalid_argument("encode_text: token/segment length mismatch");

  int d = config_.d_model;
  int dh = d / config_.heads;
  double p = config_.dropout_p;

  Tensor tok = nn::embedding_lookup(tok_emb_, seq.token_ids);
  if (emb_proj_.defined()) tok = nn::matmul(tok, emb_proj_, false, true);
  std::vector<int> positions(len);
  for (int i = 0; i < len; ++i) positions[i] = i;
  Tensor x = nn::add(nn::add(tok, nn::embedding_lookup(pos_emb_, positions)),
                     nn::embedding_lookup(seg_emb_, seq.segment_ids));
  x = nn::dropout(x, p, drop_seeds->next_u64(), train);

  // additive mask applied to attention scores: PAD columns get -1e9
  std::vector<double> mask_values(len, 0.0);
  for (int i = 0; i < len; ++i)
    if (seq.token_ids[i] == text::kPadId) mask_values[i] = -1e9;
  Tensor mask = Tensor::from_values({len}, std::move(mask_values));

  double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const auto &layer : layers_) {
    Tensor h = nn::layer_norm(x, layer.ln1_g, layer.ln1_b);
    Tensor q = nn::add(nn::matmul(h, layer.wq, false, true), layer.bq);
    Tensor k = nn::add(nn::matmul(h, layer.wk, false, true), layer.bk);
    Tensor v = nn::add(nn::matmul(h, layer.wv, false, true), layer.bv);
    std::vector<Tensor> head_outs;
    for (int hd = 0; hd < config_.heads; ++hd) {
      Tensor qh = nn::slice(q, 1, hd * dh, (hd + 1) * dh);
      Tensor kh = nn::slice(k, 1, hd * dh, (hd + 1) * dh);
      Tensor vh = nn::slice(v, 1, hd * dh, (hd + 1) * dh);
      Tensor scores = nn::scale(nn::matmul(qh, kh, false, true), att_scale);
      scores = nn::add(scores, mask);
      Tensor attn = nn::softmax(scores, 1);
      head_outs.push_back(nn::matmul(attn, vh));
    }
    Tensor ctx = config_.heads == 1 ? head_outs[0] : nn::concat(head_outs, 1);
    Tensor attn_out = nn::add(nn::matmul(ctx, layer.wo, false, true), layer.bo);
    attn_out = nn::dropout(attn_out, p, drop_seeds->next_u64(), train);
    x = nn::add(x, attn_out);

    Tensor h2 = nn::layer_norm(x, layer.ln2_g, layer.ln2_b);
    Tensor f = nn::relu(nn::add(nn::matmul(h2, layer.w1, false, true), layer.b1));
    f = nn::add(nn::matmul(f, layer.w2, false, true), layer.b2);
    f = nn::dropout(f, p, drop_seeds->next_u64(), train);
    x = nn::add(x, f);
  }
  x = nn::layer_norm(x, lnf_g_, lnf_b_);
  return nn::slice(x, 0, 0, 1);  // CLS row, (1 x d)
}

// ---------------------------------------------------------------------------
// AudioEncoder

AudioEncoder::AudioEncoder(const EncoderConfig &config, nn::ParamRegistry *registry,
                           Rng *init_rng)
    : config_(config) {
  config.validate();
  int c1 = config.resnet_channels[0];
  stem_conv_ = registry->add("audio.stem.conv.w", {c1, 1, 3, 3}, he_conv_init(init_rng, 9));
  stem_bn_.gamma = registry->add("audio.stem.bn.g", {c1}, const_init(1.0));
  stem_bn_.beta = registry->add("audio.stem.bn.b", {c1}, const_init(0.0));
  stem_bn_.running_mean = registry->add_buffer("audio.stem.bn.rm", c1, 0.0);
  stem_bn_.running_var = registry->add_buffer("audio.stem.bn.rv", c1, 1.0);

  int in_ch = c1;
  for (int s = 0; s < kResNetStages; ++s) {
    int out_ch = config.resnet_channels[s];
    for (int b = 0; b < kBlocksPerStage; ++b) {
      std::string p = "audio.s" + std::to_string(s) + ".b" + std::to_string(b) + ".";
      Block block;
      block.stride_h = (s > 0 && b == 0) ? 2 : 1;  // time axis only
      block.conv1 = registry->add(p + "conv1.w", {out_ch, in_ch, 3, 3},
                                  he_conv_init(init_rng, in_ch * 9));
      block.bn1.gamma = registry->add(p + "bn1.g", {out_ch}, const_init(1.0));
      block.bn1.beta = registry->add(p + "bn1.b", {out_ch}, const_init(0.0));
      block.bn1.running_mean = registry->add_buffer(p + "bn1.rm", out_ch, 0.0);
      block.bn1.running_var = registry->add_buffer(p + "bn1.rv", out_ch, 1.0);
      block.conv2 = registry->add(p + "conv2.w", {out_ch, out_ch, 3, 3},
                                  he_conv_init(init_rng, out_ch * 9));
      block.bn2.gamma = registry->add(p + "bn2.g", {out_ch}, const_init(1.0));
      block.bn2.beta = registry->add(p + "bn2.b", {out_ch}, const_init(0.0));
      block.bn2.running_mean = registry->add_buffer(p + "bn2.rm", out_ch, 0.0);
      block.bn2.running_var = registry->add_buffer(p + "bn2.rv", out_ch, 1.0);
      if (block.stride_h != 1 || in_ch != out_ch) {
        block.down_conv = registry->add(p + "down.conv.w", {out_ch, in_ch, 1, 1},
                                        he_conv_init(init_rng, in_ch));
        block.down_bn.gamma = registry->add(p + "down.bn.g", {out_ch}, const_init(1.0));
        block.down_bn.beta = registry->add(p + "down.bn.b", {out_ch}, const_init(0.0));
        block.down_bn.running_mean = registry->add_buffer(p + "down.bn.rm", out_ch, 0.0);
        block.down_bn.running_var = registry->add_buffer(p + "down.bn.rv", out_ch, 1.0);
      }
      blocks_.push_back(std::move(block));
      in_ch = out_ch;
    }
  }
  int c4 = config.resnet_channels[kResNetStages - 1];
  proj_w_ = registry->add("audio.proj.w", {config.d_model, c4},
                          xavier_init(init_rng, c4, config.d_model));
  proj_b_ = registry->add("audio.proj.b", {config.d_model}, const_init(0.0));
}

Tensor AudioEncoder::apply_bn(const Tensor &x, const BnParams &bn, bool train) const {
  return nn::batch_norm(x, bn.gamma, bn.beta, bn.running_mean, bn.running_var, train);
}

Tensor AudioEncoder::encode(const std::vector<const dsp::FrameMatrix *> &frames,
                            bool train) const {
  int b = static_cast<int>(frames.size());
  if (b == 0) throw std::invalid_argument("encode_audio: empty batch");
  int h = config_.n_frames, w = dsp::kFrameDim;
  // with a reduced n_frames, keep the most recent rows (padding sits on top)
  int skip = (dsp::kNumFrames - h) * w;
  std::vector<double> input;
  input.reserve(static_cast<size_t>(b) * h * w);
  for (const auto *fm : frames) {
    if (fm == nullptr) throw std::invalid_argument("encode_audio: null frame matrix");
    input.insert(input.end(), fm->data.begin() + skip, fm->data.begin() + skip + h * w);
  }
  Tensor x = Tensor::from_values({b, 1, h, w}, std::move(input));

  x = nn::relu(apply_bn(nn::conv2d(x, stem_conv_, Tensor(), 1, 1), stem_bn_, train));
  for (const auto &block : blocks_) {
    Tensor skip = x;
    Tensor y = nn::conv2d(x, block.conv1, Tensor(), block.stride_h, 1);
    y = nn::relu(apply_bn(y, block.bn1, train));
    y = nn::conv2d(y, block.conv2, Tensor(), 1, 1);
    y = apply_bn(y, block.bn2, train);
    if (block.down_conv.defined()) {
      skip = apply_bn(nn::conv2d(x, block.down_conv, Tensor(), block.stride_h, 1),
                      block.down_bn, train);
    }
    x = nn::relu(nn::add(y, skip));
  }
  Tensor pooled = nn::global_avg_pool(x);  // (B x c4)
  return nn::add(nn::matmul(pooled, proj_w_, false, true), proj_b_);
}

// ---------------------------------------------------------------------------
// TimingEncoder

TimingEncoder::TimingEncoder(const EncoderConfig &config, nn::ParamRegistry *registry,
                             Rng *init_rng)
    : config_(config) {
  config.validate();
  int d = config.d_model;
  int e = config.bucket_emb_dim();
  for (int f = 0; f < 4; ++f)
    emb_[f] = registry->add("timing.emb" + std::to_string(f), {config.n_buckets, e},
                            embedding_init(init_rng));
  for (int l = 0; l < config.mlp_layers; ++l) {
    std::string p = "timing.l" + std::to_string(l) + ".";
    Tensor w = registry->add(p + "w", {d, d}, xavier_init(init_rng, d, d));
    Tensor b = registry->add(p + "b", {d}, const_init(0.0));
    layers_.emplace_back(w, b);
  }
}

Tensor TimingEncoder::encode(const std::vector<std::array<int, 4>> &bucket_ids) const {
  int b = static_cast<int>(bucket_ids.size());
  if (b == 0) throw std::invalid_argument("encode_timing: empty batch");
  for (const auto &ids : bucket_ids)
    for (int id : ids)
      if (id < 0 || id >= config_.n_buckets)
        throw std::invalid_argument("encode_timing: bucket id out of range");

  // one lookup per feature, concatenated to (B x d)
  std::vector<Tensor> parts;
  for (int f = 0; f < 4; ++f) {
    std::vector<int> ids(b);
    for (int i = 0; i < b; ++i) ids[i] = bucket_ids[i][f];
    parts.push_back(nn::embedding_lookup(emb_[f], ids));
  }
  Tensor x = nn::concat(parts, 1);
  for (const auto &[w, bias] : layers_)
    x = nn::relu(nn::add(nn::matmul(x, w, false, true), bias));
  return x;
}

}  // namespace encoders
}  // namespace turntake
