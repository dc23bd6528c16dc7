// turntake/model.h

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

#ifndef TURNTAKE_MODEL_H_
#define TURNTAKE_MODEL_H_

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "turntake/encoders.h"
#include "turntake/fusion.h"

namespace turntake {
namespace model {

enum class Ablation { kNone, kNoSemantic, kNoContext, kNoAcoustic, kNoTiming };

Ablation ablation_from_name(const std::string &name);  // "" -> kNone
std::string ablation_name(Ablation a);

struct ModelConfig {
  encoders::EncoderConfig encoder;
  fusion::FusionMethod method = fusion::FusionMethod::kGmf;
  Ablation ablation = Ablation::kNone;
};

// Everything the model needs for one sample, with vocabulary- and
// bucket-dependent parts already resolved.
struct EncodedSample {
  std::string id;
  text::TokenSequence tokens;
  std::array<int, 4> bucket_ids{};
  const dsp::FrameMatrix *frames = nullptr;
  double label = 0.0;  // hold=0, switch=1
  bool augmented = false;
};

// The full classifier: three encoders, a fusion block, and the sigmoid head.
// Ablations zero or bypass one branch; the dropped branch's parameters are
// never created.
class GmfModel {
 public:
  GmfModel(const ModelConfig &config, int vocab_size, uint64_t init_seed,
           const text::EmbeddingTable *pretrained = nullptr);

  struct Forward {
    nn::Tensor fused;  // (B x d)
    nn::Tensor yhat;   // (B x 1)
  };
  // drop_seeds supplies one seed per internal dropout call; required in
  // train mode, ignored in eval mode.
  Forward forward(const std::vector<const EncodedSample *> &batch, bool train,
                  Rng *drop_seeds);

  nn::ParamRegistry &registry() { return registry_; }
  const nn::ParamRegistry &registry() const { return registry_; }
  const ModelConfig &config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  const fusion::GmfParams &fusion_params() const { return fusion_; }

 private:
  ModelConfig config_;
  int vocab_size_;
  nn::ParamRegistry registry_;
  std::unique_ptr<encoders::TextEncoder> text_enc_;
  std::unique_ptr<encoders::AudioEncoder> audio_enc_;
  std::unique_ptr<encoders::TimingEncoder> timing_enc_;
  fusion::GmfParams fusion_;
};

}  // namespace model
}  // namespace turntake

#endif  // TURNTAKE_MODEL_H_
