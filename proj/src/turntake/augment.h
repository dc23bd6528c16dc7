// turntake/augment.h

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

#ifndef TURNTAKE_AUGMENT_H_
#define TURNTAKE_AUGMENT_H_

#include <optional>
#include <utility>
#include <vector>

#include "turntake/corpus.h"
#include "turntake/nn/ops.h"
#include "turntake/text.h"

namespace turntake {
namespace augment {

// two independently masked train-mode dropout views of the same fused
// representation, the contrastive (anchor, positive) pair
std::pair<nn::Tensor, nn::Tensor> dropout_views(const nn::Tensor &r_fused, double p,
                                                std::pair<uint64_t, uint64_t> seeds);

// Endpointing switch samples with more than 10 tokens become hold samples:
// keep the first ceil(0.7 n) tokens, move the IPU end to start +
// round(0.7 * duration) (the audio clip itself is reused; featurization
// reads up to the new end). Ineligible samples yield nullopt.
std::optional<corpus::IpuSample> truncate_endpointing(const corpus::IpuSample &sample,
                                                      text::TokenizerMode mode);

// Moves a question-answer pair's answer earlier by shift_ms so it overlaps
// the robot question; label switch, scenario bargein. Rejects shifts that
// create no overlap or push the answer before the question start.
corpus::IpuSample construct_bargein_overlap(const corpus::Utterance &question,
                                            const corpus::IpuSample &answer,
                                            int64_t shift_ms);

// Contrastive batch plan over one training step's rows (real samples first,
// then any augmented ones). Every row is an anchor; its negatives are the
// rows with the opposite label. Anchors with no negatives are dropped and
// counted.
struct ClBatchPlan {
  std::vector<int> anchors;
  std::vector<std::vector<int>> negatives;  // parallel to anchors
  int skipped_anchors = 0;
};

ClBatchPlan assemble_cl_batch(const std::vector<corpus::Label> &row_labels);

}  // namespace augment
}  // namespace turntake

#endif  // TURNTAKE_AUGMENT_H_
