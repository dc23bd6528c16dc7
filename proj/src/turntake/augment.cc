// turntake/augment.cc

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

#include "turntake/augment.h"

#include <cmath>

namespace turntake {
namespace augment {

std::pair<nn::Tensor, nn::Tensor> dropout_views(const nn::Tensor &r_fused, double p,
                                                std::pair<uint64_t, uint64_t> seeds) {
  nn::Tensor x = nn::dropout(r_fused, p, seeds.first, /*train=*/true);
  nn::Tensor x_pos = nn::dropout(r_fused, p, seeds.second, /*train=*/true);
  return {x, x_pos};
}

std::optional<corpus::IpuSample> truncate_endpointing(const corpus::IpuSample &sample,
                                                      text::TokenizerMode mode) {
  if (sample.scenario != corpus::Scenario::kEndpointing)
    throw std::invalid_argument("truncate_endpointing: sample is not endpointing");
  if (!sample.label || *sample.label != corpus::Label::kSwitch)
    throw std::invalid_argument("truncate_endpointing: sample is not a switch sample");

  auto tokens = text::tokenize(sample.text, mode);
  int64_t n = static_cast<int64_t>(tokens.size());
  if (n <= 10) return std::nullopt;

  int64_t keep = static_cast<int64_t>(std::ceil(0.7 * static_cast<double>(n)));
  std::string sep = mode == text::TokenizerMode::kWhitespace ? " " : "";
  std::string new_text;
  for (int64_t i = 0; i < keep; ++i) {
    if (i > 0) new_text += sep;
    new_text += tokens[i];
  }

  corpus::IpuSample out = sample;
  out.id = sample.id + "#trunc";
  out.text = new_text;
  int64_t duration = sample.ipu_end_ms - sample.ipu_start_ms;
  out.ipu_end_ms = sample.ipu_start_ms + llround(0.7 * static_cast<double>(duration));
  out.label = corpus::Label::kHold;
  out.augmented = true;
  return out;
}

corpus::IpuSample construct_bargein_overlap(const corpus::Utterance &question,
                                            const corpus::IpuSample &answer,
                                            int64_t shift_ms) {
  if (question.speaker != corpus::Speaker::kRobot)
    throw std::invalid_argument("construct_bargein_overlap: question must be robot speech");
  if (answer.ipu_start_ms < question.end_ms)
    throw std::invalid_argument(
        "construct_bargein_overlap: answer must start after the question ends");
  if (shift_ms <= 0)
    throw std::invalid_argument("construct_bargein_overlap: shift_ms must be positive");

  int64_t new_start = answer.ipu_start_ms - shift_ms;
  int64_t new_end = answer.ipu_end_ms - shift_ms;
  if (new_start >= question.end_ms)
    throw std::invalid_argument(
        "construct_bargein_overlap: shift too small, no overlap created");
  if (new_start <= question.start_ms)
    throw std::invalid_argument(
        "construct_bargein_overlap: shift too large, answer would no longer start later");

  corpus::IpuSample out = answer;
  out.id = answer.id + "#overlap";
  out.ipu_start_ms = new_start;
  out.ipu_end_ms = new_end;
  out.scenario = corpus::Scenario::kBargein;
  out.label = corpus::Label::kSwitch;
  out.robot_overlap_ms = std::min(question.end_ms, new_end) - new_start;
  out.prev_turn_end_ms = question.end_ms;
  out.augmented = true;
  return out;
}

ClBatchPlan assemble_cl_batch(const std::vector<corpus::Label> &row_labels) {
  ClBatchPlan plan;
  int n = static_cast<int>(row_labels.size());
  for (int i = 0; i < n; ++i) {
    std::vector<int> negs;
    for (int j = 0; j < n; ++j)
      if (row_labels[j] != row_labels[i]) negs.push_back(j);
    if (negs.empty()) {
      ++plan.skipped_anchors;
      continue;
    }
    plan.anchors.push_back(i);
    plan.negatives.push_back(std::move(negs));
  }
  return plan;
}

}  // namespace augment
}  // namespace turntake
