// turntake/synth.h

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

#ifndef TURNTAKE_SYNTH_H_
#define TURNTAKE_SYNTH_H_

#include <cstdint>
#include <string>

#include "turntake/corpus.h"

namespace turntake {
namespace synth {

// Synthetic dialogue corpus with label-tied cues planted independently in
// all three modalities:
//   semantic - switch samples end on a closing token, hold samples on a
//     connective; a context_cue_ratio share of endpointing samples instead
//     carry the cue in the preceding robot question (confirm- vs
//     describe-style), with a deliberately uninformative current utterance;
//   acoustic - harmonic voiced audio whose final-500 ms F0 slope falls for
//     switch and rises for hold, plus a label-tied trailing-silence length
//     (kept under the 200 ms IPU bound);
//   timing - IPU duration and pre-IPU interval drawn from label-conditioned
//     ranges.
// modality_noise flips each modality's cue independently with probability
// rho, so no single modality suffices when rho > 0. Ground truth goes to
// latent.jsonl.
struct SynthConfig {
  int n_endpointing = 2000;
  int n_bargein = 0;
  double endpointing_switch_ratio = 0.744;  // dataset-statistics defaults
  double bargein_switch_ratio = 0.235;
  double modality_noise = 0.0;  // rho
  double context_cue_ratio = 0.6;
  int samples_per_dialogue = 5;
  bool write_audio = true;
  uint64_t seed = 17;
};

// Emits dialogues.jsonl, ipus.jsonl, latent.jsonl and wav/ under out_dir.
// Byte-identical output for identical (config, seed).
void synth_corpus(const SynthConfig &config, const std::string &out_dir);

}  // namespace synth
}  // namespace turntake

#endif  // TURNTAKE_SYNTH_H_
