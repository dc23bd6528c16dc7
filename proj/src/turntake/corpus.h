// turntake/corpus.h

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

#ifndef TURNTAKE_CORPUS_H_
#define TURNTAKE_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "turntake/common.h"

namespace turntake {
namespace corpus {

// A customer IPU is a maximal stretch of customer speech whose internal
// silences are all <= 200 ms; a silence strictly longer than 200 ms
// closes it.
constexpr int64_t kIpuGapMs = 200;

enum class Speaker { kCustomer, kRobot };
enum class Scenario { kEndpointing, kBargein };
enum class Label { kHold = 0, kSwitch = 1 };

std::string speaker_name(Speaker s);
Speaker speaker_from_name(const std::string &name);
std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string &name);
std::string label_name(Label l);
Label label_from_name(const std::string &name);

struct Utterance {
  Speaker speaker = Speaker::kCustomer;
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::string text;                       // may be empty for noise
  std::optional<std::string> audio_path;  // relative to the corpus root
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;  // sorted ascending by start_ms
};

struct ContextTurn {
  Speaker speaker = Speaker::kRobot;
  std::string text;
};

struct IpuSample {
  std::string id;
  std::string dialogue_id;
  Scenario scenario = Scenario::kEndpointing;
  std::optional<Label> label;
  std::string text;
  std::vector<ContextTurn> context;  // all preceding turns, oldest first
  std::string audio_path;            // clip covering [ipu_start_ms, ipu_end_ms]
  int64_t ipu_start_ms = 0;
  int64_t ipu_end_ms = 0;
  std::optional<int64_t> prev_turn_end_ms;
  int64_t robot_overlap_ms = 0;  // 0 for endpointing
  bool augmented = false;
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  std::vector<IpuSample> samples;
  std::string root;         // directory the corpus was loaded from
  std::string content_hash; // fnv1a over the jsonl files
};

struct CorpusStats {
  // keyed by (scenario, label); proportions within each scenario sum to 1
  std::map<std::pair<Scenario, Label>, int64_t> counts;
  std::map<std::pair<Scenario, Label>, double> proportions;
};

// ---------------------------------------------------------------------------
// On-disk format: <dir>/dialogues.jsonl and/or <dir>/ipus.jsonl, one JSON
// object per line. Validates all type invariants; errors name the offending
// line or id. With require_audio, every referenced audio file must exist.
Corpus load_corpus(const std::string &dir, bool require_audio = false);
void save_corpus(const Corpus &corpus, const std::string &dir);

std::string dialogue_to_json(const Dialogue &d);
std::string ipu_to_json(const IpuSample &s);
Dialogue dialogue_from_json(const std::string &line);
IpuSample ipu_from_json(const std::string &line);

// ---------------------------------------------------------------------------
// Groups customer speech regions into IPUs under the 200 ms rule and fills
// text/context/prev-turn metadata from the dialogue. Regions must be sorted
// and non-overlapping. Returned samples are unlabeled.
std::vector<IpuSample> extract_ipus(
    const Dialogue &dialogue,
    const std::vector<std::pair<int64_t, int64_t>> &customer_regions);

enum class ScenarioClass { kEndpointing, kBargein, kUnclassifiable };

// Endpointing iff no overlap with robot speech; barge-in iff the IPU overlaps
// and starts after the overlapped robot region started. The remaining case
// (customer-first overlap) is flagged unclassifiable rather than binned.
// On a classifiable result, ipu->scenario and ipu->robot_overlap_ms are set.
ScenarioClass classify_scenario(
    IpuSample *ipu, const std::vector<std::pair<int64_t, int64_t>> &robot_regions);

// Exact per-(scenario, label) counts and proportions. Every sample must be
// labeled.
CorpusStats compute_stats(const std::vector<IpuSample> &samples);

// Fleiss' kappa over an items x categories count matrix. Each row must sum
// to `raters`. Throws NumericError when expected agreement is 1 (all ratings
// in one category), where kappa is undefined.
double fleiss_kappa(const std::vector<std::vector<int>> &ratings, int raters);

// Deterministic dialogue-level k-fold split: all samples of one dialogue land
// in the same fold; fold sizes differ by at most the largest dialogue.
// Returns per-fold index lists into `samples`.
std::vector<std::vector<size_t>> split_folds(const std::vector<IpuSample> &samples,
                                             int k, uint64_t seed);

}  // namespace corpus
}  // namespace turntake

#endif  // TURNTAKE_CORPUS_H_
