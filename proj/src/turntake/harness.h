// turntake/harness.h

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

#ifndef TURNTAKE_HARNESS_H_
#define TURNTAKE_HARNESS_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "turntake/corpus.h"
#include "turntake/model.h"
#include "turntake/timing.h"

namespace turntake {
namespace harness {

struct TrainConfig {
  std::string scenario = "endpointing";
  std::string fusion = "gmf";
  std::string drop;  // "", "semantic", "context", "acoustic", "timing"
  bool cl_enabled = false;
  double tau = 0.05;
  double cl_dropout_p = 0.1;
  int batch_size = 32;
  int epochs = 20;
  int patience = 5;
  double lr = 1e-3;
  uint64_t seed = 17;
  int context_turns = 3;
  int min_count = 1;
  std::string tokenizer = "whitespace";
  int aug_total = 400;
  int aug_per_batch = 8;
  bool aug_in_ce = true;
  int k_folds = 10;
  double dev_fraction = 0.1;
  std::string embeddings_path;  // empty -> random init
  int embed_dim_in = 300;
  encoders::EncoderConfig encoder;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json &j);

  corpus::Scenario scenario_enum() const { return corpus::scenario_from_name(scenario); }
  fusion::FusionMethod fusion_enum() const { return fusion::fusion_from_name(fusion); }
  model::Ablation ablation_enum() const { return model::ablation_from_name(drop); }
  text::TokenizerMode tokenizer_mode() const {
    return text::tokenizer_mode_from_name(tokenizer);
  }
  int effective_context_turns() const {
    return ablation_enum() == model::Ablation::kNoContext ? 0 : context_turns;
  }
};

struct Metrics {
  double accuracy = 0.0;
  double precision_switch = 0.0, recall_switch = 0.0, f1_switch = 0.0;
  double precision_hold = 0.0, recall_hold = 0.0, f1_hold = 0.0;
  double macro_f1 = 0.0;
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;  // switch is the positive class

  static Metrics from_counts(int64_t tp, int64_t fp, int64_t fn, int64_t tn);
  nlohmann::ordered_json to_json() const;
};

struct PredRecord {
  std::string id;
  int label = 0;
  int pred = 0;
  double prob = 0.0;
};

struct FoldResult {
  int fold = 0;
  Metrics metrics;
  std::vector<PredRecord> predictions;
};

struct CrossValResult {
  std::vector<FoldResult> folds;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double macro_f1_mean = 0.0, macro_f1_std = 0.0;
  int64_t cl_skipped_batches = 0;
};

// Frame matrices and raw timing features are fold-independent; computed once
// per corpus and shared. Frames are keyed by (audio_path, end_ms) so that
// truncation-augmented samples reuse the original clips.
class FeatureCache {
 public:
  explicit FeatureCache(const corpus::Corpus *corpus, text::TokenizerMode mode)
      : corpus_(corpus), mode_(mode) {}

  // preload frames for a set of samples (parallel over clips)
  void preload(const std::vector<const corpus::IpuSample *> &samples);

  const dsp::FrameMatrix *frames_for(const corpus::IpuSample &sample);
  timing::TimingFeatures timing_for(const corpus::IpuSample &sample) const;

 private:
  const corpus::Corpus *corpus_;
  text::TokenizerMode mode_;
  std::map<std::string, dsp::FrameMatrix> frames_;
};

// One trained model plus everything needed to reuse it: the exact config,
// the fold vocabulary, and the fitted bucket spec.
struct TrainedModel {
  TrainConfig config;
  text::Vocabulary vocab;
  timing::BucketSpec buckets;
  std::unique_ptr<model::GmfModel> net;
  int64_t cl_skipped_batches = 0;
  int best_epoch = -1;

  void save(const std::string &path) const;
  static TrainedModel load(const std::string &path);
};

// Minibatch Adam on L_ce (+ L_cl when enabled), early stopping on dev
// macro-F1. aug_sources provides the train-fold samples (any scenario) that
// augmentation may draw on. Divergence dumps state and rethrows.
TrainedModel train(const TrainConfig &config, const corpus::Corpus &corpus,
                   const std::vector<const corpus::IpuSample *> &train_samples,
                   const std::vector<const corpus::IpuSample *> &dev_samples,
                   const std::vector<const corpus::IpuSample *> &aug_sources,
                   FeatureCache *cache, uint64_t seed,
                   std::vector<std::string> *log_lines);

Metrics evaluate(TrainedModel *trained, const std::vector<const corpus::IpuSample *> &samples,
                 FeatureCache *cache, std::vector<PredRecord> *predictions = nullptr);

// Dialogue-level k-fold cross-validation: per fold, the vocabulary and
// buckets are refit on that fold's training split only, and augmented
// samples never reach an eval fold.
CrossValResult cross_validate(const TrainConfig &config, const corpus::Corpus &corpus,
                              std::vector<std::string> *log_lines = nullptr);

Metrics baseline_random(const std::vector<const corpus::IpuSample *> &samples,
                        uint64_t seed, std::vector<PredRecord> *predictions = nullptr);
Metrics baseline_majority(const std::vector<const corpus::IpuSample *> &train,
                          const std::vector<const corpus::IpuSample *> &eval,
                          std::vector<PredRecord> *predictions = nullptr);

// Two-sided exact binomial sign test on discordant pairs; ties discarded.
// Zero discordant pairs yields p = 1 with the flag set.
struct SignTestResult {
  double p_value = 1.0;
  int64_t n_a_only = 0;  // a correct, b wrong
  int64_t n_b_only = 0;
  bool degenerate = false;
};
SignTestResult sign_test(const std::vector<int> &pred_a, const std::vector<int> &pred_b,
                         const std::vector<int> &labels);

CrossValResult run_ablation(const TrainConfig &config, const corpus::Corpus &corpus,
                            const std::string &drop,
                            std::vector<std::string> *log_lines = nullptr);

// scenario-filtered, non-augmented sample pointers in corpus order
std::vector<const corpus::IpuSample *> scenario_samples(const corpus::Corpus &corpus,
                                                        corpus::Scenario scenario);

nlohmann::ordered_json results_json(const TrainConfig &config,
                                    const corpus::Corpus &corpus,
                                    const CrossValResult &result);

}  // namespace harness
}  // namespace turntake

#endif  // TURNTAKE_HARNESS_H_
