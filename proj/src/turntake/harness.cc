// turntake/harness.cc

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

#include "turntake/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "turntake/augment.h"
#include "turntake/nn/adam.h"
#include "turntake/nn/checkpoint.h"
#include "turntake/wav.h"

namespace turntake {
namespace harness {

using corpus::IpuSample;
using corpus::Label;
using model::EncodedSample;

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  scenario_enum();
  fusion_enum();
  ablation_enum();
  tokenizer_mode();
  if (tau <= 0.0) throw std::invalid_argument("config: tau must be positive");
  if (cl_dropout_p < 0.0 || cl_dropout_p >= 1.0)
    throw std::invalid_argument("config: cl_dropout_p must be in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (patience < 1) throw std::invalid_argument("config: patience must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("config: lr must be positive");
  if (context_turns < 0) throw std::invalid_argument("config: context_turns must be >= 0");
  if (min_count < 1) throw std::invalid_argument("config: min_count must be >= 1");
  if (aug_total < 0 || aug_per_batch < 0)
    throw std::invalid_argument("config: augmentation counts must be >= 0");
  if (k_folds < 2) throw std::invalid_argument("config: k_folds must be >= 2");
  if (dev_fraction < 0.0 || dev_fraction >= 1.0)
    throw std::invalid_argument("config: dev_fraction must be in [0, 1)");
  if (embed_dim_in < 1) throw std::invalid_argument("config: embed_dim_in must be >= 1");
  encoder.validate();
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["fusion"] = fusion;
  j["drop"] = drop;
  j["cl_enabled"] = cl_enabled;
  j["tau"] = tau;
  j["cl_dropout_p"] = cl_dropout_p;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["patience"] = patience;
  j["lr"] = lr;
  j["seed"] = seed;
  j["context_turns"] = context_turns;
  j["min_count"] = min_count;
  j["tokenizer"] = tokenizer;
  j["aug_total"] = aug_total;
  j["aug_per_batch"] = aug_per_batch;
  j["aug_in_ce"] = aug_in_ce;
  j["k_folds"] = k_folds;
  j["dev_fraction"] = dev_fraction;
  j["embeddings_path"] = embeddings_path;
  j["embed_dim_in"] = embed_dim_in;
  nlohmann::ordered_json e;
  e["d_model"] = encoder.d_model;
  e["heads"] = encoder.heads;
  e["transformer_layers"] = encoder.transformer_layers;
  e["ffn_dim"] = encoder.ffn_dim;
  e["resnet_channels"] = encoder.resnet_channels;
  e["mlp_layers"] = encoder.mlp_layers;
  e["dropout_p"] = encoder.dropout_p;
  e["n_frames"] = encoder.n_frames;
  e["l_max"] = encoder.l_max;
  e["n_buckets"] = encoder.n_buckets;
  j["encoder"] = e;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json &j) {
  TrainConfig c;
  c.scenario = j.value("scenario", c.scenario);
  c.fusion = j.value("fusion", c.fusion);
  c.drop = j.value("drop", c.drop);
  c.cl_enabled = j.value("cl_enabled", c.cl_enabled);
  c.tau = j.value("tau", c.tau);
  c.cl_dropout_p = j.value("cl_dropout_p", c.cl_dropout_p);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.patience = j.value("patience", c.patience);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.context_turns = j.value("context_turns", c.context_turns);
  c.min_count = j.value("min_count", c.min_count);
  c.tokenizer = j.value("tokenizer", c.tokenizer);
  c.aug_total = j.value("aug_total", c.aug_total);
  c.aug_per_batch = j.value("aug_per_batch", c.aug_per_batch);
  c.aug_in_ce = j.value("aug_in_ce", c.aug_in_ce);
  c.k_folds = j.value("k_folds", c.k_folds);
  c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
  c.embeddings_path = j.value("embeddings_path", c.embeddings_path);
  c.embed_dim_in = j.value("embed_dim_in", c.embed_dim_in);
  if (j.contains("encoder")) {
    const auto &e = j.at("encoder");
    c.encoder.d_model = e.value("d_model", c.encoder.d_model);
    c.encoder.heads = e.value("heads", c.encoder.heads);
    c.encoder.transformer_layers =
        e.value("transformer_layers", c.encoder.transformer_layers);
    c.encoder.ffn_dim = e.value("ffn_dim", c.encoder.ffn_dim);
    if (e.contains("resnet_channels")) {
      auto ch = e.at("resnet_channels").get<std::vector<int>>();
      if (ch.size() != 4)
        throw DataError("config: resnet_channels must have 4 entries");
      std::copy(ch.begin(), ch.end(), c.encoder.resnet_channels.begin());
    }
    c.encoder.mlp_layers = e.value("mlp_layers", c.encoder.mlp_layers);
    c.encoder.dropout_p = e.value("dropout_p", c.encoder.dropout_p);
    c.encoder.n_frames = e.value("n_frames", c.encoder.n_frames);
    c.encoder.l_max = e.value("l_max", c.encoder.l_max);
    c.encoder.n_buckets = e.value("n_buckets", c.encoder.n_buckets);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

Metrics Metrics::from_counts(int64_t tp, int64_t fp, int64_t fn, int64_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  int64_t total = tp + fp + fn + tn;
  m.accuracy = safe_div(static_cast<double>(tp + tn), static_cast<double>(total));
  m.precision_switch = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall_switch = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.f1_switch = f1_of(m.precision_switch, m.recall_switch);
  m.precision_hold = safe_div(static_cast<double>(tn), static_cast<double>(tn + fn));
  m.recall_hold = safe_div(static_cast<double>(tn), static_cast<double>(tn + fp));
  m.f1_hold = f1_of(m.precision_hold, m.recall_hold);
  m.macro_f1 = 0.5 * (m.f1_switch + m.f1_hold);
  return m;
}

nlohmann::ordered_json Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["macro_f1"] = macro_f1;
  j["precision_switch"] = precision_switch;
  j["recall_switch"] = recall_switch;
  j["f1_switch"] = f1_switch;
  j["precision_hold"] = precision_hold;
  j["recall_hold"] = recall_hold;
  j["f1_hold"] = f1_hold;
  j["confusion"] = {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}};
  return j;
}

namespace {

Metrics metrics_from_records(const std::vector<PredRecord> &records) {
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto &r : records) {
    if (r.label == 1 && r.pred == 1) ++tp;
    else if (r.label == 0 && r.pred == 1) ++fp;
    else if (r.label == 1 && r.pred == 0) ++fn;
    else ++tn;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureCache

namespace {

std::string frame_key(const std::string &audio_path, int64_t end_ms) {
  return audio_path + "#" + std::to_string(end_ms);
}

int64_t frame_end_ms(const IpuSample &sample) {
  return sample.ipu_end_ms - sample.ipu_start_ms;  // clip covers the IPU
}

}  // namespace

void FeatureCache::preload(const std::vector<const IpuSample *> &samples) {
  std::vector<const IpuSample *> missing;
  for (const auto *s : samples) {
    if (s->audio_path.empty())
      throw DataError("sample " + s->id + " has no audio file");
    if (!frames_.count(frame_key(s->audio_path, frame_end_ms(*s))))
      missing.push_back(s);
  }
  if (missing.empty()) return;
  std::vector<dsp::AudioClip> clips(missing.size());
  for (size_t i = 0; i < missing.size(); ++i)
    clips[i].samples = read_wav(corpus_->root + "/" + missing[i]->audio_path);
  std::vector<const dsp::AudioClip *> ptrs(missing.size());
  std::vector<int64_t> ends(missing.size());
  for (size_t i = 0; i < missing.size(); ++i) {
    ptrs[i] = &clips[i];
    ends[i] = std::min(frame_end_ms(*missing[i]), clips[i].duration_ms());
  }
  auto mats = dsp::extract_frame_matrices(ptrs, ends);
  for (size_t i = 0; i < missing.size(); ++i)
    frames_[frame_key(missing[i]->audio_path, frame_end_ms(*missing[i]))] =
        std::move(mats[i]);
}

const dsp::FrameMatrix *FeatureCache::frames_for(const IpuSample &sample) {
  std::string key = frame_key(sample.audio_path, frame_end_ms(sample));
  auto it = frames_.find(key);
  if (it == frames_.end()) {
    dsp::AudioClip clip;
    clip.samples = read_wav(corpus_->root + "/" + sample.audio_path);
    int64_t end = std::min(frame_end_ms(sample), clip.duration_ms());
    it = frames_.emplace(key, dsp::extract_frame_matrix(clip, end)).first;
  }
  return &it->second;
}

timing::TimingFeatures FeatureCache::timing_for(const IpuSample &sample) const {
  return timing::compute_timing_features(sample, mode_);
}

// ---------------------------------------------------------------------------
// training internals

namespace {

EncodedSample encode_sample(const IpuSample &sample, const TrainConfig &cfg,
                            const text::Vocabulary &vocab,
                            const timing::BucketSpec &buckets, FeatureCache *cache) {
  EncodedSample e;
  e.id = sample.id;
  e.tokens = text::encode_with_context(sample, vocab, cfg.effective_context_turns(),
                                       cfg.encoder.l_max, cfg.tokenizer_mode());
  e.bucket_ids = timing::discretize(cache->timing_for(sample), buckets);
  e.frames = cache->frames_for(sample);
  e.label = sample.label && *sample.label == Label::kSwitch ? 1.0 : 0.0;
  e.augmented = sample.augmented;
  return e;
}

// the most recent robot utterance that ended before the sample started
const corpus::Utterance *question_before(const corpus::Corpus &corp,
                                         const IpuSample &sample) {
  const corpus::Utterance *best = nullptr;
  for (const auto &d : corp.dialogues) {
    if (d.id != sample.dialogue_id) continue;
    for (const auto &u : d.utterances) {
      if (u.speaker == corpus::Speaker::kRobot && u.end_ms <= sample.ipu_start_ms)
        if (!best || u.end_ms > best->end_ms) best = &u;
    }
  }
  return best;
}

// minority-class augmentation pool, built from training-fold data only
std::vector<IpuSample> build_aug_pool(const TrainConfig &cfg,
                                      const corpus::Corpus &corp,
                                      const std::vector<const IpuSample *> &train_samples,
                                      const std::vector<const IpuSample *> &aug_sources,
                                      Rng *rng) {
  std::vector<IpuSample> pool;
  if (cfg.aug_total == 0) return pool;
  if (cfg.scenario_enum() == corpus::Scenario::kEndpointing) {
    std::vector<const IpuSample *> candidates;
    for (const auto *s : train_samples) {
      if (s->scenario != corpus::Scenario::kEndpointing || s->augmented) continue;
      if (!s->label || *s->label != Label::kSwitch) continue;
      if (text::tokenize(s->text, cfg.tokenizer_mode()).size() > 10)
        candidates.push_back(s);
    }
    rng->shuffle(&candidates);
    for (const auto *s : candidates) {
      if (static_cast<int>(pool.size()) >= cfg.aug_total) break;
      auto trunc = augment::truncate_endpointing(*s, cfg.tokenizer_mode());
      if (trunc) pool.push_back(std::move(*trunc));
    }
  } else {
    // normal QA pairs from the train fold become synthetic interruptions
    std::vector<const IpuSample *> answers;
    for (const auto *s : aug_sources) {
      if (s->scenario != corpus::Scenario::kEndpointing || s->augmented) continue;
      answers.push_back(s);
    }
    rng->shuffle(&answers);
    for (const auto *s : answers) {
      if (static_cast<int>(pool.size()) >= cfg.aug_total) break;
      const corpus::Utterance *q = question_before(corp, *s);
      if (!q || s->ipu_start_ms < q->end_ms) continue;
      int64_t q_dur = q->end_ms - q->start_ms;
      int64_t max_overlap = std::min<int64_t>(q_dur - 1, 1200);
      if (max_overlap < 200) continue;
      int64_t overlap = rng->uniform_int(200, max_overlap);
      int64_t shift = s->ipu_start_ms - q->end_ms + overlap;
      if (shift <= 0) continue;
      pool.push_back(augment::construct_bargein_overlap(*q, *s, shift));
    }
  }
  return pool;
}

Metrics eval_encoded(model::GmfModel *net, const std::vector<EncodedSample> &samples,
                     std::vector<PredRecord> *predictions) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  std::vector<PredRecord> records;
  nn::NoGradGuard guard;
  constexpr int kEvalBatch = 64;
  for (size_t start = 0; start < samples.size(); start += kEvalBatch) {
    size_t stop = std::min(samples.size(), start + kEvalBatch);
    std::vector<const EncodedSample *> batch;
    for (size_t i = start; i < stop; ++i) batch.push_back(&samples[i]);
    auto fwd = net->forward(batch, /*train=*/false, nullptr);
    const auto &probs = fwd.yhat.values();
    for (size_t i = start; i < stop; ++i) {
      PredRecord r;
      r.id = samples[i].id;
      r.label = samples[i].label > 0.5 ? 1 : 0;
      r.prob = probs[i - start];
      r.pred = r.prob >= 0.5 ? 1 : 0;
      records.push_back(std::move(r));
    }
  }
  Metrics m = metrics_from_records(records);
  if (predictions) *predictions = std::move(records);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// train / evaluate

TrainedModel train(const TrainConfig &config, const corpus::Corpus &corpus_data,
                   const std::vector<const IpuSample *> &train_samples,
                   const std::vector<const IpuSample *> &dev_samples,
                   const std::vector<const IpuSample *> &aug_sources,
                   FeatureCache *cache, uint64_t seed,
                   std::vector<std::string> *log_lines) {
  config.validate();
  if (train_samples.empty()) throw std::invalid_argument("train: empty training set");
  for (const auto *s : train_samples)
    if (!s->label) throw DataError("train: unlabeled sample " + s->id);

  auto log = [log_lines](const std::string &line) {
    if (log_lines) log_lines->push_back(line);
  };

  Rng root(seed);
  Rng shuffle_rng = root.fork(1);
  Rng aug_rng = root.fork(2);
  Rng drop_rng = root.fork(3);
  uint64_t init_seed = root.fork(4).next_u64();

  // vocabulary and buckets come from the training split only
  std::vector<std::vector<std::string>> token_lists;
  for (const auto *s : train_samples) {
    token_lists.push_back(text::tokenize(s->text, config.tokenizer_mode()));
    for (const auto &turn : s->context)
      token_lists.push_back(text::tokenize(turn.text, config.tokenizer_mode()));
  }
  text::Vocabulary vocab = text::Vocabulary::build(token_lists, config.min_count);

  std::vector<timing::TimingFeatures> train_timing;
  for (const auto *s : train_samples) train_timing.push_back(cache->timing_for(*s));
  timing::BucketSpec buckets = timing::fit_buckets(train_timing, config.encoder.n_buckets);

  std::optional<text::EmbeddingTable> pretrained;
  if (!config.embeddings_path.empty()) {
    pretrained = text::load_pretrained_embeddings(config.embeddings_path, vocab,
                                                  config.embed_dim_in,
                                                  root.fork(5).next_u64());
    char buf[96];
    std::snprintf(buf, sizeof(buf), "pretrained embedding coverage %.3f",
                  pretrained->coverage);
    log(buf);
  }

  model::ModelConfig mc;
  mc.encoder = config.encoder;
  mc.method = config.fusion_enum();
  mc.ablation = config.ablation_enum();

  TrainedModel trained;
  trained.config = config;
  trained.vocab = vocab;
  trained.buckets = buckets;
  trained.net = std::make_unique<model::GmfModel>(mc, vocab.size(), init_seed,
                                                  pretrained ? &*pretrained : nullptr);
  model::GmfModel *net = trained.net.get();

  // augmentation pool (train-fold material only), then encode everything
  std::vector<IpuSample> pool;
  if (config.cl_enabled)
    pool = build_aug_pool(config, corpus_data, train_samples, aug_sources, &aug_rng);

  std::vector<EncodedSample> train_enc, dev_enc, pool_enc;
  for (const auto *s : train_samples)
    train_enc.push_back(encode_sample(*s, config, vocab, buckets, cache));
  for (const auto *s : dev_samples)
    dev_enc.push_back(encode_sample(*s, config, vocab, buckets, cache));
  for (const auto &s : pool)
    pool_enc.push_back(encode_sample(s, config, vocab, buckets, cache));
  if (config.cl_enabled)
    log("augmentation pool size " + std::to_string(pool_enc.size()));

  nn::AdamState adam(&net->registry(), config.lr);
  net->registry().zero_grads();

  double best_dev_f1 = -1.0;
  int best_epoch = -1;
  std::vector<nn::CheckpointBlob> best_blobs;
  int epochs_since_best = 0;

  std::vector<size_t> order(train_enc.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(&order);
    double epoch_loss = 0.0;
    int steps = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<const EncodedSample *> rows;
      std::vector<double> labels;
      for (size_t i = start; i < stop; ++i) {
        rows.push_back(&train_enc[order[i]]);
        labels.push_back(train_enc[order[i]].label);
      }
      int n_real = static_cast<int>(rows.size());
      if (config.cl_enabled && !pool_enc.empty() && config.aug_per_batch > 0) {
        std::vector<size_t> pidx(pool_enc.size());
        for (size_t i = 0; i < pidx.size(); ++i) pidx[i] = i;
        int k = std::min<int>(config.aug_per_batch, static_cast<int>(pidx.size()));
        for (int i = 0; i < k; ++i) {
          size_t j = static_cast<size_t>(
              aug_rng.uniform_int(i, static_cast<int64_t>(pidx.size()) - 1));
          std::swap(pidx[i], pidx[j]);
          rows.push_back(&pool_enc[pidx[i]]);
          labels.push_back(pool_enc[pidx[i]].label);
        }
      }

      try {
        auto fwd = net->forward(rows, /*train=*/true, &drop_rng);

        int n_ce = config.aug_in_ce ? static_cast<int>(rows.size()) : n_real;
        nn::Tensor yhat_ce = n_ce == static_cast<int>(rows.size())
                                 ? fwd.yhat
                                 : nn::slice(fwd.yhat, 0, 0, n_ce);
        std::vector<double> labels_ce(labels.begin(), labels.begin() + n_ce);
        nn::Tensor ce = fusion::loss_ce(yhat_ce, labels_ce);

        std::optional<nn::Tensor> cl;
        if (config.cl_enabled) {
          std::vector<Label> row_labels;
          for (double l : labels)
            row_labels.push_back(l > 0.5 ? Label::kSwitch : Label::kHold);
          auto plan = augment::assemble_cl_batch(row_labels);
          if (plan.anchors.empty()) {
            ++trained.cl_skipped_batches;
          } else {
            auto views = augment::dropout_views(
                fwd.fused, config.cl_dropout_p,
                {drop_rng.next_u64(), drop_rng.next_u64()});
            std::vector<nn::Tensor> anchors, positives;
            std::vector<std::vector<nn::Tensor>> negatives;
            for (size_t a = 0; a < plan.anchors.size(); ++a) {
              int i = plan.anchors[a];
              anchors.push_back(nn::slice(views.first, 0, i, i + 1));
              positives.push_back(nn::slice(views.second, 0, i, i + 1));
              std::vector<nn::Tensor> negs;
              for (int j : plan.negatives[a])
                negs.push_back(nn::slice(views.first, 0, j, j + 1));
              negatives.push_back(std::move(negs));
            }
            cl = fusion::loss_contrastive(anchors, positives, negatives, config.tau);
          }
        }

        nn::Tensor loss = fusion::loss_total(ce, cl);
        epoch_loss += loss.item();
        ++steps;
        nn::backward(loss);
        adam.step();
      } catch (const NumericError &e) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "DIVERGENCE epoch %d step %d lr %.3g adam_step %lld: %s", epoch,
                      steps, config.lr, static_cast<long long>(adam.step_count()),
                      e.what());
        log(buf);
        throw NumericError(std::string("training diverged: ") + buf);
      }
    }
    double mean_loss = steps > 0 ? epoch_loss / steps : 0.0;

    if (!dev_enc.empty()) {
      Metrics dev = eval_encoded(net, dev_enc, nullptr);
      bool improved = dev.macro_f1 > best_dev_f1;
      if (improved) {
        best_dev_f1 = dev.macro_f1;
        best_epoch = epoch;
        best_blobs = nn::registry_blobs(net->registry());
        epochs_since_best = 0;
      } else {
        ++epochs_since_best;
      }
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "epoch %d train_loss %.6f dev_acc %.4f dev_macro_f1 %.4f%s", epoch,
                    mean_loss, dev.accuracy, dev.macro_f1, improved ? " (best)" : "");
      log(buf);
      if (epochs_since_best >= config.patience) {
        log("early stop at epoch " + std::to_string(epoch));
        break;
      }
    } else {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "epoch %d train_loss %.6f", epoch, mean_loss);
      log(buf);
    }
  }

  if (!best_blobs.empty()) {
    nn::restore_registry(&net->registry(), best_blobs);
    trained.best_epoch = best_epoch;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "restored best epoch %d dev_macro_f1 %.4f",
                  best_epoch, best_dev_f1);
    log(buf);
  }
  return trained;
}

Metrics evaluate(TrainedModel *trained, const std::vector<const IpuSample *> &samples,
                 FeatureCache *cache, std::vector<PredRecord> *predictions) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  std::vector<EncodedSample> enc;
  for (const auto *s : samples) {
    if (!s->label) throw DataError("evaluate: unlabeled sample " + s->id);
    enc.push_back(encode_sample(*s, trained->config, trained->vocab, trained->buckets,
                                cache));
  }
  return eval_encoded(trained->net.get(), enc, predictions);
}

// ---------------------------------------------------------------------------
// checkpoint round trip

void TrainedModel::save(const std::string &path) const {
  nn::Checkpoint ckpt;
  ckpt.config_json = config.to_json().dump();
  ckpt.vocab_json = vocab.to_json();
  ckpt.buckets_json = buckets.to_json();
  ckpt.blobs = nn::registry_blobs(net->registry());
  nn::save_checkpoint(path, ckpt);
}

TrainedModel TrainedModel::load(const std::string &path) {
  nn::Checkpoint ckpt = nn::load_checkpoint(path);
  TrainedModel out;
  out.config = TrainConfig::from_json(nlohmann::json::parse(ckpt.config_json));
  out.vocab = text::Vocabulary::from_json(ckpt.vocab_json);
  out.buckets = timing::BucketSpec::from_json(ckpt.buckets_json);

  model::ModelConfig mc;
  mc.encoder = out.config.encoder;
  mc.method = out.config.fusion_enum();
  mc.ablation = out.config.ablation_enum();
  std::optional<text::EmbeddingTable> pretrained;
  if (!out.config.embeddings_path.empty()) {
    // structural placeholder; values are restored from the checkpoint
    pretrained.emplace();
    pretrained->dim = out.config.embed_dim_in;
    pretrained->rows.assign(out.vocab.size(),
                            std::vector<double>(out.config.embed_dim_in, 0.0));
  }
  out.net = std::make_unique<model::GmfModel>(mc, out.vocab.size(), /*init_seed=*/0,
                                              pretrained ? &*pretrained : nullptr);
  nn::restore_registry(&out.net->registry(), ckpt.blobs);
  return out;
}

// ---------------------------------------------------------------------------
// cross-validation

std::vector<const IpuSample *> scenario_samples(const corpus::Corpus &corpus_data,
                                                corpus::Scenario scenario) {
  std::vector<const IpuSample *> out;
  for (const auto &s : corpus_data.samples)
    if (s.scenario == scenario && !s.augmented) out.push_back(&s);
  return out;
}

CrossValResult cross_validate(const TrainConfig &config,
                              const corpus::Corpus &corpus_data,
                              std::vector<std::string> *log_lines) {
  config.validate();
  auto samples = scenario_samples(corpus_data, config.scenario_enum());
  if (samples.empty())
    throw DataError("cross_validate: no samples for scenario " + config.scenario);

  // fold split runs on owned copies to keep indices stable
  std::vector<IpuSample> sample_values;
  sample_values.reserve(samples.size());
  for (const auto *s : samples) sample_values.push_back(*s);

  Rng cv_root(config.seed);
  auto folds = corpus::split_folds(sample_values, config.k_folds,
                                   cv_root.fork(7).next_u64());

  FeatureCache cache(&corpus_data, config.tokenizer_mode());
  cache.preload(samples);

  CrossValResult result;
  for (int f = 0; f < config.k_folds; ++f) {
    std::set<size_t> eval_idx(folds[f].begin(), folds[f].end());
    std::vector<const IpuSample *> eval_set, train_all;
    for (size_t i = 0; i < samples.size(); ++i) {
      if (eval_idx.count(i)) eval_set.push_back(samples[i]);
      else train_all.push_back(samples[i]);
    }
    for (const auto *s : eval_set)
      if (s->augmented)
        throw DataError("cross_validate: augmented sample in eval fold: " + s->id);

    // dialogue-level dev split inside the training fold
    std::vector<std::string> train_dialogues;
    std::set<std::string> seen;
    for (const auto *s : train_all)
      if (seen.insert(s->dialogue_id).second) train_dialogues.push_back(s->dialogue_id);
    Rng dev_rng = cv_root.fork(2000 + f);
    dev_rng.shuffle(&train_dialogues);
    size_t n_dev = config.dev_fraction > 0.0
                       ? std::max<size_t>(1, static_cast<size_t>(std::floor(
                             config.dev_fraction * train_dialogues.size())))
                       : 0;
    if (n_dev >= train_dialogues.size()) n_dev = train_dialogues.size() - 1;
    std::set<std::string> dev_dialogues(train_dialogues.begin(),
                                        train_dialogues.begin() + n_dev);
    std::vector<const IpuSample *> train_set, dev_set;
    for (const auto *s : train_all) {
      if (dev_dialogues.count(s->dialogue_id)) dev_set.push_back(s);
      else train_set.push_back(s);
    }

    // augmentation may draw on any train-fold dialogue's samples
    std::set<std::string> train_dlg_ids;
    for (const auto *s : train_all) train_dlg_ids.insert(s->dialogue_id);
    std::vector<const IpuSample *> aug_sources;
    for (const auto &s : corpus_data.samples)
      if (!s.augmented && train_dlg_ids.count(s.dialogue_id) &&
          !dev_dialogues.count(s.dialogue_id))
        aug_sources.push_back(&s);

    if (log_lines) log_lines->push_back("fold " + std::to_string(f));
    uint64_t fold_seed = cv_root.fork(1000 + f).next_u64();
    TrainedModel trained = train(config, corpus_data, train_set, dev_set, aug_sources,
                                 &cache, fold_seed, log_lines);

    FoldResult fr;
    fr.fold = f;
    fr.metrics = evaluate(&trained, eval_set, &cache, &fr.predictions);
    result.cl_skipped_batches += trained.cl_skipped_batches;
    if (log_lines) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "fold %d acc %.4f macro_f1 %.4f", f,
                    fr.metrics.accuracy, fr.metrics.macro_f1);
      log_lines->push_back(buf);
    }
    result.folds.push_back(std::move(fr));
  }

  auto mean_std = [](const std::vector<double> &v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair<double, double>(mean, sd);
  };
  std::vector<double> accs, f1s;
  for (const auto &fr : result.folds) {
    accs.push_back(fr.metrics.accuracy);
    f1s.push_back(fr.metrics.macro_f1);
  }
  std::tie(result.accuracy_mean, result.accuracy_std) = mean_std(accs);
  std::tie(result.macro_f1_mean, result.macro_f1_std) = mean_std(f1s);
  return result;
}

// ---------------------------------------------------------------------------
// baselines, sign test, ablations

Metrics baseline_random(const std::vector<const IpuSample *> &samples, uint64_t seed,
                        std::vector<PredRecord> *predictions) {
  if (samples.empty()) throw std::invalid_argument("baseline_random: empty sample set");
  Rng rng(seed);
  std::vector<PredRecord> records;
  for (const auto *s : samples) {
    if (!s->label) throw DataError("baseline_random: unlabeled sample " + s->id);
    PredRecord r;
    r.id = s->id;
    r.label = *s->label == Label::kSwitch ? 1 : 0;
    r.prob = 0.5;
    r.pred = rng.bernoulli(0.5) ? 1 : 0;
    records.push_back(std::move(r));
  }
  Metrics m = metrics_from_records(records);
  if (predictions) *predictions = std::move(records);
  return m;
}

Metrics baseline_majority(const std::vector<const IpuSample *> &train,
                          const std::vector<const IpuSample *> &eval,
                          std::vector<PredRecord> *predictions) {
  if (train.empty() || eval.empty())
    throw std::invalid_argument("baseline_majority: empty sample set");
  int64_t n_switch = 0, n_hold = 0;
  for (const auto *s : train) {
    if (!s->label) throw DataError("baseline_majority: unlabeled sample " + s->id);
    (*s->label == Label::kSwitch ? n_switch : n_hold)++;
  }
  int majority = n_switch >= n_hold ? 1 : 0;  // ties go to switch
  std::vector<PredRecord> records;
  for (const auto *s : eval) {
    if (!s->label) throw DataError("baseline_majority: unlabeled sample " + s->id);
    PredRecord r;
    r.id = s->id;
    r.label = *s->label == Label::kSwitch ? 1 : 0;
    r.prob = majority;
    r.pred = majority;
    records.push_back(std::move(r));
  }
  Metrics m = metrics_from_records(records);
  if (predictions) *predictions = std::move(records);
  return m;
}

SignTestResult sign_test(const std::vector<int> &pred_a, const std::vector<int> &pred_b,
                         const std::vector<int> &labels) {
  if (pred_a.size() != labels.size() || pred_b.size() != labels.size())
    throw std::invalid_argument("sign_test: prediction vectors must align with labels");
  SignTestResult r;
  for (size_t i = 0; i < labels.size(); ++i) {
    bool a_ok = pred_a[i] == labels[i];
    bool b_ok = pred_b[i] == labels[i];
    if (a_ok && !b_ok) ++r.n_a_only;
    if (b_ok && !a_ok) ++r.n_b_only;
  }
  int64_t n = r.n_a_only + r.n_b_only;
  if (n == 0) {
    r.degenerate = true;
    r.p_value = 1.0;
    return r;
  }
  // two-sided exact binomial at p = 1/2, via log-space terms
  int64_t m = std::min(r.n_a_only, r.n_b_only);
  double tail = 0.0;
  for (int64_t i = 0; i <= m; ++i) {
    double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(i) + 1.0) -
                      std::lgamma(static_cast<double>(n - i) + 1.0) +
                      static_cast<double>(n) * std::log(0.5);
    tail += std::exp(log_term);
  }
  r.p_value = std::min(1.0, 2.0 * tail);
  return r;
}

CrossValResult run_ablation(const TrainConfig &config, const corpus::Corpus &corpus_data,
                            const std::string &drop, std::vector<std::string> *log_lines) {
  if (model::ablation_from_name(drop) == model::Ablation::kNone)
    throw std::invalid_argument("run_ablation: drop must name a modality");
  TrainConfig ablated = config;
  ablated.drop = drop;
  return cross_validate(ablated, corpus_data, log_lines);
}

nlohmann::ordered_json results_json(const TrainConfig &config,
                                    const corpus::Corpus &corpus_data,
                                    const CrossValResult &result) {
  nlohmann::ordered_json j;
  j["config"] = config.to_json();
  j["corpus_hash"] = corpus_data.content_hash;
  j["scenario"] = config.scenario;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto &fr : result.folds) {
    nlohmann::ordered_json jf;
    jf["fold"] = fr.fold;
    jf["n_eval"] = fr.predictions.size();
    jf["metrics"] = fr.metrics.to_json();
    j["folds"].push_back(std::move(jf));
  }
  j["summary"] = {{"accuracy_mean", result.accuracy_mean},
                  {"accuracy_std", result.accuracy_std},
                  {"macro_f1_mean", result.macro_f1_mean},
                  {"macro_f1_std", result.macro_f1_std}};
  j["cl_skipped_batches"] = result.cl_skipped_batches;
  return j;
}

}  // namespace harness
}  // namespace turntake
