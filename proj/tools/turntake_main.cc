// tools/turntake_main.cc

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

// Command-line entry point: corpus synthesis, segmentation, featurization,
// training, evaluation, cross-validation, ablations, augmentation,
// gradient checking, and baselines.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "turntake/augment.h"
#include "turntake/harness.h"
#include "turntake/nn/gradcheck.h"
#include "turntake/synth.h"
#include "turntake/wav.h"

namespace fs = std::filesystem;
using namespace turntake;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  std::string scenario, fusion_method, cl_mode;
};

harness::TrainConfig resolve_config(const GlobalArgs &g) {
  harness::TrainConfig cfg;
  if (!g.config_path.empty()) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(g.config_path));
    cfg = harness::TrainConfig::from_json(j);
  }
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.scenario.empty()) cfg.scenario = g.scenario;
  if (!g.fusion_method.empty()) cfg.fusion = g.fusion_method;
  if (!g.cl_mode.empty()) {
    if (g.cl_mode != "on" && g.cl_mode != "off")
      throw UsageError("--cl must be 'on' or 'off'");
    cfg.cl_enabled = g.cl_mode == "on";
  }
  cfg.validate();
  return cfg;
}

void write_log(const std::string &out_dir, const std::vector<std::string> &lines) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/log.txt");
  for (const auto &l : lines) out << l << "\n";
}

void write_predictions(const std::string &path,
                       const std::vector<harness::FoldResult> &folds) {
  std::ofstream out(path);
  for (const auto &fr : folds) {
    for (const auto &p : fr.predictions) {
      nlohmann::ordered_json j;
      j["id"] = p.id;
      j["fold"] = fr.fold;
      j["label"] = p.label;
      j["pred"] = p.pred;
      j["prob"] = p.prob;
      out << j.dump() << "\n";
    }
  }
}

std::vector<std::pair<int64_t, int64_t>> read_regions_file(const std::string &path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  std::vector<std::pair<int64_t, int64_t>> regions;
  for (const auto &r : j)
    regions.emplace_back(r.at(0).get<int64_t>(), r.at(1).get<int64_t>());
  return regions;
}

int run(int argc, char **argv) {
  CLI::App app{"turntake: turn-taking prediction toolkit for spoken dialogue"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may come after the subcommand

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON config file");
  auto *seed_opt = app.add_option("--seed", g.seed, "global RNG seed");
  app.add_option("--scenario", g.scenario, "endpointing|bargein")
      ->check(CLI::IsMember({"endpointing", "bargein"}));
  app.add_option("--fusion", g.fusion_method, "gmf|concat|sum|mult|mfb")
      ->check(CLI::IsMember({"gmf", "concat", "sum", "mult", "mfb"}));
  app.add_option("--cl", g.cl_mode, "contrastive learning on|off")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--out", g.out_dir, "output directory");

  // synth
  auto *synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth::SynthConfig sc;
  synth_cmd->add_option("--n-endpointing", sc.n_endpointing, "endpointing sample count");
  synth_cmd->add_option("--n-bargein", sc.n_bargein, "barge-in sample count");
  synth_cmd->add_option("--endpointing-switch-ratio", sc.endpointing_switch_ratio, "");
  synth_cmd->add_option("--bargein-switch-ratio", sc.bargein_switch_ratio, "");
  synth_cmd->add_option("--rho", sc.modality_noise, "per-modality cue flip probability");
  synth_cmd->add_option("--context-cue-ratio", sc.context_cue_ratio, "");
  synth_cmd->add_option("--samples-per-dialogue", sc.samples_per_dialogue, "");
  bool no_audio = false;
  synth_cmd->add_flag("--no-audio", no_audio, "skip WAV synthesis");

  // segment
  auto *segment_cmd = app.add_subcommand("segment", "VAD + IPU extraction on a WAV file");
  std::string seg_audio, seg_robot, seg_out;
  segment_cmd->add_option("--audio", seg_audio, "input WAV (PCM16 mono 8kHz)")->required();
  segment_cmd->add_option("--robot-regions", seg_robot,
                          "JSON [[start_ms,end_ms],...] of robot speech");
  segment_cmd->add_option("--ipus-out", seg_out, "output ipus.jsonl path");

  // featurize
  auto *feat_cmd = app.add_subcommand("featurize", "extract frame/timing features");
  std::string feat_corpus;
  feat_cmd->add_option("--corpus", feat_corpus, "corpus directory")->required();

  // train / eval / crossval / ablate
  auto *train_cmd = app.add_subcommand("train", "train one model with a dev holdout");
  std::string train_corpus;
  train_cmd->add_option("--corpus", train_corpus, "corpus directory")->required();

  auto *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_corpus, eval_ckpt;
  eval_cmd->add_option("--corpus", eval_corpus, "corpus directory")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();

  auto *cv_cmd = app.add_subcommand("crossval", "k-fold cross-validation");
  std::string cv_corpus;
  cv_cmd->add_option("--corpus", cv_corpus, "corpus directory")->required();

  auto *ablate_cmd = app.add_subcommand("ablate", "cross-validate with one modality removed");
  std::string ab_corpus, ab_drop;
  ablate_cmd->add_option("--corpus", ab_corpus, "corpus directory")->required();
  ablate_cmd->add_option("--drop", ab_drop, "semantic|context|acoustic|timing")
      ->required()
      ->check(CLI::IsMember({"semantic", "context", "acoustic", "timing"}));

  // augment
  auto *aug_cmd = app.add_subcommand("augment", "emit augmented minority-class samples");
  std::string aug_corpus;
  aug_cmd->add_option("--corpus", aug_corpus, "corpus directory")->required();

  // gradcheck
  auto *gc_cmd = app.add_subcommand("gradcheck",
                                    "finite-difference check of the full model loss");
  double gc_h = 1e-5, gc_tol = 1e-4;
  gc_cmd->add_option("--step", gc_h, "finite-difference step");
  gc_cmd->add_option("--tol", gc_tol, "max relative error tolerance");

  // baseline
  auto *base_cmd = app.add_subcommand("baseline", "random / majority-vote baselines");
  std::string base_corpus, base_method = "majority";
  base_cmd->add_option("--corpus", base_corpus, "corpus directory")->required();
  base_cmd->add_option("--method", base_method, "random|majority")
      ->check(CLI::IsMember({"random", "majority"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  g.seed_set = seed_opt->count() > 0;

  if (synth_cmd->parsed()) {
    sc.write_audio = !no_audio;
    if (g.seed_set) sc.seed = g.seed;
    synth::synth_corpus(sc, g.out_dir);
    std::cout << "wrote corpus to " << g.out_dir << "\n";
    return 0;
  }

  if (segment_cmd->parsed()) {
    dsp::AudioClip clip;
    clip.samples = read_wav(seg_audio);
    auto regions = dsp::detect_speech_regions(clip);
    corpus::Dialogue d;
    d.id = fs::path(seg_audio).stem().string();
    auto ipus = corpus::extract_ipus(d, regions);
    std::vector<std::pair<int64_t, int64_t>> robot;
    if (!seg_robot.empty()) robot = read_regions_file(seg_robot);
    std::ostringstream lines;
    for (auto &ipu : ipus) {
      ipu.audio_path = seg_audio;
      std::string status = "endpointing";
      if (!robot.empty()) {
        auto cls = corpus::classify_scenario(&ipu, robot);
        if (cls == corpus::ScenarioClass::kUnclassifiable) status = "unclassifiable";
        else status = corpus::scenario_name(ipu.scenario);
      }
      if (status == "unclassifiable") {
        std::cerr << "ipu " << ipu.id << " [" << ipu.ipu_start_ms << ","
                  << ipu.ipu_end_ms << ") unclassifiable (customer-first overlap)\n";
        continue;
      }
      lines << corpus::ipu_to_json(ipu) << "\n";
    }
    if (seg_out.empty()) std::cout << lines.str();
    else write_text_file(seg_out, lines.str());
    std::cout << "speech regions: " << regions.size() << ", ipus: " << ipus.size()
              << "\n";
    return 0;
  }

  if (feat_cmd->parsed()) {
    harness::TrainConfig cfg = resolve_config(g);
    corpus::Corpus corp = corpus::load_corpus(feat_corpus, /*require_audio=*/true);
    auto samples = harness::scenario_samples(corp, cfg.scenario_enum());
    harness::FeatureCache cache(&corp, cfg.tokenizer_mode());
    cache.preload(samples);
    fs::create_directories(g.out_dir);
    std::ofstream out(g.out_dir + "/features.bin", std::ios::binary);
    out.write("TTFT", 4);
    uint32_t n = static_cast<uint32_t>(samples.size());
    out.write(reinterpret_cast<const char *>(&n), 4);
    for (const auto *s : samples) {
      const dsp::FrameMatrix *fm = cache.frames_for(*s);
      auto tf = cache.timing_for(*s).as_array();
      uint32_t id_len = static_cast<uint32_t>(s->id.size());
      out.write(reinterpret_cast<const char *>(&id_len), 4);
      out.write(s->id.data(), id_len);
      int32_t valid = fm->valid_frames;
      out.write(reinterpret_cast<const char *>(&valid), 4);
      out.write(reinterpret_cast<const char *>(fm->data.data()),
                sizeof(double) * fm->data.size());
      out.write(reinterpret_cast<const char *>(tf.data()), sizeof(double) * tf.size());
    }
    std::cout << "featurized " << samples.size() << " samples -> " << g.out_dir
              << "/features.bin\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    harness::TrainConfig cfg = resolve_config(g);
    corpus::Corpus corp = corpus::load_corpus(train_corpus, /*require_audio=*/true);
    auto samples = harness::scenario_samples(corp, cfg.scenario_enum());
    if (samples.empty()) throw DataError("no samples for scenario " + cfg.scenario);
    harness::FeatureCache cache(&corp, cfg.tokenizer_mode());
    cache.preload(samples);
    // dialogue-level dev holdout
    std::vector<std::string> dialogues;
    std::set<std::string> seen;
    for (const auto *s : samples)
      if (seen.insert(s->dialogue_id).second) dialogues.push_back(s->dialogue_id);
    Rng rng(cfg.seed);
    rng.shuffle(&dialogues);
    size_t n_dev = cfg.dev_fraction > 0.0 && dialogues.size() > 1
                       ? std::max<size_t>(1, static_cast<size_t>(cfg.dev_fraction *
                                                                 dialogues.size()))
                       : 0;
    std::set<std::string> dev_ids(dialogues.begin(), dialogues.begin() + n_dev);
    std::vector<const corpus::IpuSample *> train_set, dev_set;
    for (const auto *s : samples)
      (dev_ids.count(s->dialogue_id) ? dev_set : train_set).push_back(s);
    std::vector<const corpus::IpuSample *> aug_sources;
    for (const auto &s : corp.samples)
      if (!s.augmented && !dev_ids.count(s.dialogue_id)) aug_sources.push_back(&s);

    std::vector<std::string> log;
    harness::TrainedModel trained =
        harness::train(cfg, corp, train_set, dev_set, aug_sources, &cache, cfg.seed, &log);
    fs::create_directories(g.out_dir);
    trained.save(g.out_dir + "/model.ckpt");
    if (!dev_set.empty()) {
      harness::Metrics dev = harness::evaluate(&trained, dev_set, &cache);
      nlohmann::ordered_json j;
      j["config"] = cfg.to_json();
      j["corpus_hash"] = corp.content_hash;
      j["dev_metrics"] = dev.to_json();
      write_text_file(g.out_dir + "/results.json", j.dump(2) + "\n");
    }
    write_log(g.out_dir, log);
    std::cout << "checkpoint: " << g.out_dir << "/model.ckpt\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    harness::TrainedModel trained = harness::TrainedModel::load(eval_ckpt);
    corpus::Corpus corp = corpus::load_corpus(eval_corpus, /*require_audio=*/true);
    auto samples = harness::scenario_samples(corp, trained.config.scenario_enum());
    if (samples.empty())
      throw DataError("no samples for scenario " + trained.config.scenario);
    harness::FeatureCache cache(&corp, trained.config.tokenizer_mode());
    cache.preload(samples);
    std::vector<harness::PredRecord> preds;
    harness::Metrics m = harness::evaluate(&trained, samples, &cache, &preds);
    nlohmann::ordered_json j;
    j["config"] = trained.config.to_json();
    j["corpus_hash"] = corp.content_hash;
    j["metrics"] = m.to_json();
    fs::create_directories(g.out_dir);
    write_text_file(g.out_dir + "/results.json", j.dump(2) + "\n");
    harness::FoldResult fr;
    fr.fold = 0;
    fr.predictions = std::move(preds);
    write_predictions(g.out_dir + "/predictions.jsonl", {fr});
    std::cout << j["metrics"].dump(2) << "\n";
    return 0;
  }

  if (cv_cmd->parsed() || ablate_cmd->parsed()) {
    harness::TrainConfig cfg = resolve_config(g);
    std::string corpus_dir = cv_cmd->parsed() ? cv_corpus : ab_corpus;
    if (ablate_cmd->parsed()) cfg.drop = ab_drop;
    corpus::Corpus corp = corpus::load_corpus(corpus_dir, /*require_audio=*/true);
    std::vector<std::string> log;
    harness::CrossValResult cv = harness::cross_validate(cfg, corp, &log);
    fs::create_directories(g.out_dir);
    write_text_file(g.out_dir + "/results.json",
                    harness::results_json(cfg, corp, cv).dump(2) + "\n");
    write_predictions(g.out_dir + "/predictions.jsonl", cv.folds);
    write_log(g.out_dir, log);
    std::printf("accuracy %.4f +- %.4f, macro_f1 %.4f +- %.4f\n", cv.accuracy_mean,
                cv.accuracy_std, cv.macro_f1_mean, cv.macro_f1_std);
    return 0;
  }

  if (aug_cmd->parsed()) {
    harness::TrainConfig cfg = resolve_config(g);
    corpus::Corpus corp = corpus::load_corpus(aug_corpus);
    auto samples = harness::scenario_samples(corp, cfg.scenario_enum());
    Rng rng(cfg.seed);
    std::vector<corpus::IpuSample> pool;
    if (cfg.scenario_enum() == corpus::Scenario::kEndpointing) {
      for (const auto *s : samples) {
        if (static_cast<int>(pool.size()) >= cfg.aug_total) break;
        if (!s->label || *s->label != corpus::Label::kSwitch) continue;
        auto t = augment::truncate_endpointing(*s, cfg.tokenizer_mode());
        if (t) pool.push_back(std::move(*t));
      }
    } else {
      auto sources = harness::scenario_samples(corp, corpus::Scenario::kEndpointing);
      for (const auto *s : sources) {
        if (static_cast<int>(pool.size()) >= cfg.aug_total) break;
        const corpus::Utterance *q = nullptr;
        for (const auto &d : corp.dialogues) {
          if (d.id != s->dialogue_id) continue;
          for (const auto &u : d.utterances)
            if (u.speaker == corpus::Speaker::kRobot && u.end_ms <= s->ipu_start_ms &&
                (!q || u.end_ms > q->end_ms))
              q = &u;
        }
        if (!q) continue;
        int64_t max_overlap = std::min<int64_t>(q->end_ms - q->start_ms - 1, 1200);
        if (max_overlap < 200) continue;
        int64_t overlap = rng.uniform_int(200, max_overlap);
        int64_t shift = s->ipu_start_ms - q->end_ms + overlap;
        if (shift <= 0) continue;
        pool.push_back(augment::construct_bargein_overlap(*q, *s, shift));
      }
    }
    fs::create_directories(g.out_dir);
    std::ofstream out(g.out_dir + "/ipus_augmented.jsonl");
    for (const auto &s : pool) out << corpus::ipu_to_json(s) << "\n";
    std::cout << "wrote " << pool.size() << " augmented samples\n";
    return 0;
  }

  if (gc_cmd->parsed()) {
    // toy-dims full-model gradient check (CE + CL), mirrors the test suite
    harness::TrainConfig cfg = resolve_config(g);
    cfg.encoder.d_model = 8;
    cfg.encoder.heads = 2;
    cfg.encoder.ffn_dim = 16;
    cfg.encoder.resnet_channels = {2, 2, 4, 4};
    cfg.encoder.n_frames = 4;
    cfg.encoder.dropout_p = 0.1;
    cfg.encoder.l_max = 16;
    model::ModelConfig mc;
    mc.encoder = cfg.encoder;
    model::GmfModel net(mc, /*vocab_size=*/20, /*init_seed=*/cfg.seed);

    Rng data_rng(cfg.seed + 1);
    std::vector<dsp::FrameMatrix> mats(4);
    std::vector<model::EncodedSample> enc(4);
    for (int i = 0; i < 4; ++i) {
      for (int r = 0; r < cfg.encoder.n_frames; ++r)
        for (int c = 0; c < dsp::kFrameDim; ++c)
          mats[i].data[r * dsp::kFrameDim + c] = data_rng.normal();
      mats[i].valid_frames = cfg.encoder.n_frames;
      enc[i].frames = &mats[i];
      enc[i].tokens.token_ids = {text::kClsId,
                                 static_cast<int>(data_rng.uniform_int(4, 19)),
                                 static_cast<int>(data_rng.uniform_int(4, 19))};
      enc[i].tokens.segment_ids = {1, 0, 1};
      for (int f = 0; f < 4; ++f)
        enc[i].bucket_ids[f] = static_cast<int>(data_rng.uniform_int(0, 9));
      enc[i].label = i % 2;
    }
    auto loss_fn = [&]() {
      Rng drop(999);
      std::vector<const model::EncodedSample *> rows{&enc[0], &enc[1], &enc[2], &enc[3]};
      auto fwd = net.forward(rows, /*train=*/true, &drop);
      nn::Tensor ce = fusion::loss_ce(fwd.yhat, {0.0, 1.0, 0.0, 1.0});
      auto views = augment::dropout_views(fwd.fused, 0.1, {4242, 4243});
      std::vector<nn::Tensor> anchors, positives;
      std::vector<std::vector<nn::Tensor>> negatives;
      auto plan = augment::assemble_cl_batch(
          {corpus::Label::kHold, corpus::Label::kSwitch, corpus::Label::kHold,
           corpus::Label::kSwitch});
      for (size_t a = 0; a < plan.anchors.size(); ++a) {
        int i = plan.anchors[a];
        anchors.push_back(nn::slice(views.first, 0, i, i + 1));
        positives.push_back(nn::slice(views.second, 0, i, i + 1));
        std::vector<nn::Tensor> negs;
        for (int j : plan.negatives[a])
          negs.push_back(nn::slice(views.first, 0, j, j + 1));
        negatives.push_back(std::move(negs));
      }
      nn::Tensor cl = fusion::loss_contrastive(anchors, positives, negatives, 0.05);
      return fusion::loss_total(ce, cl);
    };
    std::vector<nn::Tensor> params;
    for (auto &p : net.registry().params()) params.push_back(p.tensor);
    auto res = nn::gradient_check(loss_fn, params, gc_h, 200, cfg.seed);
    std::printf("gradient check: max relative error %.3e over %d coordinates\n",
                res.max_rel_err, res.coords_checked);
    if (res.max_rel_err >= gc_tol) {
      std::cerr << "FAIL: exceeds tolerance " << gc_tol << "\n";
      return 3;
    }
    return 0;
  }

  if (base_cmd->parsed()) {
    harness::TrainConfig cfg = resolve_config(g);
    corpus::Corpus corp = corpus::load_corpus(base_corpus);
    auto samples = harness::scenario_samples(corp, cfg.scenario_enum());
    if (samples.empty()) throw DataError("no samples for scenario " + cfg.scenario);
    harness::Metrics m = base_method == "random"
                             ? harness::baseline_random(samples, cfg.seed)
                             : harness::baseline_majority(samples, samples);
    std::cout << m.to_json().dump(2) << "\n";
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError &e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
