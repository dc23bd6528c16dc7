// turntake/synth.cc

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

#include "turntake/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "turntake/wav.h"

namespace fs = std::filesystem;

namespace turntake {
namespace synth {

namespace {

using corpus::Label;
using corpus::Scenario;
using corpus::Speaker;

const char *kFillers[] = {"the",    "delivery", "address", "time",   "morning",
                          "afternoon", "package", "house",  "number", "street",
                          "area",   "window",   "slot",    "plan",   "driver",
                          "note",   "gate",     "code",    "phone",  "call"};
const char *kTerminals[] = {"okay", "thanks", "done", "yes", "right", "correct",
                            "sure", "fine"};
const char *kConnectives[] = {"and", "but", "so", "because", "then", "also",
                              "um", "uh"};
const char *kBackchannels[] = {"uh-huh", "hmm", "yeah", "mm"};
const char *kNouns[] = {"address", "time", "window", "slot"};

template <size_t N>
const char *pick(Rng *rng, const char *(&pool)[N]) {
  return pool[rng->uniform_int(0, N - 1)];
}

std::string filler_phrase(Rng *rng, int count) {
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i > 0) out += " ";
    out += pick(rng, kFillers);
  }
  return out;
}

struct SampleSpec {
  Label label = Label::kSwitch;
  Label c_sem = Label::kSwitch;  // per-modality cue values
  Label c_ac = Label::kSwitch;
  Label c_tim = Label::kSwitch;
  bool contextual = false;  // semantic cue carried by the robot question
  std::vector<std::string> flipped;
  // realization
  std::string text;
  std::string robot_text;
  int64_t duration_ms = 0;
  int64_t interval_ms = 0;   // robot end -> ipu start (endpointing)
  int64_t silence_ms = 0;    // trailing quiet inside the IPU
  double f0_base = 180.0, f0_delta = 0.0;
  int f0_slope_sign = 1;
  double amplitude = 0.25;
  bool voiced = true;
  int64_t offset_into_robot_ms = 0;  // barge-in start offset
};

Label flip(Label l) { return l == Label::kSwitch ? Label::kHold : Label::kSwitch; }

void draw_cues(SampleSpec *s, double rho, Rng *rng) {
  s->c_sem = s->label;
  s->c_ac = s->label;
  s->c_tim = s->label;
  if (rng->bernoulli(rho)) {
    s->c_sem = flip(s->c_sem);
    s->flipped.push_back("semantic");
  }
  if (rng->bernoulli(rho)) {
    s->c_ac = flip(s->c_ac);
    s->flipped.push_back("acoustic");
  }
  if (rng->bernoulli(rho)) {
    s->c_tim = flip(s->c_tim);
    s->flipped.push_back("timing");
  }
}

void realize_endpointing(SampleSpec *s, double context_cue_ratio, Rng *rng) {
  s->contextual = rng->bernoulli(context_cue_ratio);
  if (s->contextual) {
    // cue lives in the robot question; the answer itself is class-neutral
    std::string noun = pick(rng, kNouns);
    s->robot_text = s->c_sem == Label::kSwitch
                        ? "could you confirm the delivery " + noun
                        : "could you describe the delivery " + noun;
    s->text = filler_phrase(rng, static_cast<int>(rng->uniform_int(2, 7)));
  } else {
    std::string noun = pick(rng, kNouns);
    s->robot_text = "what would suit your delivery " + noun;
    int k = static_cast<int>(rng->uniform_int(2, 14));
    s->text = filler_phrase(rng, k) + " " +
              (s->c_sem == Label::kSwitch ? pick(rng, kTerminals)
                                          : pick(rng, kConnectives));
  }
  // duration is label-free: the frame matrix's padding rows reveal it to the
  // acoustic branch, so the timing cue lives in the pre-IPU interval alone
  s->duration_ms = rng->uniform_int(600, 2400);
  s->interval_ms = s->c_tim == Label::kSwitch ? rng->uniform_int(600, 1200)
                                              : rng->uniform_int(80, 450);
  s->f0_base = rng->uniform(140.0, 220.0);
  if (s->c_ac == Label::kSwitch) {
    s->f0_delta = -rng->uniform(40.0, 70.0);
    s->f0_slope_sign = -1;
    s->silence_ms = rng->uniform_int(120, 180);
  } else {
    s->f0_delta = rng->uniform(20.0, 50.0);
    s->f0_slope_sign = 1;
    s->silence_ms = rng->uniform_int(0, 40);
  }
  s->amplitude = 0.25;
  s->voiced = true;
}

void realize_bargein(SampleSpec *s, Rng *rng) {
  std::string noun = pick(rng, kNouns);
  s->robot_text = "please listen while I read the full " + noun +
                  " arrangement for your delivery plan";
  if (s->c_sem == Label::kSwitch) {
    int k = static_cast<int>(rng->uniform_int(2, 10));
    s->text = filler_phrase(rng, k) + " " + pick(rng, kTerminals);
  } else {
    s->text = rng->bernoulli(0.7) ? pick(rng, kBackchannels) : "";
  }
  s->duration_ms = s->c_tim == Label::kSwitch ? rng->uniform_int(1000, 2200)
                                              : rng->uniform_int(250, 600);
  s->offset_into_robot_ms = rng->uniform_int(500, 2400);
  s->f0_base = rng->uniform(140.0, 220.0);
  if (s->c_ac == Label::kSwitch) {
    s->amplitude = 0.25;
    s->voiced = true;
    s->f0_delta = -rng->uniform(40.0, 70.0);
    s->f0_slope_sign = -1;
    s->silence_ms = rng->uniform_int(80, 150);
  } else {
    s->amplitude = 0.05;
    s->voiced = rng->bernoulli(0.7);  // low murmur, else a noise burst
    s->f0_base = rng->uniform(100.0, 160.0);
    s->f0_delta = rng->uniform(0.0, 15.0);
    s->f0_slope_sign = 1;
    s->silence_ms = rng->uniform_int(0, 30);
  }
}

std::vector<double> synth_clip(const SampleSpec &s, Rng *rng) {
  int64_t total = s.duration_ms * kSampleRateHz / 1000;
  int64_t silence = std::min(s.silence_ms * kSampleRateHz / 1000, total);
  int64_t speech = total - silence;
  std::vector<double> x(total, 0.0);
  if (speech <= 0) return x;

  if (!s.voiced) {
    for (int64_t i = 0; i < speech; ++i) x[i] = s.amplitude * rng->normal(0.0, 0.4);
  } else {
    const double harm_amp[4] = {1.0, 0.5, 0.25, 0.12};
    double norm = 1.0 / (harm_amp[0] + harm_amp[1] + harm_amp[2] + harm_amp[3]);
    int64_t slope_start = std::max<int64_t>(0, speech - kSampleRateHz / 2);
    double phase = rng->uniform(0.0, 2.0 * M_PI);
    for (int64_t i = 0; i < speech; ++i) {
      double f0 = s.f0_base;
      if (i >= slope_start && speech > slope_start)
        f0 += s.f0_delta * static_cast<double>(i - slope_start) /
              static_cast<double>(speech - slope_start);
      phase += 2.0 * M_PI * f0 / kSampleRateHz;
      double v = 0.0;
      for (int h = 0; h < 4; ++h) v += harm_amp[h] * std::sin((h + 1) * phase);
      x[i] = s.amplitude * norm * v + 0.002 * rng->normal();
    }
  }
  // short attack/release ramps against clicks
  int64_t ramp = std::min<int64_t>(160, speech / 2);
  for (int64_t i = 0; i < ramp; ++i) {
    double w = static_cast<double>(i + 1) / static_cast<double>(ramp + 1);
    x[i] *= w;
    x[speech - 1 - i] *= w;
  }
  return x;
}

}  // namespace

void synth_corpus(const SynthConfig &config, const std::string &out_dir) {
  if (config.n_endpointing < 0 || config.n_bargein < 0 ||
      config.n_endpointing + config.n_bargein == 0)
    throw std::invalid_argument("synth_corpus: sample counts must be positive");
  for (double r : {config.endpointing_switch_ratio, config.bargein_switch_ratio})
    if (!(r > 0.0 && r < 1.0))
      throw std::invalid_argument("synth_corpus: class ratios must lie in (0, 1)");
  if (config.modality_noise < 0.0 || config.modality_noise >= 1.0)
    throw std::invalid_argument("synth_corpus: modality_noise must be in [0, 1)");
  if (config.context_cue_ratio < 0.0 || config.context_cue_ratio > 1.0)
    throw std::invalid_argument("synth_corpus: context_cue_ratio must be in [0, 1]");
  if (config.samples_per_dialogue < 1)
    throw std::invalid_argument("synth_corpus: samples_per_dialogue must be >= 1");

  fs::create_directories(out_dir);
  if (config.write_audio) fs::create_directories(out_dir + "/wav");

  Rng master(config.seed);
  Rng label_rng = master.fork(1);

  // exact class counts per scenario, shuffled across the corpus
  auto make_labels = [&label_rng](int n, double switch_ratio) {
    int n_switch = static_cast<int>(llround(switch_ratio * n));
    std::vector<Label> labels(n, Label::kHold);
    for (int i = 0; i < n_switch && i < n; ++i) labels[i] = Label::kSwitch;
    label_rng.shuffle(&labels);
    return labels;
  };
  std::vector<Label> end_labels = make_labels(config.n_endpointing,
                                              config.endpointing_switch_ratio);
  std::vector<Label> barge_labels =
      make_labels(config.n_bargein, config.bargein_switch_ratio);

  corpus::Corpus out;
  std::vector<nlohmann::ordered_json> latent;

  int dialogue_no = 0;
  auto emit_scenario = [&](Scenario scenario, const std::vector<Label> &labels) {
    int n = static_cast<int>(labels.size());
    int per_dlg = config.samples_per_dialogue;
    for (int start = 0; start < n; start += per_dlg, ++dialogue_no) {
      int count = std::min(per_dlg, n - start);
      Rng dlg_rng = master.fork(1000 + dialogue_no);
      corpus::Dialogue dlg;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "d%05d", dialogue_no);
      dlg.id = buf;

      int64_t t = 500;
      for (int i = 0; i < count; ++i) {
        SampleSpec spec;
        spec.label = labels[start + i];
        draw_cues(&spec, config.modality_noise, &dlg_rng);
        if (scenario == Scenario::kEndpointing)
          realize_endpointing(&spec, config.context_cue_ratio, &dlg_rng);
        else
          realize_bargein(&spec, &dlg_rng);

        corpus::IpuSample sample;
        sample.id = dlg.id + "#ipu" + std::to_string(i);
        sample.dialogue_id = dlg.id;
        sample.scenario = scenario;
        sample.label = spec.label;
        sample.text = spec.text;
        sample.augmented = false;

        int64_t robot_start = t;
        int64_t robot_dur = scenario == Scenario::kEndpointing
                                ? dlg_rng.uniform_int(1200, 2500)
                                : 3000;
        int64_t robot_end = robot_start + robot_dur;
        corpus::Utterance robot;
        robot.speaker = Speaker::kRobot;
        robot.start_ms = robot_start;
        robot.end_ms = robot_end;
        robot.text = spec.robot_text;

        if (scenario == Scenario::kEndpointing) {
          sample.ipu_start_ms = robot_end + spec.interval_ms;
          sample.robot_overlap_ms = 0;
        } else {
          sample.ipu_start_ms = robot_start + spec.offset_into_robot_ms;
          int64_t ipu_end = sample.ipu_start_ms + spec.duration_ms;
          sample.robot_overlap_ms =
              std::min(robot_end, ipu_end) - sample.ipu_start_ms;
        }
        sample.ipu_end_ms = sample.ipu_start_ms + spec.duration_ms;
        sample.prev_turn_end_ms = robot_end;

        // context: everything said so far in this dialogue that already ended
        for (const auto &u : dlg.utterances)
          if (u.end_ms <= sample.ipu_start_ms)
            sample.context.push_back({u.speaker, u.text});
        if (robot.end_ms <= sample.ipu_start_ms)
          sample.context.push_back({robot.speaker, robot.text});

        sample.audio_path = "wav/" + dlg.id + "_ipu" + std::to_string(i) + ".wav";
        if (config.write_audio) {
          std::vector<double> clip = synth_clip(spec, &dlg_rng);
          write_wav(out_dir + "/" + sample.audio_path, clip);
        }

        corpus::Utterance cust;
        cust.speaker = Speaker::kCustomer;
        cust.start_ms = sample.ipu_start_ms;
        cust.end_ms = sample.ipu_end_ms;
        cust.text = sample.text;
        cust.audio_path = sample.audio_path;

        // barge-in offsets are >= 500 ms, so the robot turn always starts first
        dlg.utterances.push_back(robot);
        dlg.utterances.push_back(cust);

        nlohmann::ordered_json lat;
        lat["id"] = sample.id;
        lat["label"] = corpus::label_name(spec.label);
        lat["semantic_cue"] = corpus::label_name(spec.c_sem);
        lat["timing_cue"] = corpus::label_name(spec.c_tim);
        lat["f0_slope_sign"] = spec.f0_slope_sign;
        lat["silence_ms"] = spec.silence_ms;
        lat["contextual"] = spec.contextual;
        lat["flipped_modalities"] = spec.flipped;
        latent.push_back(std::move(lat));

        out.samples.push_back(std::move(sample));
        t = std::max(robot_end, out.samples.back().ipu_end_ms) + 400;
      }
      out.dialogues.push_back(std::move(dlg));
    }
  };

  emit_scenario(Scenario::kEndpointing, end_labels);
  emit_scenario(Scenario::kBargein, barge_labels);

  corpus::save_corpus(out, out_dir);
  std::ofstream lat_out(out_dir + "/latent.jsonl", std::ios::binary);
  if (!lat_out) throw DataError("cannot write " + out_dir + "/latent.jsonl");
  for (const auto &j : latent) lat_out << j.dump() << "\n";
}

}  // namespace synth
}  // namespace turntake
