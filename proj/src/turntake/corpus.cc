// turntake/corpus.cc

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

#include "turntake/corpus.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace turntake {
namespace corpus {

std::string speaker_name(Speaker s) {
  return s == Speaker::kCustomer ? "customer" : "robot";
}

Speaker speaker_from_name(const std::string &name) {
  if (name == "customer") return Speaker::kCustomer;
  if (name == "robot") return Speaker::kRobot;
  throw DataError("unknown speaker: " + name);
}

std::string scenario_name(Scenario s) {
  return s == Scenario::kEndpointing ? "endpointing" : "bargein";
}

Scenario scenario_from_name(const std::string &name) {
  if (name == "endpointing") return Scenario::kEndpointing;
  if (name == "bargein") return Scenario::kBargein;
  throw DataError("unknown scenario: " + name);
}

std::string label_name(Label l) {
  return l == Label::kSwitch ? "switch" : "hold";
}

Label label_from_name(const std::string &name) {
  if (name == "switch") return Label::kSwitch;
  if (name == "hold") return Label::kHold;
  throw DataError("unknown label: " + name);
}

namespace {

void validate_dialogue(const Dialogue &d) {
  int64_t prev_start = INT64_MIN;
  for (const auto &u : d.utterances) {
    if (u.end_ms <= u.start_ms)
      throw DataError("dialogue " + d.id + ": utterance with end_ms <= start_ms");
    if (u.start_ms < prev_start)
      throw DataError("dialogue " + d.id + ": utterances not sorted by start_ms");
    prev_start = u.start_ms;
  }
  // same-speaker utterances must not overlap
  for (Speaker sp : {Speaker::kCustomer, Speaker::kRobot}) {
    int64_t last_end = INT64_MIN;
    for (const auto &u : d.utterances) {
      if (u.speaker != sp) continue;
      if (u.start_ms < last_end)
        throw DataError("dialogue " + d.id + ": overlapping " + speaker_name(sp) +
                        " utterances");
      last_end = std::max(last_end, u.end_ms);
    }
  }
}

void validate_ipu(const IpuSample &s) {
  if (s.ipu_end_ms <= s.ipu_start_ms)
    throw DataError("ipu " + s.id + ": ipu_end_ms <= ipu_start_ms");
  if ((s.scenario == Scenario::kEndpointing) != (s.robot_overlap_ms == 0))
    throw DataError("ipu " + s.id +
                    ": scenario/robot_overlap_ms mismatch (endpointing iff overlap 0)");
  if (s.robot_overlap_ms < 0)
    throw DataError("ipu " + s.id + ": negative robot_overlap_ms");
}

}  // namespace

std::string dialogue_to_json(const Dialogue &d) {
  ordered_json j;
  j["id"] = d.id;
  j["utterances"] = ordered_json::array();
  for (const auto &u : d.utterances) {
    ordered_json ju;
    ju["speaker"] = speaker_name(u.speaker);
    ju["start_ms"] = u.start_ms;
    ju["end_ms"] = u.end_ms;
    ju["text"] = u.text;
    if (u.audio_path) ju["audio_path"] = *u.audio_path;
    j["utterances"].push_back(std::move(ju));
  }
  return j.dump();
}

Dialogue dialogue_from_json(const std::string &line) {
  ordered_json j = ordered_json::parse(line);
  Dialogue d;
  d.id = j.at("id").get<std::string>();
  for (const auto &ju : j.at("utterances")) {
    Utterance u;
    u.speaker = speaker_from_name(ju.at("speaker").get<std::string>());
    u.start_ms = ju.at("start_ms").get<int64_t>();
    u.end_ms = ju.at("end_ms").get<int64_t>();
    u.text = ju.at("text").get<std::string>();
    if (ju.contains("audio_path") && !ju.at("audio_path").is_null())
      u.audio_path = ju.at("audio_path").get<std::string>();
    d.utterances.push_back(std::move(u));
  }
  return d;
}

std::string ipu_to_json(const IpuSample &s) {
  ordered_json j;
  j["id"] = s.id;
  j["dialogue_id"] = s.dialogue_id;
  j["scenario"] = scenario_name(s.scenario);
  if (s.label) j["label"] = label_name(*s.label);
  j["text"] = s.text;
  j["context"] = ordered_json::array();
  for (const auto &turn : s.context)
    j["context"].push_back({speaker_name(turn.speaker), turn.text});
  j["audio_path"] = s.audio_path;
  j["ipu_start_ms"] = s.ipu_start_ms;
  j["ipu_end_ms"] = s.ipu_end_ms;
  if (s.prev_turn_end_ms) j["prev_turn_end_ms"] = *s.prev_turn_end_ms;
  j["robot_overlap_ms"] = s.robot_overlap_ms;
  j["augmented"] = s.augmented;
  return j.dump();
}

IpuSample ipu_from_json(const std::string &line) {
  ordered_json j = ordered_json::parse(line);
  IpuSample s;
  s.id = j.at("id").get<std::string>();
  s.dialogue_id = j.at("dialogue_id").get<std::string>();
  s.scenario = scenario_from_name(j.at("scenario").get<std::string>());
  if (j.contains("label") && !j.at("label").is_null())
    s.label = label_from_name(j.at("label").get<std::string>());
  s.text = j.at("text").get<std::string>();
  if (j.contains("context")) {
    for (const auto &jt : j.at("context")) {
      ContextTurn turn;
      turn.speaker = speaker_from_name(jt.at(0).get<std::string>());
      turn.text = jt.at(1).get<std::string>();
      s.context.push_back(std::move(turn));
    }
  }
  s.audio_path = j.at("audio_path").get<std::string>();
  s.ipu_start_ms = j.at("ipu_start_ms").get<int64_t>();
  s.ipu_end_ms = j.at("ipu_end_ms").get<int64_t>();
  if (j.contains("prev_turn_end_ms") && !j.at("prev_turn_end_ms").is_null())
    s.prev_turn_end_ms = j.at("prev_turn_end_ms").get<int64_t>();
  s.robot_overlap_ms = j.at("robot_overlap_ms").get<int64_t>();
  s.augmented = j.value("augmented", false);
  return s;
}

Corpus load_corpus(const std::string &dir, bool require_audio) {
  Corpus c;
  c.root = dir;
  uint64_t hash = 0xcbf29ce484222325ULL;
  std::set<std::string> dialogue_ids, ipu_ids;

  auto for_each_line = [&hash](const std::string &path, auto &&fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      hash = fnv1a64(line.data(), line.size(), hash);
      if (line.empty()) continue;
      try {
        fn(line);
      } catch (const nlohmann::json::exception &e) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": malformed line: " + e.what());
      } catch (const DataError &e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  };

  std::string dpath = dir + "/dialogues.jsonl";
  std::string ipath = dir + "/ipus.jsonl";
  bool have_d = fs::exists(dpath), have_i = fs::exists(ipath);
  if (!have_d && !have_i)
    throw DataError("corpus directory has neither dialogues.jsonl nor ipus.jsonl: " + dir);

  if (have_d) {
    for_each_line(dpath, [&](const std::string &line) {
      Dialogue d = dialogue_from_json(line);
      validate_dialogue(d);
      if (!dialogue_ids.insert(d.id).second)
        throw DataError("duplicate dialogue id: " + d.id);
      c.dialogues.push_back(std::move(d));
    });
  }
  if (have_i) {
    for_each_line(ipath, [&](const std::string &line) {
      IpuSample s = ipu_from_json(line);
      validate_ipu(s);
      if (!ipu_ids.insert(s.id).second) throw DataError("duplicate ipu id: " + s.id);
      c.samples.push_back(std::move(s));
    });
  }
  if (require_audio) {
    for (const auto &s : c.samples) {
      if (s.audio_path.empty() || !fs::exists(dir + "/" + s.audio_path))
        throw DataError("ipu " + s.id + ": missing audio file: " + s.audio_path);
    }
  }
  c.content_hash = to_hex(hash);
  return c;
}

void save_corpus(const Corpus &corpus, const std::string &dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/dialogues.jsonl", std::ios::binary);
    if (!out) throw DataError("cannot write " + dir + "/dialogues.jsonl");
    for (const auto &d : corpus.dialogues) out << dialogue_to_json(d) << "\n";
  }
  {
    std::ofstream out(dir + "/ipus.jsonl", std::ios::binary);
    if (!out) throw DataError("cannot write " + dir + "/ipus.jsonl");
    for (const auto &s : corpus.samples) out << ipu_to_json(s) << "\n";
  }
}

std::vector<IpuSample> extract_ipus(
    const Dialogue &dialogue,
    const std::vector<std::pair<int64_t, int64_t>> &customer_regions) {
  for (size_t i = 0; i < customer_regions.size(); ++i) {
    if (customer_regions[i].second <= customer_regions[i].first)
      throw DataError("extract_ipus: empty or inverted region");
    if (i > 0 && customer_regions[i].first < customer_regions[i - 1].second)
      throw DataError("extract_ipus: regions unsorted or overlapping");
  }

  // merge regions separated by <= 200 ms of silence
  std::vector<std::pair<int64_t, int64_t>> spans;
  for (const auto &r : customer_regions) {
    if (!spans.empty() && r.first - spans.back().second <= kIpuGapMs)
      spans.back().second = r.second;
    else
      spans.push_back(r);
  }

  std::vector<IpuSample> out;
  for (size_t i = 0; i < spans.size(); ++i) {
    IpuSample s;
    s.id = dialogue.id + "#ipu" + std::to_string(i);
    s.dialogue_id = dialogue.id;
    s.ipu_start_ms = spans[i].first;
    s.ipu_end_ms = spans[i].second;
    // text: customer utterances overlapping the IPU span, in order
    std::string text;
    for (const auto &u : dialogue.utterances) {
      if (u.speaker != Speaker::kCustomer) continue;
      if (u.end_ms <= s.ipu_start_ms || u.start_ms >= s.ipu_end_ms) continue;
      if (!text.empty() && !u.text.empty()) text += " ";
      text += u.text;
    }
    s.text = text;
    // context: every utterance that ended before the IPU started
    for (const auto &u : dialogue.utterances) {
      if (u.end_ms <= s.ipu_start_ms) s.context.push_back({u.speaker, u.text});
    }
    // previous turn: the last utterance by either speaker that started
    // before the IPU (its end may lie inside the IPU for barge-ins)
    std::optional<int64_t> prev_end;
    for (const auto &u : dialogue.utterances) {
      if (u.start_ms < s.ipu_start_ms &&
          !(u.speaker == Speaker::kCustomer && u.end_ms > s.ipu_start_ms))
        prev_end = u.end_ms;
    }
    s.prev_turn_end_ms = prev_end;
    out.push_back(std::move(s));
  }
  return out;
}

ScenarioClass classify_scenario(
    IpuSample *ipu, const std::vector<std::pair<int64_t, int64_t>> &robot_regions) {
  for (size_t i = 0; i < robot_regions.size(); ++i) {
    if (robot_regions[i].second <= robot_regions[i].first)
      throw DataError("classify_scenario: empty or inverted robot region");
    if (i > 0 && robot_regions[i].first < robot_regions[i - 1].second)
      throw DataError("classify_scenario: robot regions unsorted or overlapping");
  }
  int64_t overlap = 0;
  int64_t first_overlap_start = INT64_MAX;
  for (const auto &r : robot_regions) {
    int64_t lo = std::max(ipu->ipu_start_ms, r.first);
    int64_t hi = std::min(ipu->ipu_end_ms, r.second);
    if (hi > lo) {
      overlap += hi - lo;
      first_overlap_start = std::min(first_overlap_start, r.first);
    }
  }
  if (overlap == 0) {
    ipu->scenario = Scenario::kEndpointing;
    ipu->robot_overlap_ms = 0;
    return ScenarioClass::kEndpointing;
  }
  if (ipu->ipu_start_ms > first_overlap_start) {
    ipu->scenario = Scenario::kBargein;
    ipu->robot_overlap_ms = overlap;
    return ScenarioClass::kBargein;
  }
  return ScenarioClass::kUnclassifiable;
}

CorpusStats compute_stats(const std::vector<IpuSample> &samples) {
  CorpusStats stats;
  std::map<Scenario, int64_t> totals;
  for (const auto &s : samples) {
    if (!s.label) throw DataError("compute_stats: unlabeled sample " + s.id);
    stats.counts[{s.scenario, *s.label}]++;
    totals[s.scenario]++;
  }
  for (const auto &[key, count] : stats.counts) {
    stats.proportions[key] =
        static_cast<double>(count) / static_cast<double>(totals[key.first]);
  }
  return stats;
}

double fleiss_kappa(const std::vector<std::vector<int>> &ratings, int raters) {
  if (raters < 2) throw std::invalid_argument("fleiss_kappa: raters must be >= 2");
  if (ratings.empty()) throw std::invalid_argument("fleiss_kappa: no items");
  size_t n_cats = ratings[0].size();
  size_t n_items = ratings.size();

  double p_bar = 0.0;
  std::vector<double> cat_mass(n_cats, 0.0);
  for (size_t i = 0; i < ratings.size(); ++i) {
    const auto &row = ratings[i];
    if (row.size() != n_cats)
      throw std::invalid_argument("fleiss_kappa: ragged rating matrix");
    int row_sum = 0;
    double agree = 0.0;
    for (size_t j = 0; j < n_cats; ++j) {
      if (row[j] < 0) throw std::invalid_argument("fleiss_kappa: negative count");
      row_sum += row[j];
      agree += static_cast<double>(row[j]) * (row[j] - 1);
      cat_mass[j] += row[j];
    }
    if (row_sum != raters)
      throw std::invalid_argument("fleiss_kappa: item " + std::to_string(i) +
                                  " has " + std::to_string(row_sum) +
                                  " ratings, expected " + std::to_string(raters));
    p_bar += agree / (static_cast<double>(raters) * (raters - 1));
  }
  p_bar /= static_cast<double>(n_items);

  double total = static_cast<double>(n_items) * raters;
  double p_e = 0.0;
  for (double m : cat_mass) {
    double pj = m / total;
    p_e += pj * pj;
  }
  if (p_e >= 1.0)
    throw NumericError("fleiss_kappa: all ratings in one category, kappa undefined");
  return (p_bar - p_e) / (1.0 - p_e);
}

std::vector<std::vector<size_t>> split_folds(const std::vector<IpuSample> &samples,
                                             int k, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("split_folds: k must be >= 2");
  // group sample indices per dialogue, in first-appearance order
  std::vector<std::string> order;
  std::map<std::string, std::vector<size_t>> by_dialogue;
  for (size_t i = 0; i < samples.size(); ++i) {
    auto [it, inserted] = by_dialogue.try_emplace(samples[i].dialogue_id);
    if (inserted) order.push_back(samples[i].dialogue_id);
    it->second.push_back(i);
  }
  if (static_cast<int>(order.size()) < k)
    throw DataError("split_folds: only " + std::to_string(order.size()) +
                    " dialogues for " + std::to_string(k) + " folds");

  Rng rng(seed);
  rng.shuffle(&order);

  // greedy: each dialogue goes to the currently smallest fold
  std::vector<std::vector<size_t>> folds(k);
  for (const auto &id : order) {
    size_t best = 0;
    for (size_t f = 1; f < folds.size(); ++f)
      if (folds[f].size() < folds[best].size()) best = f;
    const auto &idx = by_dialogue[id];
    folds[best].insert(folds[best].end(), idx.begin(), idx.end());
  }
  return folds;
}

}  // namespace corpus
}  // namespace turntake
