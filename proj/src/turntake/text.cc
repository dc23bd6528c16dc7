// turntake/text.cc

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

#include "turntake/text.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace turntake {
namespace text {

TokenizerMode tokenizer_mode_from_name(const std::string &name) {
  if (name == "char") return TokenizerMode::kChar;
  if (name == "whitespace") return TokenizerMode::kWhitespace;
  throw DataError("unknown tokenizer mode: " + name);
}

std::string tokenizer_mode_name(TokenizerMode mode) {
  return mode == TokenizerMode::kChar ? "char" : "whitespace";
}

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

int utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // invalid byte: treat as single char
}

}  // namespace

std::vector<std::string> tokenize(const std::string &s, TokenizerMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizerMode::kWhitespace) {
    size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space_byte(s[i])) ++i;
      size_t start = i;
      while (i < s.size() && !is_space_byte(s[i])) ++i;
      if (i > start) out.push_back(s.substr(start, i - start));
    }
  } else {
    size_t i = 0;
    while (i < s.size()) {
      if (is_space_byte(s[i])) {
        ++i;
        continue;
      }
      int len = utf8_len(static_cast<unsigned char>(s[i]));
      len = static_cast<int>(std::min<size_t>(len, s.size() - i));
      out.push_back(s.substr(i, len));
      i += len;
    }
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>> &token_lists,
                             int min_count) {
  std::map<std::string, int64_t> counts;
  for (const auto &list : token_lists)
    for (const auto &t : list) counts[t]++;
  if (counts.empty()) throw DataError("build_vocab: empty corpus");

  std::vector<std::pair<std::string, int64_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  int next_id = kNumReservedIds;
  for (const auto &[token, count] : items)
    if (count >= min_count) v.token_to_id_[token] = next_id++;
  return v;
}

int Vocabulary::id(const std::string &token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

std::string Vocabulary::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  // emit in id order for stable files
  std::vector<std::pair<int, std::string>> by_id;
  for (const auto &[tok, tid] : token_to_id_) by_id.emplace_back(tid, tok);
  std::sort(by_id.begin(), by_id.end());
  for (const auto &[tid, tok] : by_id) j[tok] = tid;
  return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string &json_str) {
  nlohmann::json j = nlohmann::json::parse(json_str);
  Vocabulary v;
  for (auto it = j.begin(); it != j.end(); ++it)
    v.token_to_id_[it.key()] = it.value().get<int>();
  return v;
}

TokenSequence encode_with_context(const corpus::IpuSample &sample,
                                  const Vocabulary &vocab, int context_turns,
                                  int l_max, TokenizerMode mode) {
  if (l_max < 4) throw std::invalid_argument("encode_with_context: l_max must be >= 4");

  std::vector<int> ctx_ids, ctx_segs;
  int n_turns = static_cast<int>(sample.context.size());
  int first = std::max(0, n_turns - context_turns);
  for (int t = first; t < n_turns; ++t) {
    for (const auto &tok : tokenize(sample.context[t].text, mode)) {
      ctx_ids.push_back(vocab.id(tok));
      ctx_segs.push_back(0);
    }
    ctx_ids.push_back(kSepId);
    ctx_segs.push_back(0);
  }

  std::vector<int> cur_ids;
  for (const auto &tok : tokenize(sample.text, mode)) cur_ids.push_back(vocab.id(tok));

  TokenSequence seq;
  // current utterance alone (plus CLS) may exceed l_max: truncate its tail
  if (1 + static_cast<int>(cur_ids.size()) > l_max) {
    cur_ids.resize(l_max - 1);
    seq.truncated_current = true;
    ctx_ids.clear();
    ctx_segs.clear();
  }
  // drop context tokens from the left until everything fits
  int total = 1 + static_cast<int>(ctx_ids.size()) + static_cast<int>(cur_ids.size());
  int drop = std::max(0, total - l_max);
  seq.token_ids.push_back(kClsId);
  seq.segment_ids.push_back(1);
  for (size_t i = drop; i < ctx_ids.size(); ++i) {
    seq.token_ids.push_back(ctx_ids[i]);
    seq.segment_ids.push_back(ctx_segs[i]);
  }
  for (int id : cur_ids) {
    seq.token_ids.push_back(id);
    seq.segment_ids.push_back(1);
  }
  return seq;
}

EmbeddingTable load_pretrained_embeddings(const std::string &path,
                                          const Vocabulary &vocab, int dim_in,
                                          uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);

  std::map<std::string, std::vector<double>> file_vecs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token))
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed line");
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (static_cast<int>(vec.size()) != dim_in)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim_in) + " values, got " +
                      std::to_string(vec.size()));
    file_vecs[token] = std::move(vec);
  }

  EmbeddingTable table;
  table.dim = dim_in;
  table.rows.resize(vocab.size());
  Rng rng(seed);
  auto random_row = [&]() {
    std::vector<double> r(dim_in);
    for (double &x : r) x = rng.normal(0.0, 0.1);
    return r;
  };
  for (int i = 0; i < kNumReservedIds; ++i) table.rows[i] = random_row();

  int found = 0;
  for (const auto &[token, tid] : vocab.tokens()) {
    auto it = file_vecs.find(token);
    if (it != file_vecs.end()) {
      table.rows[tid] = it->second;
      ++found;
    } else {
      table.rows[tid] = random_row();
    }
  }
  int n_tokens = static_cast<int>(vocab.tokens().size());
  table.coverage = n_tokens == 0 ? 0.0 : static_cast<double>(found) / n_tokens;
  return table;
}

}  // namespace text
}  // namespace turntake
