// turntake/text.h

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

#ifndef TURNTAKE_TEXT_H_
#define TURNTAKE_TEXT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "turntake/common.h"
#include "turntake/corpus.h"

namespace turntake {
namespace text {

enum class TokenizerMode { kChar, kWhitespace };

TokenizerMode tokenizer_mode_from_name(const std::string &name);
std::string tokenizer_mode_name(TokenizerMode mode);

// char mode splits into non-whitespace Unicode code points (UTF-8 aware);
// whitespace mode splits on runs of whitespace.
std::vector<std::string> tokenize(const std::string &s, TokenizerMode mode);

constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kClsId = 2;
constexpr int kSepId = 3;
constexpr int kNumReservedIds = 4;

class Vocabulary {
 public:
  Vocabulary() = default;

  // Tokens with count >= min_count get ids in (count desc, token asc) order
  // after the reserved ids. Must be built on training data only.
  static Vocabulary build(const std::vector<std::vector<std::string>> &token_lists,
                          int min_count);

  int id(const std::string &token) const;  // kUnkId when unknown
  bool contains(const std::string &token) const { return token_to_id_.count(token) > 0; }
  int size() const { return static_cast<int>(token_to_id_.size()) + kNumReservedIds; }

  std::string to_json() const;  // {token: id}
  static Vocabulary from_json(const std::string &json_str);

  const std::map<std::string, int> &tokens() const { return token_to_id_; }

 private:
  std::map<std::string, int> token_to_id_;
};

struct TokenSequence {
  std::vector<int> token_ids;    // starts with CLS
  std::vector<int> segment_ids;  // 0 = context, 1 = CLS + current utterance
  bool truncated_current = false;
};

// Layout [CLS] ctx1 [SEP] ... ctxK [SEP] current, where ctx1..K are the most
// recent `context_turns` turns. Overlong sequences lose context tokens from
// the left; the current utterance is only truncated (tail-first, flagged)
// when it alone exceeds l_max.
TokenSequence encode_with_context(const corpus::IpuSample &sample,
                                  const Vocabulary &vocab, int context_turns,
                                  int l_max, TokenizerMode mode);

struct EmbeddingTable {
  int dim = 0;
  std::vector<std::vector<double>> rows;  // indexed by vocab id
  double coverage = 0.0;                  // fraction of non-reserved tokens found
};

// Text file with one "token v1 ... v_dim" per line. Tokens absent from the
// file get seeded random vectors; reserved ids are random too.
EmbeddingTable load_pretrained_embeddings(const std::string &path,
                                          const Vocabulary &vocab, int dim_in,
                                          uint64_t seed);

}  // namespace text
}  // namespace turntake

#endif  // TURNTAKE_TEXT_H_
