// turntake/common.h

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

#ifndef TURNTAKE_COMMON_H_
#define TURNTAKE_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace turntake {

// Bad input files, invariant violations in loaded data. CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

// NaN/Inf, divergence, failed numeric verification. CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string &msg) : std::runtime_error(msg) {}
};

// Bad command-line usage. CLI exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

uint64_t splitmix64(uint64_t *state);

// Deterministic RNG used for every random draw in the toolkit. Hand-rolled
// (splitmix64 core + Box-Muller) so that results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {
    // warm up so that small seeds decorrelate
    splitmix64(&state_);
    splitmix64(&state_);
  }

  uint64_t next_u64() { return splitmix64(&state_); }

  // uniform in [0, 1)
  double uniform();
  // uniform real in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // uniform integer in [lo, hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi);
  // standard normal via Box-Muller
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  // derived independent stream; deterministic in (parent state seed, tag)
  Rng fork(uint64_t tag) const;

  template <typename T>
  void shuffle(std::vector<T> *v) {
    for (size_t i = v->size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap((*v)[i - 1], (*v)[j]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a 64-bit, used for corpus content hashes.
uint64_t fnv1a64(const void *data, size_t len, uint64_t h = 0xcbf29ce484222325ULL);
std::string to_hex(uint64_t v);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

}  // namespace turntake

#endif  // TURNTAKE_COMMON_H_
