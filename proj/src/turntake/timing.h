// turntake/timing.h

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

#ifndef TURNTAKE_TIMING_H_
#define TURNTAKE_TIMING_H_

#include <array>
#include <string>
#include <vector>

#include "turntake/corpus.h"
#include "turntake/text.h"

namespace turntake {
namespace timing {

constexpr int kNumTimingFeatures = 4;

// The four raw turn-timing signals: IPU duration, IPU text length, interval
// to the previous turn end (clamped at 0), and speaking rate in tokens/s.
struct TimingFeatures {
  int64_t duration_ms = 0;
  int64_t text_len = 0;
  int64_t interval_ms = 0;
  double speaking_rate = 0.0;

  std::array<double, kNumTimingFeatures> as_array() const {
    return {static_cast<double>(duration_ms), static_cast<double>(text_len),
            static_cast<double>(interval_ms), speaking_rate};
  }
};

TimingFeatures compute_timing_features(const corpus::IpuSample &sample,
                                       text::TokenizerMode mode);

// Per-feature quantile bin boundaries, fit on training data only.
struct BucketSpec {
  int n_buckets = 0;
  // strictly increasing boundary lists, one per feature (duplicates collapsed)
  std::array<std::vector<double>, kNumTimingFeatures> boundaries;

  std::string to_json() const;
  static BucketSpec from_json(const std::string &json_str);
};

BucketSpec fit_buckets(const std::vector<TimingFeatures> &train, int n_buckets);

// id = number of boundaries <= value, per feature; always in [0, n_buckets-1]
std::array<int, kNumTimingFeatures> discretize(const TimingFeatures &features,
                                               const BucketSpec &spec);

}  // namespace timing
}  // namespace turntake

#endif  // TURNTAKE_TIMING_H_
