// turntake/timing.cc

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

#include "turntake/timing.h"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace turntake {
namespace timing {

TimingFeatures compute_timing_features(const corpus::IpuSample &sample,
                                       text::TokenizerMode mode) {
  TimingFeatures f;
  f.duration_ms = sample.ipu_end_ms - sample.ipu_start_ms;
  f.text_len = static_cast<int64_t>(text::tokenize(sample.text, mode).size());
  f.interval_ms = sample.prev_turn_end_ms
                      ? std::max<int64_t>(0, sample.ipu_start_ms - *sample.prev_turn_end_ms)
                      : 0;
  f.speaking_rate =
      static_cast<double>(f.text_len) / (static_cast<double>(f.duration_ms) / 1000.0);
  return f;
}

BucketSpec fit_buckets(const std::vector<TimingFeatures> &train, int n_buckets) {
  if (n_buckets < 2) throw std::invalid_argument("fit_buckets: n_buckets must be >= 2");
  if (train.empty()) throw std::invalid_argument("fit_buckets: empty training set");

  BucketSpec spec;
  spec.n_buckets = n_buckets;
  size_t n = train.size();
  for (int feat = 0; feat < kNumTimingFeatures; ++feat) {
    std::vector<double> values(n);
    for (size_t i = 0; i < n; ++i) values[i] = train[i].as_array()[feat];
    std::sort(values.begin(), values.end());
    std::vector<double> bounds;
    for (int k = 1; k < n_buckets; ++k) {
      // boundary at the k/n_buckets quantile (nearest-rank)
      size_t idx = static_cast<size_t>(
          std::ceil(static_cast<double>(k) * n / n_buckets)) - 1;
      idx = std::min(idx, n - 1);
      double b = values[idx];
      if (bounds.empty() || b > bounds.back()) bounds.push_back(b);
    }
    spec.boundaries[feat] = std::move(bounds);
  }
  return spec;
}

std::array<int, kNumTimingFeatures> discretize(const TimingFeatures &features,
                                               const BucketSpec &spec) {
  if (spec.n_buckets < 2) throw std::invalid_argument("discretize: unfitted BucketSpec");
  std::array<int, kNumTimingFeatures> ids{};
  auto raw = features.as_array();
  for (int feat = 0; feat < kNumTimingFeatures; ++feat) {
    const auto &b = spec.boundaries[feat];
    // count of boundaries <= value: value on a boundary goes to the higher bin
    ids[feat] = static_cast<int>(
        std::upper_bound(b.begin(), b.end(), raw[feat]) - b.begin());
  }
  return ids;
}

std::string BucketSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n_buckets"] = n_buckets;
  j["boundaries"] = nlohmann::ordered_json::array();
  for (const auto &b : boundaries) j["boundaries"].push_back(b);
  return j.dump();
}

BucketSpec BucketSpec::from_json(const std::string &json_str) {
  nlohmann::json j = nlohmann::json::parse(json_str);
  BucketSpec spec;
  spec.n_buckets = j.at("n_buckets").get<int>();
  auto arr = j.at("boundaries");
  if (arr.size() != kNumTimingFeatures)
    throw DataError("BucketSpec: expected 4 boundary lists");
  for (int i = 0; i < kNumTimingFeatures; ++i)
    spec.boundaries[i] = arr[i].get<std::vector<double>>();
  return spec;
}

}  // namespace timing
}  // namespace turntake
