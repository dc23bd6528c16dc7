// tools/bench_kernels.cc

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

// Benchmarks the OpenMP kernels against their serial reference on
// matmul shapes from the training path plus batch feature extraction,
// and verifies bitwise agreement while at it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include <CLI11.hpp>

#include "turntake/common.h"
#include "turntake/dsp.h"
#include "turntake/nn/kernels.h"

using namespace turntake;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void fill_random(std::vector<double> *v, Rng *rng) {
  for (auto &x : *v) x = rng->normal();
}

struct MatShape {
  const char *name;
  int m, n, k;
};

void bench_matmul(int iters, Rng *rng) {
  // im2col products from the conv stages plus a square reference point
  const MatShape shapes[] = {
      {"conv-stage (4800x16x144)", 4800, 16, 144},
      {"conv-backward (4800x144x16)", 4800, 144, 16},
      {"dense (512x512x512)", 512, 512, 512},
  };
  std::printf("%-28s %12s %12s %9s %8s\n", "matmul", "serial s", "parallel s",
              "speedup", "match");
  for (const auto &s : shapes) {
    std::vector<double> a(static_cast<size_t>(s.m) * s.k);
    std::vector<double> b(static_cast<size_t>(s.k) * s.n);
    std::vector<double> c1(static_cast<size_t>(s.m) * s.n);
    std::vector<double> c2(c1.size());
    fill_random(&a, rng);
    fill_random(&b, rng);

    auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i)
      nn::kernels::matmul_serial(a.data(), b.data(), c1.data(), s.m, s.n, s.k, false,
                                 false, false);
    double ts = seconds_since(t0) / iters;

    t0 = Clock::now();
    for (int i = 0; i < iters; ++i)
      nn::kernels::matmul_parallel(a.data(), b.data(), c2.data(), s.m, s.n, s.k, false,
                                   false, false);
    double tp = seconds_since(t0) / iters;

    bool match = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
    std::printf("%-28s %12.6f %12.6f %8.2fx %8s\n", s.name, ts, tp, ts / tp,
                match ? "exact" : "DIFF");
  }
}

void bench_featurize(int iters, Rng *rng) {
  // 64 two-second clips through the full 30-dim frame pipeline
  int n_clips = 64;
  std::vector<dsp::AudioClip> clips(n_clips);
  std::vector<const dsp::AudioClip *> ptrs(n_clips);
  std::vector<int64_t> ends(n_clips);
  for (int i = 0; i < n_clips; ++i) {
    clips[i].samples.resize(16000);
    double f0 = rng->uniform(100.0, 300.0);
    for (int t = 0; t < 16000; ++t)
      clips[i].samples[t] = 0.3 * std::sin(2.0 * M_PI * f0 * t / 8000.0) +
                            0.01 * rng->normal();
    ptrs[i] = &clips[i];
    ends[i] = 2000;
  }

  bool saved = nn::kernels::parallel_enabled();
  std::printf("\n%-28s %12s %12s %9s\n", "featurize", "serial s", "parallel s",
              "speedup");
  nn::kernels::set_parallel_enabled(false);
  auto t0 = Clock::now();
  std::vector<dsp::FrameMatrix> serial_out;
  for (int i = 0; i < iters; ++i) serial_out = dsp::extract_frame_matrices(ptrs, ends);
  double ts = seconds_since(t0) / iters;

  nn::kernels::set_parallel_enabled(true);
  t0 = Clock::now();
  std::vector<dsp::FrameMatrix> par_out;
  for (int i = 0; i < iters; ++i) par_out = dsp::extract_frame_matrices(ptrs, ends);
  double tp = seconds_since(t0) / iters;
  nn::kernels::set_parallel_enabled(saved);

  bool match = true;
  for (int i = 0; i < n_clips && match; ++i)
    match = std::memcmp(serial_out[i].data.data(), par_out[i].data.data(),
                        serial_out[i].data.size() * sizeof(double)) == 0;
  std::printf("%-28s %12.6f %12.6f %8.2fx %8s\n", "64 clips x 40 frames", ts, tp,
              ts / tp, match ? "exact" : "DIFF");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"kernel benchmark: serial reference vs OpenMP"};
  int iters = 5;
  uint64_t seed = 7;
  app.add_option("--iters", iters, "iterations per measurement");
  app.add_option("--seed", seed, "rng seed");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads available: %d\n\n", nn::kernels::max_threads());
  Rng rng(seed);
  bench_matmul(iters, &rng);
  bench_featurize(iters, &rng);
  return 0;
}
