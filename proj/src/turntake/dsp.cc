// turntake/dsp.cc

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

#include "turntake/dsp.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "turntake/nn/kernels.h"
#include "turntake/wav.h"

namespace turntake {
namespace dsp {

namespace {

constexpr int kFftSize = 512;
constexpr int kFftBins = kFftSize / 2 + 1;

void check_frame(const double *frame, int n) {
  if (frame == nullptr || n != kFrameSamples)
    throw std::invalid_argument("frame must have exactly " +
                                std::to_string(kFrameSamples) + " samples");
}

// iterative radix-2 complex FFT, fixed 512 points
void fft512(std::complex<double> *a) {
  int n = kFftSize;
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / len;
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelBank {
  // weights[band][bin]
  std::array<std::array<double, kFftBins>, kNumMelBands> weights{};
  std::array<double, kNumMelBands> centers_hz{};

  MelBank() {
    double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(4000.0);
    std::array<double, kNumMelBands + 2> edges_hz;
    for (int i = 0; i < kNumMelBands + 2; ++i)
      edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kNumMelBands + 1));
    for (int b = 0; b < kNumMelBands; ++b) {
      centers_hz[b] = edges_hz[b + 1];
      double lo = edges_hz[b], mid = edges_hz[b + 1], hi = edges_hz[b + 2];
      for (int k = 0; k < kFftBins; ++k) {
        double f = static_cast<double>(k) * 8000.0 / kFftSize;
        double w = 0.0;
        if (f > lo && f < mid)
          w = (f - lo) / (mid - lo);
        else if (f >= mid && f < hi)
          w = (hi - f) / (hi - mid);
        weights[b][k] = w;
      }
    }
  }
};

const MelBank &mel_bank() {
  static const MelBank bank;
  return bank;
}

}  // namespace

double frame_energy(const double *frame, int n) {
  check_frame(frame, n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += frame[i] * frame[i];
  return std::log10(acc / n + kEnergyFloor);
}

double frame_zcr(const double *frame, int n) {
  check_frame(frame, n);
  int crossings = 0;
  for (int i = 1; i < n; ++i) {
    bool a = frame[i - 1] >= 0.0, b = frame[i] >= 0.0;
    if (a != b) ++crossings;
  }
  return static_cast<double>(crossings) / (n - 1);
}

std::pair<double, int> frame_pitch(const double *frame, int n) {
  check_frame(frame, n);
  // mean removal keeps DC-offset frames from looking periodic
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += frame[i];
  mean /= n;
  std::array<double, kFrameSamples> x;
  for (int i = 0; i < n; ++i) x[i] = frame[i] - mean;

  double r0 = 0.0;
  for (int i = 0; i < n; ++i) r0 += x[i] * x[i];
  if (r0 <= 0.0) return {0.0, 0};

  int best_lag = 0;
  double best = 0.0;
  for (int lag = kPitchMinLag; lag <= kPitchMaxLag; ++lag) {
    double r = 0.0;
    for (int i = 0; i + lag < n; ++i) r += x[i] * x[i + lag];
    if (r > best) {
      best = r;
      best_lag = lag;
    }
  }
  if (best_lag == 0 || best / r0 <= kVoicingThreshold) return {0.0, 0};
  return {8000.0 / best_lag, 1};
}

std::array<double, kNumMelBands> mel_filterbank(const double *frame, int n) {
  check_frame(frame, n);
  std::array<std::complex<double>, kFftSize> buf{};
  for (int i = 0; i < n; ++i) {
    double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (n - 1)));  // Hann
    buf[i] = frame[i] * w;
  }
  fft512(buf.data());

  std::array<double, kFftBins> power;
  for (int k = 0; k < kFftBins; ++k) power[k] = std::norm(buf[k]);

  const MelBank &bank = mel_bank();
  std::array<double, kNumMelBands> out;
  for (int b = 0; b < kNumMelBands; ++b) {
    double e = 0.0;
    for (int k = 0; k < kFftBins; ++k) e += bank.weights[b][k] * power[k];
    out[b] = std::log(e + kEnergyFloor);
  }
  return out;
}

std::array<double, kNumMelBands> mel_band_centers_hz() {
  return mel_bank().centers_hz;
}

void frame_vector(const double *frame, int n, double *out) {
  out[0] = frame_energy(frame, n);
  auto [f0, voiced] = frame_pitch(frame, n);
  out[1] = f0;
  out[2] = static_cast<double>(voiced);
  out[3] = frame_zcr(frame, n);
  auto mel = mel_filterbank(frame, n);
  std::copy(mel.begin(), mel.end(), out + 4);
}

FrameMatrix extract_frame_matrix(const AudioClip &clip, int64_t ipu_end_ms) {
  if (clip.sample_rate_hz != kSampleRateHz)
    throw DataError("unsupported sample rate " + std::to_string(clip.sample_rate_hz));
  int64_t end_sample = ipu_end_ms * kSampleRateHz / 1000;
  if (end_sample > static_cast<int64_t>(clip.samples.size()))
    throw std::invalid_argument("ipu_end_ms beyond clip length");

  FrameMatrix m;
  int64_t avail = std::min<int64_t>(end_sample, kNumFrames * kFrameSamples);
  int valid = static_cast<int>(avail / kFrameSamples);
  m.valid_frames = valid;
  for (int i = 0; i < valid; ++i) {
    int row = kNumFrames - valid + i;
    int64_t start = end_sample - static_cast<int64_t>(valid - i) * kFrameSamples;
    frame_vector(clip.samples.data() + start, kFrameSamples, m.row(row));
  }
  return m;
}

std::vector<FrameMatrix> extract_frame_matrices(
    const std::vector<const AudioClip *> &clips, const std::vector<int64_t> &end_ms) {
  if (clips.size() != end_ms.size())
    throw std::invalid_argument("extract_frame_matrices: size mismatch");
  std::vector<FrameMatrix> out(clips.size());
  // independent per-sample outputs: deterministic under any schedule
  bool parallel = nn::kernels::parallel_enabled();
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int64_t i = 0; i < static_cast<int64_t>(clips.size()); ++i)
    out[i] = extract_frame_matrix(*clips[i], end_ms[i]);
  return out;
}

std::vector<std::pair<int64_t, int64_t>> detect_speech_regions(const AudioClip &clip) {
  if (clip.samples.empty()) throw std::invalid_argument("detect_speech_regions: empty clip");
  int n_frames = static_cast<int>(clip.samples.size()) / kFrameSamples;
  if (n_frames == 0) return {};

  std::vector<double> energy(n_frames);
  for (int i = 0; i < n_frames; ++i)
    energy[i] = frame_energy(clip.samples.data() + i * kFrameSamples, kFrameSamples);

  std::vector<double> sorted = energy;
  std::sort(sorted.begin(), sorted.end());
  double p10 = sorted[static_cast<size_t>(n_frames / 10)];
  double threshold = p10 + 0.6;  // +6 dB in log10-power units

  std::vector<bool> speech(n_frames);
  for (int i = 0; i < n_frames; ++i) speech[i] = energy[i] > threshold;
  // hangover: bridge single-frame dips inside speech
  for (int i = 1; i + 1 < n_frames; ++i)
    if (!speech[i] && speech[i - 1] && speech[i + 1]) speech[i] = true;

  std::vector<std::pair<int64_t, int64_t>> regions;
  int start = -1;
  for (int i = 0; i <= n_frames; ++i) {
    bool s = i < n_frames && speech[i];
    if (s && start < 0) start = i;
    if (!s && start >= 0) {
      regions.emplace_back(static_cast<int64_t>(start) * kFrameShiftMs,
                           static_cast<int64_t>(i) * kFrameShiftMs);
      start = -1;
    }
  }
  return regions;
}

}  // namespace dsp
}  // namespace turntake
