// turntake/dsp.h

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

#ifndef TURNTAKE_DSP_H_
#define TURNTAKE_DSP_H_

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "turntake/common.h"

namespace turntake {
namespace dsp {

// Frame layout: 50 ms non-overlapping frames at 8 kHz.
constexpr int kFrameSamples = 400;
constexpr int kFrameShiftMs = 50;
constexpr int kNumFrames = 40;  // last 2 seconds of an IPU
constexpr int kNumMelBands = 26;
// 30-dim frame vector: [log_energy, f0_hz, voicing, zcr, 26 log-mel]
constexpr int kFrameDim = 4 + kNumMelBands;
constexpr double kEnergyFloor = 1e-10;

// pitch search range 60..400 Hz -> autocorrelation lags in samples
constexpr int kPitchMinLag = 20;   // 8000 / 400
constexpr int kPitchMaxLag = 133;  // 8000 / 60 (rounded down)
constexpr double kVoicingThreshold = 0.3;

struct AudioClip {
  std::vector<double> samples;  // [-1, 1)
  int sample_rate_hz = 8000;

  int64_t duration_ms() const {
    return static_cast<int64_t>(samples.size()) * 1000 / sample_rate_hz;
  }
};

// Row-major 40 x 30 matrix; rows before (40 - valid_frames) are zero padding.
struct FrameMatrix {
  std::array<double, kNumFrames * kFrameDim> data{};
  int valid_frames = 0;

  double *row(int r) { return data.data() + r * kFrameDim; }
  const double *row(int r) const { return data.data() + r * kFrameDim; }
};

// log10 of mean squared amplitude (+ floor). Frame must be 400 samples.
double frame_energy(const double *frame, int n);

// zero-crossing rate in [0, 1]; zero samples count as positive.
double frame_zcr(const double *frame, int n);

// autocorrelation pitch over 60..400 Hz; returns (f0_hz, voicing in {0,1});
// (0, 0) when the normalized peak is below the voicing threshold.
std::pair<double, int> frame_pitch(const double *frame, int n);

// Hann window, zero-pad to 512, power spectrum, 26 triangular mel filters
// over 0..4000 Hz, natural log of (band energy + floor).
std::array<double, kNumMelBands> mel_filterbank(const double *frame, int n);

// center frequencies in Hz of the 26 mel bands (for test oracles)
std::array<double, kNumMelBands> mel_band_centers_hz();

// full 30-dim vector for one frame
void frame_vector(const double *frame, int n, double *out);

// 40 non-overlapping frames ending at ipu_end_ms; shorter input is
// left-padded with zero rows.
FrameMatrix extract_frame_matrix(const AudioClip &clip, int64_t ipu_end_ms);

// batch version; parallel over samples when OpenMP is enabled
std::vector<FrameMatrix> extract_frame_matrices(
    const std::vector<const AudioClip *> &clips, const std::vector<int64_t> &end_ms);

// Energy-threshold VAD: a frame is speech when its log-energy exceeds the
// 10th-percentile frame energy by 6 dB; single-frame gaps inside speech are
// bridged. Region boundaries are multiples of 50 ms.
std::vector<std::pair<int64_t, int64_t>> detect_speech_regions(const AudioClip &clip);

}  // namespace dsp
}  // namespace turntake

#endif  // TURNTAKE_DSP_H_
