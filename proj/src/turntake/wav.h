// turntake/wav.h

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

#ifndef TURNTAKE_WAV_H_
#define TURNTAKE_WAV_H_

#include <cstdint>
#include <string>
#include <vector>

namespace turntake {

// The corpus audio format is fixed: RIFF WAV, PCM signed 16-bit
// little-endian, mono, 8000 Hz. Anything else is rejected.
constexpr int kSampleRateHz = 8000;

// Reads a WAV file, validating the fixed format. Samples are scaled to
// [-1, 1) as sample/32768.
std::vector<double> read_wav(const std::string &path);

// Writes mono 8 kHz PCM16; doubles are clamped to [-1, 1) and quantized
// by rounding toward nearest.
void write_wav(const std::string &path, const std::vector<double> &samples);

}  // namespace turntake

#endif  // TURNTAKE_WAV_H_
