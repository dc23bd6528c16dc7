// turntake/wav.cc

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

#include "turntake/wav.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "turntake/common.h"

namespace turntake {

namespace {

uint32_t read_u32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string *s, uint32_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>((v >> 8) & 0xff));
  s->push_back(static_cast<char>((v >> 16) & 0xff));
  s->push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string *s, uint16_t v) {
  s->push_back(static_cast<char>(v & 0xff));
  s->push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

std::vector<double> read_wav(const std::string &path) {
  std::string raw = read_text_file(path);
  const unsigned char *p = reinterpret_cast<const unsigned char *>(raw.data());
  size_t n = raw.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  size_t pos = 12;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  while (pos + 8 <= n) {
    const unsigned char *hdr = p + pos;
    uint32_t chunk_size = read_u32(hdr + 4);
    size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + 16 > n) throw DataError("truncated fmt chunk: " + path);
      format = read_u16(p + body);
      channels = read_u16(p + body + 2);
      rate = read_u32(p + body + 4);
      bits = read_u16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw DataError("data chunk before fmt chunk: " + path);
      if (format != 1 || bits != 16)
        throw DataError("unsupported WAV encoding (need PCM signed 16-bit): " + path);
      if (channels != 1)
        throw DataError("unsupported channel count " + std::to_string(channels) +
                        " (need mono): " + path);
      if (rate != static_cast<uint32_t>(kSampleRateHz))
        throw DataError("unsupported sample rate " + std::to_string(rate) +
                        " Hz (need 8000 Hz): " + path);
      if (body + chunk_size > n) throw DataError("truncated data chunk: " + path);
      size_t count = chunk_size / 2;
      std::vector<double> out(count);
      for (size_t i = 0; i < count; ++i) {
        int16_t s = static_cast<int16_t>(read_u16(p + body + 2 * i));
        out[i] = static_cast<double>(s) / 32768.0;
      }
      return out;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  throw DataError("no data chunk found: " + path);
}

void write_wav(const std::string &path, const std::vector<double> &samples) {
  std::string out;
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(&out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(&out, 16);
  put_u16(&out, 1);  // PCM
  put_u16(&out, 1);  // mono
  put_u32(&out, kSampleRateHz);
  put_u32(&out, kSampleRateHz * 2);  // byte rate
  put_u16(&out, 2);                  // block align
  put_u16(&out, 16);                 // bits
  out += "data";
  put_u32(&out, data_bytes);
  for (double v : samples) {
    double x = std::lround(v * 32768.0);
    if (x > 32767.0) x = 32767.0;
    if (x < -32768.0) x = -32768.0;
    put_u16(&out, static_cast<uint16_t>(static_cast<int16_t>(x)));
  }
  write_text_file(path, out);
}

}  // namespace turntake
