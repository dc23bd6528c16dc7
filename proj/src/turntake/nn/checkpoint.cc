// turntake/nn/checkpoint.cc

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

#include "turntake/nn/checkpoint.h"

#include <cstring>
#include <fstream>

namespace turntake {
namespace nn {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream &out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<char *>(b), 4);
}

uint32_t read_u32(std::ifstream &in, const std::string &path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4))
    throw DataError("truncated checkpoint: " + path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_string(std::ofstream &out, const std::string &s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream &in, const std::string &path) {
  uint32_t len = read_u32(in, path);
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw DataError("truncated checkpoint: " + path);
  return s;
}

void write_doubles(std::ofstream &out, const std::vector<double> &v) {
  // x86 doubles are already little-endian IEEE-754; write raw
  out.write(reinterpret_cast<const char *>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_string(out, ckpt.config_json);
  write_string(out, ckpt.vocab_json);
  write_string(out, ckpt.buckets_json);
  write_u32(out, static_cast<uint32_t>(ckpt.blobs.size()));
  for (const auto &blob : ckpt.blobs) {
    write_string(out, blob.name);
    write_u32(out, blob.trainable ? 1 : 0);
    write_u32(out, static_cast<uint32_t>(blob.shape.size()));
    for (int d : blob.shape) write_u32(out, static_cast<uint32_t>(d));
    write_u32(out, static_cast<uint32_t>(blob.values.size()));
    write_doubles(out, blob.values);
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.config_json = read_string(in, path);
  ckpt.vocab_json = read_string(in, path);
  ckpt.buckets_json = read_string(in, path);
  uint32_t n_blobs = read_u32(in, path);
  for (uint32_t i = 0; i < n_blobs; ++i) {
    CheckpointBlob blob;
    blob.name = read_string(in, path);
    blob.trainable = read_u32(in, path) != 0;
    uint32_t rank = read_u32(in, path);
    for (uint32_t d = 0; d < rank; ++d)
      blob.shape.push_back(static_cast<int>(read_u32(in, path)));
    uint32_t count = read_u32(in, path);
    blob.values.resize(count);
    if (!in.read(reinterpret_cast<char *>(blob.values.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
      throw DataError("truncated checkpoint: " + path);
    ckpt.blobs.push_back(std::move(blob));
  }
  return ckpt;
}

std::vector<CheckpointBlob> registry_blobs(const ParamRegistry &registry) {
  std::vector<CheckpointBlob> blobs;
  for (const auto &p : registry.params())
    blobs.push_back({p.name, p.tensor.shape(), p.tensor.values(), true});
  for (const auto &[name, values] : registry.buffers())
    blobs.push_back({name, {static_cast<int>(values.size())}, values, false});
  return blobs;
}

void restore_registry(ParamRegistry *registry, const std::vector<CheckpointBlob> &blobs) {
  std::map<std::string, const CheckpointBlob *> by_name;
  for (const auto &b : blobs) by_name[b.name] = &b;
  for (auto &p : registry->params()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw DataError("checkpoint missing parameter: " + p.name);
    if (static_cast<int64_t>(it->second->values.size()) != p.tensor.size())
      throw DataError("checkpoint parameter size mismatch: " + p.name);
    p.tensor.values() = it->second->values;
  }
  for (auto &[name, values] : registry->buffers()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint missing buffer: " + name);
    if (it->second->values.size() != values.size())
      throw DataError("checkpoint buffer size mismatch: " + name);
    values = it->second->values;
  }
}

}  // namespace nn
}  // namespace turntake
