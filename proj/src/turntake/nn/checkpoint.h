// turntake/nn/checkpoint.h

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

#ifndef TURNTAKE_NN_CHECKPOINT_H_
#define TURNTAKE_NN_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "turntake/nn/tensor.h"

namespace turntake {
namespace nn {

// Single-file checkpoint: magic "TTCK", u32 version, three length-prefixed
// JSON strings (config, vocabulary, bucket spec), then named blobs of raw
// little-endian 64-bit values for every parameter and buffer.
struct CheckpointBlob {
  std::string name;
  Shape shape;
  std::vector<double> values;
  bool trainable = true;
};

struct Checkpoint {
  std::string config_json;
  std::string vocab_json;
  std::string buckets_json;
  std::vector<CheckpointBlob> blobs;
};

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

// collect all params + buffers of a registry as blobs
std::vector<CheckpointBlob> registry_blobs(const ParamRegistry &registry);
// write blob values back into a registry with identical structure
void restore_registry(ParamRegistry *registry, const std::vector<CheckpointBlob> &blobs);

}  // namespace nn
}  // namespace turntake

#endif  // TURNTAKE_NN_CHECKPOINT_H_
