// turntake/nn/adam.h

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

#ifndef TURNTAKE_NN_ADAM_H_
#define TURNTAKE_NN_ADAM_H_

#include <cstdint>
#include <vector>

#include "turntake/nn/tensor.h"

namespace turntake {
namespace nn {

// Standard Adam with bias correction. adam_step consumes the accumulated
// grads and zeroes them afterwards.
class AdamState {
 public:
  AdamState(ParamRegistry *registry, double lr = 1e-3, double beta1 = 0.9,
            double beta2 = 0.999, double eps = 1e-8);

  void step();

  int64_t step_count() const { return step_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  ParamRegistry *registry_;
  double lr_, beta1_, beta2_, eps_;
  int64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace nn
}  // namespace turntake

#endif  // TURNTAKE_NN_ADAM_H_
