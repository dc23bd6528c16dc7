// turntake/nn/gradcheck.h

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

#ifndef TURNTAKE_NN_GRADCHECK_H_
#define TURNTAKE_NN_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "turntake/nn/tensor.h"

namespace turntake {
namespace nn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

// Central finite differences against the recorded backward pass, over a
// seeded random subsample of at least min_coords parameter coordinates (all
// coordinates when there are fewer). The closure must be deterministic: it is
// evaluated twice up front and must agree bitwise, otherwise NumericError.
// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult gradient_check(const std::function<Tensor()> &forward,
                               const std::vector<Tensor> &params, double h,
                               int min_coords = 200, uint64_t seed = 0);

}  // namespace nn
}  // namespace turntake

#endif  // TURNTAKE_NN_GRADCHECK_H_
