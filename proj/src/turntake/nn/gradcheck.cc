// turntake/nn/gradcheck.cc

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

#include "turntake/nn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace turntake {
namespace nn {

GradCheckResult gradient_check(const std::function<Tensor()> &forward,
                               const std::vector<Tensor> &params, double h,
                               int min_coords, uint64_t seed) {
  if (h <= 0.0) throw std::invalid_argument("gradient_check: h must be positive");
  if (params.empty()) throw std::invalid_argument("gradient_check: no parameters");

  // determinism probe: two evaluations at the same point must agree bitwise
  double f0 = forward().item();
  double f1 = forward().item();
  if (std::memcmp(&f0, &f1, sizeof(double)) != 0)
    throw NumericError("gradient_check: non-deterministic closure (two forward passes disagree)");

  // analytic grads from one recorded backward
  std::vector<std::vector<double>> analytic(params.size());
  for (auto p : params) {
    auto &g = p.grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
  {
    Tensor loss = forward();
    backward(loss);
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    analytic[i] = p.has_grad() ? p.node()->g : std::vector<double>(p.size(), 0.0);
  }

  // choose coordinates: everything when small, else a seeded subsample
  int64_t total = 0;
  for (const auto &p : params) total += p.size();
  std::vector<std::pair<size_t, int64_t>> coords;
  if (total <= min_coords) {
    for (size_t i = 0; i < params.size(); ++i)
      for (int64_t j = 0; j < params[i].size(); ++j) coords.emplace_back(i, j);
  } else {
    Rng rng(seed ^ 0x6772616463686bULL);
    for (int k = 0; k < min_coords; ++k) {
      int64_t flat = rng.uniform_int(0, total - 1);
      for (size_t i = 0; i < params.size(); ++i) {
        if (flat < params[i].size()) {
          coords.emplace_back(i, flat);
          break;
        }
        flat -= params[i].size();
      }
    }
  }

  GradCheckResult result;
  result.coords_checked = static_cast<int>(coords.size());
  for (const auto &[pi, j] : coords) {
    Tensor p = params[pi];
    double saved = p.values()[j];
    double fp, fm;
    {
      NoGradGuard guard;
      p.values()[j] = saved + h;
      fp = forward().item();
      p.values()[j] = saved - h;
      fm = forward().item();
      p.values()[j] = saved;
    }
    double numeric = (fp - fm) / (2.0 * h);
    double a = analytic[pi][j];
    double rel = std::fabs(a - numeric) /
                 std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    result.max_rel_err = std::max(result.max_rel_err, rel);
  }
  return result;
}

}  // namespace nn
}  // namespace turntake
