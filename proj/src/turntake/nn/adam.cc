// turntake/nn/adam.cc

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

#include "turntake/nn/adam.h"

#include <algorithm>
#include <cmath>

namespace turntake {
namespace nn {

AdamState::AdamState(ParamRegistry *registry, double lr, double beta1, double beta2,
                     double eps)
    : registry_(registry), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto &p : registry->params()) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

void AdamState::step() {
  auto &params = registry_->params();
  if (params.size() != m_.size())
    throw std::invalid_argument("adam_step: registry changed since construction");
  for (auto &p : params) {
    if (!p.tensor.has_grad())
      throw NumericError("adam_step: missing grads for parameter " + p.name);
  }
  ++step_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto &theta = params[i].tensor.values();
    auto &g = params[i].tensor.grad();
    auto &m = m_[i];
    auto &v = v_[i];
    for (size_t j = 0; j < theta.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      double m_hat = m[j] / bc1;
      double v_hat = v[j] / bc2;
      theta[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
    std::fill(g.begin(), g.end(), 0.0);
  }
}

}  // namespace nn
}  // namespace turntake
