// turntake/nn/tensor.h

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

#ifndef TURNTAKE_NN_TENSOR_H_
#define TURNTAKE_NN_TENSOR_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "turntake/common.h"

namespace turntake {
namespace nn {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape &shape);
std::string shape_str(const Shape &shape);

// One vertex of the recorded computation graph. Values are 64-bit floats in
// row-major order. Children are created after their parents, so node ids give
// a topological order for free.
struct Node {
  Shape shape;
  std::vector<double> v;
  std::vector<double> g;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node *)> backward_fn;
  uint64_t id = 0;
  uint64_t visit_epoch = 0;  // scratch for backward traversal

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
  }
};

// Value-semantics handle onto a graph node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape &shape, bool requires_grad = false);
  static Tensor constant(const Shape &shape, double value, bool requires_grad = false);
  static Tensor from_values(const Shape &shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  int64_t size() const { return static_cast<int64_t>(node_->v.size()); }
  std::vector<double> &values() { return node_->v; }
  const std::vector<double> &values() const { return node_->v; }
  std::vector<double> &grad() {
    node_->ensure_grad();
    return node_->g;
  }
  bool has_grad() const { return node_->g.size() == node_->v.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  double item() const;

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Fills grads of every requires_grad ancestor of `loss` (a scalar). Repeated
// calls without zeroing accumulate. Deterministic: nodes run in reverse
// creation order.
void backward(const Tensor &loss);

// Disables graph recording (and requires_grad on new nodes) while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool saved_;
};

bool grad_enabled();

// Throws NumericError when any of the n values is NaN/Inf.
void check_finite(const double *p, int64_t n, const char *what);

// Named trainable tensors plus non-trainable buffers (batch-norm statistics).
struct Parameter {
  std::string name;
  Tensor tensor;
};

class ParamRegistry {
 public:
  Tensor add(const std::string &name, const Shape &shape,
             const std::function<double()> &init);
  // raw named buffer, serialized with checkpoints but not optimized;
  // the returned pointer stays valid for the registry's lifetime
  std::vector<double> *add_buffer(const std::string &name, size_t size, double fill);

  std::vector<Parameter> &params() { return params_; }
  const std::vector<Parameter> &params() const { return params_; }
  std::deque<std::pair<std::string, std::vector<double>>> &buffers() { return buffers_; }
  const std::deque<std::pair<std::string, std::vector<double>>> &buffers() const {
    return buffers_;
  }

  Tensor find(const std::string &name) const;
  int64_t total_params() const;
  void zero_grads();

 private:
  std::vector<Parameter> params_;
  std::deque<std::pair<std::string, std::vector<double>>> buffers_;
  std::map<std::string, size_t> index_;
  std::map<std::string, size_t> buffer_index_;
};

}  // namespace nn
}  // namespace turntake

#endif  // TURNTAKE_NN_TENSOR_H_
