// turntake/nn/tensor.cc

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

#include "turntake/nn/tensor.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace turntake {
namespace nn {

namespace {

std::atomic<uint64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;

}  // namespace

int64_t shape_numel(const Shape &shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape &shape) {
  std::ostringstream ss;
  ss << "(";
  for (size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
  ss << ")";
  return ss.str();
}

Tensor Tensor::zeros(const Shape &shape, bool requires_grad) {
  return constant(shape, 0.0, requires_grad);
}

Tensor Tensor::constant(const Shape &shape, double value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->v.assign(static_cast<size_t>(shape_numel(shape)), value);
  node->requires_grad = requires_grad && g_grad_enabled;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(node));
}

Tensor Tensor::from_values(const Shape &shape, std::vector<double> values,
                           bool requires_grad) {
  if (static_cast<int64_t>(values.size()) != shape_numel(shape))
    throw std::invalid_argument("from_values: " + std::to_string(values.size()) +
                                " values for shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->v = std::move(values);
  node->requires_grad = requires_grad && g_grad_enabled;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() on non-scalar tensor");
  return node_->v[0];
}

void backward(const Tensor &loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  Node *root = loss.node().get();
  if (!root->requires_grad) return;  // nothing depends on parameters

  // iterative DFS over ancestors; ids give reverse-topological order
  static std::atomic<uint64_t> g_epoch{0};
  uint64_t epoch = g_epoch.fetch_add(1, std::memory_order_relaxed) + 1;
  std::vector<Node *> order;
  std::vector<Node *> stack{root};
  root->visit_epoch = epoch;
  while (!stack.empty()) {
    Node *n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto &p : n->parents) {
      if (p->requires_grad && p->visit_epoch != epoch) {
        p->visit_epoch = epoch;
        stack.push_back(p.get());
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node *a, const Node *b) { return a->id > b->id; });

  root->ensure_grad();
  root->g[0] += 1.0;
  for (Node *n : order)
    if (n->backward_fn && n->g.size() == n->v.size()) n->backward_fn(n);
}

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

bool grad_enabled() { return g_grad_enabled; }

void check_finite(const double *p, int64_t n, const char *what) {
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i]))
      throw NumericError(std::string(what) + ": non-finite value at index " +
                         std::to_string(i));
  }
}

Tensor ParamRegistry::add(const std::string &name, const Shape &shape,
                          const std::function<double()> &init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  std::vector<double> values(static_cast<size_t>(shape_numel(shape)));
  for (double &v : values) v = init();
  Tensor t = Tensor::from_values(shape, std::move(values), /*requires_grad=*/true);
  // parameters must require grad even when created inside a NoGrad scope
  t.node()->requires_grad = true;
  index_[name] = params_.size();
  params_.push_back({name, t});
  return t;
}

std::vector<double> *ParamRegistry::add_buffer(const std::string &name, size_t size,
                                               double fill) {
  if (buffer_index_.count(name)) throw std::invalid_argument("duplicate buffer: " + name);
  buffer_index_[name] = buffers_.size();
  buffers_.emplace_back(name, std::vector<double>(size, fill));
  return &buffers_.back().second;
}

Tensor ParamRegistry::find(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("no such parameter: " + name);
  return params_[it->second].tensor;
}

int64_t ParamRegistry::total_params() const {
  int64_t n = 0;
  for (const auto &p : params_) n += p.tensor.size();
  return n;
}

void ParamRegistry::zero_grads() {
  for (auto &p : params_) {
    auto &g = p.tensor.grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

}  // namespace nn
}  // namespace turntake
