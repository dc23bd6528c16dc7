// turntake/nn/ops.cc

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

#include "turntake/nn/ops.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

#include "turntake/nn/kernels.h"

namespace turntake {
namespace nn {

namespace {

// Builds the output node. Records parents + backward only when grad mode is
// on and some parent needs gradients.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(Node *)> backward_fn, const char *what) {
  check_finite(values.data(), static_cast<int64_t>(values.size()), what);
  Tensor out = Tensor::from_values(std::move(shape), std::move(values));
  bool needs = false;
  if (grad_enabled()) {
    for (const auto &p : parents)
      if (p.defined() && p.requires_grad()) needs = true;
  }
  if (needs) {
    Node *n = out.node().get();
    n->requires_grad = true;
    for (auto &p : parents)
      if (p.defined()) n->parents.push_back(p.node());
    n->backward_fn = std::move(backward_fn);
  }
  return out;
}

void require_defined(const Tensor &t, const char *what) {
  if (!t.defined()) throw std::invalid_argument(std::string(what) + ": undefined tensor");
}

// ---- broadcast helpers -----------------------------------------------------

Shape broadcast_shape(const Shape &a, const Shape &b, const char *what) {
  size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (size_t i = 0; i < rank; ++i) {
    int da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    int db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument(std::string(what) + ": cannot broadcast " +
                                  shape_str(a) + " with " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// row-major strides with 0 on broadcast dims, padded to `rank`
std::vector<int64_t> broadcast_strides(const Shape &s, size_t rank, const Shape &out) {
  std::vector<int64_t> strides(rank, 0);
  int64_t acc = 1;
  for (size_t i = 0; i < s.size(); ++i) {
    size_t src = s.size() - 1 - i;
    size_t dst = rank - 1 - i;
    strides[dst] = (s[src] == 1 && out[dst] != 1) ? 0 : acc;
    acc *= s[src];
  }
  return strides;
}

enum class BinOp { kAdd, kSub, kMul };

Tensor binary_op(const Tensor &a, const Tensor &b, BinOp op, const char *what) {
  require_defined(a, what);
  require_defined(b, what);
  const Shape &sa = a.shape(), &sb = b.shape();
  Shape so = broadcast_shape(sa, sb, what);
  size_t rank = so.size();
  int64_t n = shape_numel(so);
  std::vector<double> out(static_cast<size_t>(n));

  auto apply = [op](double x, double y) {
    switch (op) {
      case BinOp::kAdd: return x + y;
      case BinOp::kSub: return x - y;
      default: return x * y;
    }
  };

  const auto &va = a.values();
  const auto &vb = b.values();
  if (sa == sb) {
    for (int64_t i = 0; i < n; ++i) out[i] = apply(va[i], vb[i]);
  } else if (sa == so && sb.size() == 1 && rank == 2 && sb[0] == so[1]) {
    // common case: matrix (R x C) op row vector (C)
    int64_t rows = so[0], cols = so[1];
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c)
        out[r * cols + c] = apply(va[r * cols + c], vb[c]);
  } else {
    auto stra = broadcast_strides(sa, rank, so);
    auto strb = broadcast_strides(sb, rank, so);
    std::vector<int64_t> idx(rank, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t i = 0; i < n; ++i) {
      out[i] = apply(va[ia], vb[ib]);
      for (int64_t d = static_cast<int64_t>(rank) - 1; d >= 0; --d) {
        ++idx[d];
        ia += stra[d];
        ib += strb[d];
        if (idx[d] < so[d]) break;
        ia -= stra[d] * so[d];
        ib -= strb[d] * so[d];
        idx[d] = 0;
      }
    }
  }

  // backward: reduce the incoming gradient over broadcast dims per input
  auto reduce_into = [rank, so](Node *self, const Tensor &src, bool negate,
                                bool multiply_other, const Tensor &other) {
    if (!src.requires_grad()) return;
    Node *p = src.node().get();
    p->ensure_grad();
    auto strp = broadcast_strides(src.shape(), rank, so);
    auto stro = broadcast_strides(other.defined() ? other.shape() : Shape{}, rank, so);
    const double *ov = multiply_other ? other.values().data() : nullptr;
    std::vector<int64_t> idx(rank, 0);
    int64_t ip = 0, io = 0;
    int64_t n2 = static_cast<int64_t>(self->g.size());
    for (int64_t i = 0; i < n2; ++i) {
      double g = self->g[i];
      if (multiply_other) g *= ov[io];
      p->g[ip] += negate ? -g : g;
      for (int64_t d = static_cast<int64_t>(rank) - 1; d >= 0; --d) {
        ++idx[d];
        ip += strp[d];
        io += stro[d];
        if (idx[d] < so[d]) break;
        ip -= strp[d] * so[d];
        io -= stro[d] * so[d];
        idx[d] = 0;
      }
    }
  };

  return make_result(
      so, std::move(out), {a, b},
      [a, b, op, reduce_into](Node *self) {
        switch (op) {
          case BinOp::kAdd:
            reduce_into(self, a, false, false, Tensor());
            reduce_into(self, b, false, false, Tensor());
            break;
          case BinOp::kSub:
            reduce_into(self, a, false, false, Tensor());
            reduce_into(self, b, true, false, Tensor());
            break;
          case BinOp::kMul:
            reduce_into(self, a, false, true, b);
            reduce_into(self, b, false, true, a);
            break;
        }
      },
      what);
}

// elementwise unary with y and dy/dx computed from (x, y)
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor &x, Fwd fwd, Bwd dydx, const char *what) {
  require_defined(x, what);
  const auto &vx = x.values();
  std::vector<double> out(vx.size());
  for (size_t i = 0; i < vx.size(); ++i) out[i] = fwd(vx[i]);
  return make_result(
      x.shape(), std::move(out), {x},
      [x, dydx](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        for (size_t i = 0; i < self->g.size(); ++i)
          p->g[i] += self->g[i] * dydx(p->v[i], self->v[i]);
      },
      what);
}

}  // namespace

Tensor matmul(const Tensor &a, const Tensor &b, bool trans_a, bool trans_b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw std::invalid_argument("matmul: operands must be 2-D, got " +
                                shape_str(a.shape()) + " and " + shape_str(b.shape()));
  int m = trans_a ? a.shape()[1] : a.shape()[0];
  int ka = trans_a ? a.shape()[0] : a.shape()[1];
  int kb = trans_b ? b.shape()[1] : b.shape()[0];
  int n = trans_b ? b.shape()[0] : b.shape()[1];
  if (ka != kb)
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                shape_str(a.shape()) + (trans_a ? "^T" : "") + " x " +
                                shape_str(b.shape()) + (trans_b ? "^T" : ""));
  std::vector<double> out(static_cast<size_t>(m) * n);
  kernels::matmul(a.values().data(), b.values().data(), out.data(), m, n, ka,
                  trans_a, trans_b, false);

  return make_result(
      {m, n}, std::move(out), {a, b},
      [a, b, trans_a, trans_b, m, n, ka](Node *self) {
        const double *gc = self->g.data();
        if (a.requires_grad()) {
          Node *pa = a.node().get();
          pa->ensure_grad();
          const double *vb = b.values().data();
          if (!trans_a && !trans_b)  // dA = dC * B^T
            kernels::matmul(gc, vb, pa->g.data(), m, ka, n, false, true, true);
          else if (!trans_a && trans_b)  // dA = dC * B
            kernels::matmul(gc, vb, pa->g.data(), m, ka, n, false, false, true);
          else if (trans_a && !trans_b)  // dA_stored = B * dC^T
            kernels::matmul(vb, gc, pa->g.data(), ka, m, n, false, true, true);
          else  // dA_stored = B_stored^T * dC^T
            kernels::matmul(vb, gc, pa->g.data(), ka, m, n, true, true, true);
        }
        if (b.requires_grad()) {
          Node *pb = b.node().get();
          pb->ensure_grad();
          const double *va = a.values().data();
          if (!trans_a && !trans_b)  // dB = A^T * dC
            kernels::matmul(va, gc, pb->g.data(), ka, n, m, true, false, true);
          else if (!trans_a && trans_b)  // dB_stored = dC^T * A
            kernels::matmul(gc, va, pb->g.data(), n, ka, m, true, false, true);
          else if (trans_a && !trans_b)  // dB = A_stored * dC
            kernels::matmul(va, gc, pb->g.data(), ka, n, m, false, false, true);
          else  // dB_stored = dC^T * A_stored^T
            kernels::matmul(gc, va, pb->g.data(), n, ka, m, true, true, true);
        }
      },
      "matmul");
}

Tensor add(const Tensor &a, const Tensor &b) { return binary_op(a, b, BinOp::kAdd, "add"); }
Tensor sub(const Tensor &a, const Tensor &b) { return binary_op(a, b, BinOp::kSub, "sub"); }
Tensor mul(const Tensor &a, const Tensor &b) { return binary_op(a, b, BinOp::kMul, "mul"); }

Tensor scale(const Tensor &a, double c) {
  return unary_op(
      a, [c](double x) { return c * x; },
      [c](double, double) { return c; }, "scale");
}

Tensor add_scalar(const Tensor &a, double c) {
  return unary_op(
      a, [c](double x) { return x + c; },
      [](double, double) { return 1.0; }, "add_scalar");
}

Tensor add_n(const std::vector<Tensor> &xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: empty input list");
  for (const auto &x : xs) {
    require_defined(x, "add_n");
    if (x.shape() != xs[0].shape())
      throw std::invalid_argument("add_n: mismatched shapes");
  }
  std::vector<double> out(xs[0].values());
  for (size_t i = 1; i < xs.size(); ++i) {
    const auto &v = xs[i].values();
    for (size_t j = 0; j < out.size(); ++j) out[j] += v[j];
  }
  return make_result(
      xs[0].shape(), std::move(out), xs,
      [xs](Node *self) {
        for (const auto &x : xs) {
          if (!x.requires_grad()) continue;
          Node *p = x.node().get();
          p->ensure_grad();
          for (size_t i = 0; i < self->g.size(); ++i) p->g[i] += self->g[i];
        }
      },
      "add_n");
}

Tensor relu(const Tensor &x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double vx, double) { return vx > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor tanh_op(const Tensor &x) {
  return unary_op(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Tensor sigmoid(const Tensor &x) {
  return unary_op(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor log_op(const Tensor &x) {
  return unary_op(
      x, [](double v) { return std::log(v); },
      [](double vx, double) { return 1.0 / vx; }, "log");
}

Tensor clamp(const Tensor &x, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clamp: lo must be < hi");
  return unary_op(
      x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double vx, double) { return (vx > lo && vx < hi) ? 1.0 : 0.0; },
      "clamp");
}

Tensor signed_sqrt(const Tensor &x) {
  return unary_op(
      x,
      [](double v) { return v >= 0.0 ? std::sqrt(v) : -std::sqrt(-v); },
      [](double vx, double) { return 0.5 / (std::sqrt(std::fabs(vx)) + 1e-8); },
      "signed_sqrt");
}

Tensor softmax(const Tensor &x, int axis) {
  require_defined(x, "softmax");
  int rank = static_cast<int>(x.shape().size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw std::invalid_argument("softmax: bad axis");
  int64_t len = x.shape()[axis];
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (int i = axis + 1; i < rank; ++i) inner *= x.shape()[i];

  const auto &vx = x.values();
  std::vector<double> out(vx.size());
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      int64_t base = o * len * inner + in;
      double mx = -INFINITY;
      for (int64_t l = 0; l < len; ++l) mx = std::max(mx, vx[base + l * inner]);
      double sum = 0.0;
      for (int64_t l = 0; l < len; ++l) {
        double e = std::exp(vx[base + l * inner] - mx);
        out[base + l * inner] = e;
        sum += e;
      }
      for (int64_t l = 0; l < len; ++l) out[base + l * inner] /= sum;
    }
  }
  return make_result(
      x.shape(), std::move(out), {x},
      [x, outer, inner, len](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        const auto &y = self->v;
        const auto &g = self->g;
        for (int64_t o = 0; o < outer; ++o) {
          for (int64_t in = 0; in < inner; ++in) {
            int64_t base = o * len * inner + in;
            double dot = 0.0;
            for (int64_t l = 0; l < len; ++l)
              dot += g[base + l * inner] * y[base + l * inner];
            for (int64_t l = 0; l < len; ++l) {
              int64_t i = base + l * inner;
              p->g[i] += y[i] * (g[i] - dot);
            }
          }
        }
      },
      "softmax");
}

Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps) {
  require_defined(x, "layer_norm");
  require_defined(gain, "layer_norm");
  require_defined(bias, "layer_norm");
  if (x.shape().empty()) throw std::invalid_argument("layer_norm: scalar input");
  int64_t d = x.shape().back();
  if (gain.size() != d || bias.size() != d)
    throw std::invalid_argument("layer_norm: gain/bias must have last-axis size");
  int64_t rows = x.size() / d;

  const auto &vx = x.values();
  const auto &vg = gain.values();
  const auto &vb = bias.values();
  std::vector<double> out(vx.size());
  auto invstd = std::make_shared<std::vector<double>>(rows);
  auto means = std::make_shared<std::vector<double>>(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const double *row = vx.data() + r * d;
    double mean = 0.0;
    for (int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= d;
    double var = 0.0;
    for (int64_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= d;
    double inv = 1.0 / std::sqrt(var + eps);
    (*invstd)[r] = inv;
    (*means)[r] = mean;
    for (int64_t j = 0; j < d; ++j)
      out[r * d + j] = (row[j] - mean) * inv * vg[j] + vb[j];
  }
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [x, gain, bias, invstd, means, d, rows](Node *self) {
        Node *px = x.requires_grad() ? x.node().get() : nullptr;
        Node *pg = gain.requires_grad() ? gain.node().get() : nullptr;
        Node *pb = bias.requires_grad() ? bias.node().get() : nullptr;
        if (px) px->ensure_grad();
        if (pg) pg->ensure_grad();
        if (pb) pb->ensure_grad();
        const auto &vx = x.values();
        const auto &vg = gain.values();
        for (int64_t r = 0; r < rows; ++r) {
          double inv = (*invstd)[r], mean = (*means)[r];
          const double *grow = self->g.data() + r * d;
          const double *xrow = vx.data() + r * d;
          double s1 = 0.0, s2 = 0.0;
          for (int64_t j = 0; j < d; ++j) {
            double xh = (xrow[j] - mean) * inv;
            double dxh = grow[j] * vg[j];
            s1 += dxh;
            s2 += dxh * xh;
            if (pg) pg->g[j] += grow[j] * xh;
            if (pb) pb->g[j] += grow[j];
          }
          if (px) {
            for (int64_t j = 0; j < d; ++j) {
              double xh = (xrow[j] - mean) * inv;
              double dxh = grow[j] * vg[j];
              px->g[r * d + j] += inv * (dxh - s1 / d - xh * s2 / d);
            }
          }
        }
      },
      "layer_norm");
}

Tensor concat(const std::vector<Tensor> &xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: empty input list");
  for (const auto &x : xs) require_defined(x, "concat");
  int rank = static_cast<int>(xs[0].shape().size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: bad axis");
  Shape out_shape = xs[0].shape();
  for (size_t i = 1; i < xs.size(); ++i) {
    const Shape &s = xs[i].shape();
    if (static_cast<int>(s.size()) != rank)
      throw std::invalid_argument("concat: rank mismatch");
    for (int dch = 0; dch < rank; ++dch)
      if (dch != axis && s[dch] != out_shape[dch])
        throw std::invalid_argument("concat: shapes differ off-axis");
    out_shape[axis] += s[axis];
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[i];
  for (int i = axis + 1; i < rank; ++i) inner *= out_shape[i];

  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  int64_t axis_total = out_shape[axis];
  int64_t offset = 0;
  for (const auto &x : xs) {
    int64_t ax = x.shape()[axis];
    const auto &vx = x.values();
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + (o * axis_total + offset) * inner,
                  vx.data() + o * ax * inner, sizeof(double) * ax * inner);
    offset += ax;
  }
  return make_result(
      out_shape, std::move(out), xs,
      [xs, outer, inner, axis_total, axis](Node *self) {
        int64_t offset = 0;
        for (const auto &x : xs) {
          int64_t ax = x.shape()[axis];
          if (x.requires_grad()) {
            Node *p = x.node().get();
            p->ensure_grad();
            for (int64_t o = 0; o < outer; ++o) {
              const double *src = self->g.data() + (o * axis_total + offset) * inner;
              double *dst = p->g.data() + o * ax * inner;
              for (int64_t i = 0; i < ax * inner; ++i) dst[i] += src[i];
            }
          }
          offset += ax;
        }
      },
      "concat");
}

Tensor slice(const Tensor &x, int axis, int start, int end) {
  require_defined(x, "slice");
  int rank = static_cast<int>(x.shape().size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw std::invalid_argument("slice: bad axis");
  if (start < 0 || end > x.shape()[axis] || start >= end)
    throw std::invalid_argument("slice: bad range [" + std::to_string(start) + "," +
                                std::to_string(end) + ") on axis of size " +
                                std::to_string(x.shape()[axis]));
  Shape out_shape = x.shape();
  out_shape[axis] = end - start;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (int i = axis + 1; i < rank; ++i) inner *= x.shape()[i];
  int64_t ax_in = x.shape()[axis], ax_out = end - start;

  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  const auto &vx = x.values();
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(out.data() + o * ax_out * inner,
                vx.data() + (o * ax_in + start) * inner, sizeof(double) * ax_out * inner);

  return make_result(
      out_shape, std::move(out), {x},
      [x, outer, inner, ax_in, ax_out, start](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
          const double *src = self->g.data() + o * ax_out * inner;
          double *dst = p->g.data() + (o * ax_in + start) * inner;
          for (int64_t i = 0; i < ax_out * inner; ++i) dst[i] += src[i];
        }
      },
      "slice");
}

Tensor reshape(const Tensor &x, const Shape &new_shape) {
  require_defined(x, "reshape");
  if (shape_numel(new_shape) != x.size())
    throw std::invalid_argument("reshape: size mismatch " + shape_str(x.shape()) +
                                " -> " + shape_str(new_shape));
  std::vector<double> out(x.values());
  return make_result(
      new_shape, std::move(out), {x},
      [x](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        for (size_t i = 0; i < self->g.size(); ++i) p->g[i] += self->g[i];
      },
      "reshape");
}

Tensor sum_all(const Tensor &x) {
  require_defined(x, "sum_all");
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result(
      {}, {s}, {x},
      [x](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        double g = self->g[0];
        for (auto &gv : p->g) gv += g;
      },
      "sum_all");
}

Tensor mean_all(const Tensor &x) {
  require_defined(x, "mean_all");
  if (x.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v;
  double inv = 1.0 / static_cast<double>(x.size());
  return make_result(
      {}, {s * inv}, {x},
      [x, inv](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        double g = self->g[0] * inv;
        for (auto &gv : p->g) gv += g;
      },
      "mean_all");
}

Tensor dropout(const Tensor &x, double p, uint64_t seed, bool train) {
  require_defined(x, "dropout");
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("dropout: p must be in [0, 1), got " + std::to_string(p));
  if (!train || p == 0.0) return x;

  Rng rng(seed);
  double inv_keep = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<uint8_t>>(x.size());
  const auto &vx = x.values();
  std::vector<double> out(vx.size());
  for (size_t i = 0; i < vx.size(); ++i) {
    bool keep = rng.uniform() >= p;
    (*mask)[i] = keep;
    out[i] = keep ? vx[i] * inv_keep : 0.0;
  }
  return make_result(
      x.shape(), std::move(out), {x},
      [x, mask, inv_keep](Node *self) {
        if (!x.requires_grad()) return;
        Node *p2 = x.node().get();
        p2->ensure_grad();
        for (size_t i = 0; i < self->g.size(); ++i)
          if ((*mask)[i]) p2->g[i] += self->g[i] * inv_keep;
      },
      "dropout");
}

Tensor embedding_lookup(const Tensor &table, const std::vector<int> &ids) {
  require_defined(table, "embedding_lookup");
  if (table.shape().size() != 2)
    throw std::invalid_argument("embedding_lookup: table must be 2-D");
  int v = table.shape()[0], e = table.shape()[1];
  for (int id : ids)
    if (id < 0 || id >= v)
      throw std::invalid_argument("embedding_lookup: id " + std::to_string(id) +
                                  " out of range [0," + std::to_string(v) + ")");
  int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<size_t>(n) * e);
  const auto &vt = table.values();
  for (int i = 0; i < n; ++i)
    std::memcpy(out.data() + static_cast<int64_t>(i) * e,
                vt.data() + static_cast<int64_t>(ids[i]) * e, sizeof(double) * e);
  return make_result(
      {n, e}, std::move(out), {table},
      [table, ids, e](Node *self) {
        if (!table.requires_grad()) return;
        Node *p = table.node().get();
        p->ensure_grad();
        for (size_t i = 0; i < ids.size(); ++i) {
          const double *src = self->g.data() + i * e;
          double *dst = p->g.data() + static_cast<int64_t>(ids[i]) * e;
          for (int j = 0; j < e; ++j) dst[j] += src[j];
        }
      },
      "embedding_lookup");
}

namespace {

struct ConvDims {
  int b, c, h, w, oc, kh, kw, sh, sw;
  int out_h, out_w, pad_top, pad_left;
  int64_t pos() const { return static_cast<int64_t>(out_h) * out_w; }
  int ckk() const { return c * kh * kw; }
};

ConvDims conv_dims(const Tensor &x, const Tensor &weight, int sh, int sw) {
  if (x.shape().size() != 4) throw std::invalid_argument("conv2d: input must be NCHW");
  if (weight.shape().size() != 4)
    throw std::invalid_argument("conv2d: weight must be (OC,C,kh,kw)");
  if (sh < 1 || sw < 1) throw std::invalid_argument("conv2d: strides must be >= 1");
  ConvDims d;
  d.b = x.shape()[0];
  d.c = x.shape()[1];
  d.h = x.shape()[2];
  d.w = x.shape()[3];
  d.oc = weight.shape()[0];
  d.kh = weight.shape()[2];
  d.kw = weight.shape()[3];
  d.sh = sh;
  d.sw = sw;
  if (weight.shape()[1] != d.c)
    throw std::invalid_argument("conv2d: weight channels disagree with input");
  d.out_h = (d.h + sh - 1) / sh;
  d.out_w = (d.w + sw - 1) / sw;
  int pad_h = std::max((d.out_h - 1) * sh + d.kh - d.h, 0);
  int pad_w = std::max((d.out_w - 1) * sw + d.kw - d.w, 0);
  d.pad_top = pad_h / 2;
  d.pad_left = pad_w / 2;
  return d;
}

}  // namespace

Tensor conv2d(const Tensor &x, const Tensor &weight, const Tensor &bias,
              int stride_h, int stride_w) {
  require_defined(x, "conv2d");
  require_defined(weight, "conv2d");
  ConvDims d = conv_dims(x, weight, stride_h, stride_w);
  if (bias.defined() && bias.size() != d.oc)
    throw std::invalid_argument("conv2d: bias size must equal output channels");

  int64_t pos = d.pos();
  int ckk = d.ckk();
  std::vector<double> out(static_cast<size_t>(d.b) * d.oc * pos);
  std::vector<double> cols(static_cast<size_t>(pos) * ckk);
  const double *vx = x.values().data();
  const double *vw = weight.values().data();
  for (int bi = 0; bi < d.b; ++bi) {
    kernels::im2col(vx + static_cast<int64_t>(bi) * d.c * d.h * d.w, d.c, d.h, d.w,
                    d.kh, d.kw, d.sh, d.sw, d.out_h, d.out_w, d.pad_top, d.pad_left,
                    cols.data());
    // out[bi] (OC x pos) = W (OC x ckk) * cols^T
    kernels::matmul(vw, cols.data(), out.data() + static_cast<int64_t>(bi) * d.oc * pos,
                    d.oc, static_cast<int>(pos), ckk, false, true, false);
  }
  if (bias.defined()) {
    const auto &vb = bias.values();
    for (int bi = 0; bi < d.b; ++bi)
      for (int oc = 0; oc < d.oc; ++oc) {
        double bv = vb[oc];
        double *row = out.data() + (static_cast<int64_t>(bi) * d.oc + oc) * pos;
        for (int64_t i = 0; i < pos; ++i) row[i] += bv;
      }
  }

  return make_result(
      {d.b, d.oc, d.out_h, d.out_w}, std::move(out), {x, weight, bias},
      [x, weight, bias, d](Node *self) {
        int64_t pos = d.pos();
        int ckk = d.ckk();
        Node *px = x.requires_grad() ? x.node().get() : nullptr;
        Node *pw = weight.requires_grad() ? weight.node().get() : nullptr;
        Node *pb = bias.defined() && bias.requires_grad() ? bias.node().get() : nullptr;
        if (px) px->ensure_grad();
        if (pw) pw->ensure_grad();
        if (pb) pb->ensure_grad();
        const double *vx = x.values().data();
        const double *vw = weight.values().data();
        std::vector<double> cols(static_cast<size_t>(pos) * ckk);
        std::vector<double> dcols(static_cast<size_t>(pos) * ckk);
        for (int bi = 0; bi < d.b; ++bi) {
          const double *gout = self->g.data() + static_cast<int64_t>(bi) * d.oc * pos;
          if (px || pw) {
            kernels::im2col(vx + static_cast<int64_t>(bi) * d.c * d.h * d.w, d.c, d.h,
                            d.w, d.kh, d.kw, d.sh, d.sw, d.out_h, d.out_w, d.pad_top,
                            d.pad_left, cols.data());
          }
          if (pw) {
            // dW (OC x ckk) += dOut (OC x pos) * cols (pos x ckk)
            kernels::matmul(gout, cols.data(), pw->g.data(), d.oc, ckk,
                            static_cast<int>(pos), false, false, true);
          }
          if (px) {
            // dcols (pos x ckk) = dOut^T (pos x OC) * W (OC x ckk)
            kernels::matmul(gout, vw, dcols.data(), static_cast<int>(pos), ckk, d.oc,
                            true, false, false);
            kernels::col2im(dcols.data(), d.c, d.h, d.w, d.kh, d.kw, d.sh, d.sw,
                            d.out_h, d.out_w, d.pad_top, d.pad_left,
                            px->g.data() + static_cast<int64_t>(bi) * d.c * d.h * d.w);
          }
          if (pb) {
            for (int oc = 0; oc < d.oc; ++oc) {
              double s = 0.0;
              const double *row = gout + static_cast<int64_t>(oc) * pos;
              for (int64_t i = 0; i < pos; ++i) s += row[i];
              pb->g[oc] += s;
            }
          }
        }
      },
      "conv2d");
}

Tensor global_avg_pool(const Tensor &x) {
  require_defined(x, "global_avg_pool");
  if (x.shape().size() != 4)
    throw std::invalid_argument("global_avg_pool: input must be NCHW");
  int b = x.shape()[0], c = x.shape()[1];
  int64_t hw = static_cast<int64_t>(x.shape()[2]) * x.shape()[3];
  if (hw == 0) throw std::invalid_argument("global_avg_pool: empty spatial dims");
  std::vector<double> out(static_cast<size_t>(b) * c);
  const auto &vx = x.values();
  double inv = 1.0 / static_cast<double>(hw);
  for (int i = 0; i < b * c; ++i) {
    const double *plane = vx.data() + static_cast<int64_t>(i) * hw;
    double s = 0.0;
    for (int64_t j = 0; j < hw; ++j) s += plane[j];
    out[i] = s * inv;
  }
  return make_result(
      {b, c}, std::move(out), {x},
      [x, b, c, hw, inv](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        for (int i = 0; i < b * c; ++i) {
          double g = self->g[i] * inv;
          double *plane = p->g.data() + static_cast<int64_t>(i) * hw;
          for (int64_t j = 0; j < hw; ++j) plane[j] += g;
        }
      },
      "global_avg_pool");
}

Tensor batch_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                  std::vector<double> *running_mean, std::vector<double> *running_var,
                  bool train, double momentum, double eps) {
  require_defined(x, "batch_norm");
  require_defined(gamma, "batch_norm");
  require_defined(beta, "batch_norm");
  if (x.shape().size() != 4) throw std::invalid_argument("batch_norm: input must be NCHW");
  int b = x.shape()[0], c = x.shape()[1];
  int64_t hw = static_cast<int64_t>(x.shape()[2]) * x.shape()[3];
  if (gamma.size() != c || beta.size() != c)
    throw std::invalid_argument("batch_norm: gamma/beta must have C entries");
  if (!running_mean || !running_var ||
      running_mean->size() != static_cast<size_t>(c) ||
      running_var->size() != static_cast<size_t>(c))
    throw std::invalid_argument("batch_norm: running stats must have C entries");

  int64_t n_per_c = static_cast<int64_t>(b) * hw;
  const auto &vx = x.values();
  const auto &vgm = gamma.values();
  const auto &vbt = beta.values();

  auto mean = std::make_shared<std::vector<double>>(c, 0.0);
  auto inv = std::make_shared<std::vector<double>>(c, 0.0);
  if (train) {
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int bi = 0; bi < b; ++bi) {
        const double *plane = vx.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
        for (int64_t j = 0; j < hw; ++j) s += plane[j];
      }
      double m = s / static_cast<double>(n_per_c);
      double var = 0.0;
      for (int bi = 0; bi < b; ++bi) {
        const double *plane = vx.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
        for (int64_t j = 0; j < hw; ++j) var += (plane[j] - m) * (plane[j] - m);
      }
      var /= static_cast<double>(n_per_c);
      (*mean)[ch] = m;
      (*inv)[ch] = 1.0 / std::sqrt(var + eps);
      (*running_mean)[ch] = momentum * (*running_mean)[ch] + (1.0 - momentum) * m;
      (*running_var)[ch] = momentum * (*running_var)[ch] + (1.0 - momentum) * var;
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      (*mean)[ch] = (*running_mean)[ch];
      (*inv)[ch] = 1.0 / std::sqrt((*running_var)[ch] + eps);
    }
  }

  std::vector<double> out(vx.size());
  for (int bi = 0; bi < b; ++bi) {
    for (int ch = 0; ch < c; ++ch) {
      const double *src = vx.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
      double *dst = out.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
      double m = (*mean)[ch], iv = (*inv)[ch], g = vgm[ch], bt = vbt[ch];
      for (int64_t j = 0; j < hw; ++j) dst[j] = (src[j] - m) * iv * g + bt;
    }
  }

  return make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, mean, inv, b, c, hw, n_per_c, train](Node *self) {
        Node *px = x.requires_grad() ? x.node().get() : nullptr;
        Node *pg = gamma.requires_grad() ? gamma.node().get() : nullptr;
        Node *pb = beta.requires_grad() ? beta.node().get() : nullptr;
        if (px) px->ensure_grad();
        if (pg) pg->ensure_grad();
        if (pb) pb->ensure_grad();
        const auto &vx = x.values();
        const auto &vgm = gamma.values();
        for (int ch = 0; ch < c; ++ch) {
          double m = (*mean)[ch], iv = (*inv)[ch], gm = vgm[ch];
          double s1 = 0.0, s2 = 0.0, sg = 0.0, sgx = 0.0;
          for (int bi = 0; bi < b; ++bi) {
            const double *grow = self->g.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
            const double *xrow = vx.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
            for (int64_t j = 0; j < hw; ++j) {
              double xh = (xrow[j] - m) * iv;
              double dxh = grow[j] * gm;
              s1 += dxh;
              s2 += dxh * xh;
              sg += grow[j];
              sgx += grow[j] * xh;
            }
          }
          if (pg) pg->g[ch] += sgx;
          if (pb) pb->g[ch] += sg;
          if (px) {
            double n = static_cast<double>(n_per_c);
            for (int bi = 0; bi < b; ++bi) {
              const double *grow =
                  self->g.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
              const double *xrow = vx.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
              double *dxrow = px->g.data() + (static_cast<int64_t>(bi) * c + ch) * hw;
              for (int64_t j = 0; j < hw; ++j) {
                double xh = (xrow[j] - m) * iv;
                double dxh = grow[j] * gm;
                if (train)
                  dxrow[j] += iv * (dxh - s1 / n - xh * s2 / n);
                else
                  dxrow[j] += iv * dxh;
              }
            }
          }
        }
      },
      "batch_norm");
}

Tensor l2_normalize(const Tensor &x) {
  require_defined(x, "l2_normalize");
  if (x.shape().empty()) throw std::invalid_argument("l2_normalize: scalar input");
  int64_t d = x.shape().back();
  int64_t rows = x.size() / d;
  const auto &vx = x.values();
  auto norms = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(vx.size(), 0.0);
  for (int64_t r = 0; r < rows; ++r) {
    double norm_sq = 0.0;
    for (int64_t j = 0; j < d; ++j) norm_sq += vx[r * d + j] * vx[r * d + j];
    double norm = std::sqrt(norm_sq);
    (*norms)[r] = norm;
    if (norm > 0.0)
      for (int64_t j = 0; j < d; ++j) out[r * d + j] = vx[r * d + j] / norm;
  }
  return make_result(
      x.shape(), std::move(out), {x},
      [x, norms, rows, d](Node *self) {
        if (!x.requires_grad()) return;
        Node *p = x.node().get();
        p->ensure_grad();
        const auto &y = self->v;
        for (int64_t r = 0; r < rows; ++r) {
          double norm = (*norms)[r];
          if (norm == 0.0) continue;  // zero rows stay zero, no gradient
          double dot = 0.0;
          for (int64_t j = 0; j < d; ++j) dot += y[r * d + j] * self->g[r * d + j];
          for (int64_t j = 0; j < d; ++j)
            p->g[r * d + j] += (self->g[r * d + j] - y[r * d + j] * dot) / norm;
        }
      },
      "l2_normalize");
}

Tensor cosine_similarity(const Tensor &a, const Tensor &b) {
  require_defined(a, "cosine_similarity");
  require_defined(b, "cosine_similarity");
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: size mismatch");
  const auto &va = a.values();
  const auto &vb = b.values();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    dot += va[i] * vb[i];
    na2 += va[i] * va[i];
    nb2 += vb[i] * vb[i];
  }
  if (na2 == 0.0 || nb2 == 0.0)
    throw NumericError("cosine_similarity: zero-norm vector");
  double na = std::sqrt(na2), nb = std::sqrt(nb2);
  double c = dot / (na * nb);
  return make_result(
      {}, {c}, {a, b},
      [a, b, na, nb, c](Node *self) {
        double g = self->g[0];
        const auto &va = a.values();
        const auto &vb = b.values();
        if (a.requires_grad()) {
          Node *p = a.node().get();
          p->ensure_grad();
          for (size_t i = 0; i < va.size(); ++i)
            p->g[i] += g * (vb[i] / (na * nb) - c * va[i] / (na * na));
        }
        if (b.requires_grad()) {
          Node *p = b.node().get();
          p->ensure_grad();
          for (size_t i = 0; i < vb.size(); ++i)
            p->g[i] += g * (va[i] / (na * nb) - c * vb[i] / (nb * nb));
        }
      },
      "cosine_similarity");
}

}  // namespace nn
}  // namespace turntake
