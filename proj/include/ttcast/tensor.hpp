#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ttcast/errors.hpp"

// Dense N-d tensors with reverse-mode automatic differentiation.
//
// Every operation builds a tape node holding the backward closure; gradients
// are obtained by topologically sorting the graph from a scalar loss and
// replaying the closures in reverse. Values are immutable once an op has
// consumed them. The scalar type is a template parameter: float for training,
// double for gradient-check headroom.

namespace ttcast {

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

// Disables tape recording in scope (validation / inference paths).
struct NoGradGuard {
  bool saved;
  NoGradGuard() : saved(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = saved; }
};

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream ss;
  ss << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
  ss << "]";
  return ss.str();
}

template <class T>
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  // Accumulates into the parents' grad buffers; raw pointers are safe because
  // `parents` owns them for the lifetime of this node.
  std::function<void()> backward;
};

template <class T>
class Tensor {
 public:
  Tensor() : node_(std::make_shared<TensorNode<T>>()) {}

  static Tensor zeros(std::vector<std::size_t> shape) { return full(std::move(shape), T(0)); }

  static Tensor full(std::vector<std::size_t> shape, T fill) {
    Tensor t;
    for (std::size_t e : shape)
      if (e < 1) throw ShapeError("extent < 1 in shape " + shape_str(shape));
    t.node_->value.assign(shape_size(shape), fill);
    t.node_->shape = std::move(shape);
    return t;
  }

  static Tensor from(std::vector<std::size_t> shape, std::vector<T> values) {
    if (shape_size(shape) != values.size())
      throw ShapeError("value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(shape));
    Tensor t;
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    return t;
  }

  static Tensor scalar_value(T v) { return from({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  const std::vector<T>& value() const { return node_->value; }
  // Only valid before the tensor has entered any op.
  std::vector<T>& mutable_value() { return node_->value; }

  T scalar() const {
    if (size() != 1) throw ContractError("scalar() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  const std::vector<T>& grad() const { return node_->grad; }

  std::shared_ptr<TensorNode<T>> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

namespace detail {

template <class T>
inline bool track(std::initializer_list<const Tensor<T>*> args) {
  if (!grad_mode_flag()) return false;
  for (const Tensor<T>* a : args)
    if (a->requires_grad()) return true;
  return false;
}

template <class T>
inline Tensor<T> result(std::vector<std::size_t> shape, std::vector<T> value) {
  return Tensor<T>::from(std::move(shape), std::move(value));
}

template <class T>
inline void attach(Tensor<T>& out, std::initializer_list<const Tensor<T>*> parents,
                   std::function<void()> backward) {
  out.set_requires_grad(true);
  for (const Tensor<T>* p : parents) out.node()->parents.push_back(p->node());
  out.node()->backward = std::move(backward);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <class T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a, &b})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    auto* bn = b.node().get();
    detail::attach(r, {&a, &b}, [rn, an, bn]() {
      if (an->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i) an->grad[i] += rn->grad[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i) bn->grad[i] += rn->grad[i];
    });
  }
  return r;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a, &b})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    auto* bn = b.node().get();
    detail::attach(r, {&a, &b}, [rn, an, bn]() {
      if (an->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i) an->grad[i] += rn->grad[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i) bn->grad[i] -= rn->grad[i];
    });
  }
  return r;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a, &b})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    auto* bn = b.node().get();
    detail::attach(r, {&a, &b}, [rn, an, bn]() {
      if (an->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i)
          an->grad[i] += rn->grad[i] * bn->value[i];
      if (bn->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i)
          bn->grad[i] += rn->grad[i] * an->value[i];
    });
  }
  return r;
}

// Multiply by a compile-time-constant scalar (not a graph node).
template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * factor;
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an, factor]() {
      for (std::size_t i = 0; i < rn->grad.size(); ++i) an->grad[i] += rn->grad[i] * factor;
    });
  }
  return r;
}

// Broadcast-multiply by a learnable scalar (1-element tensor).
template <class T>
Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.size() != 1) throw ShapeError("scale_by: scalar operand has shape " + shape_str(s.shape()));
  const T sv = s.value()[0];
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * sv;
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a, &s})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    auto* sn = s.node().get();
    detail::attach(r, {&a, &s}, [rn, an, sn]() {
      const T sv2 = sn->value[0];
      if (an->requires_grad)
        for (std::size_t i = 0; i < rn->grad.size(); ++i) an->grad[i] += rn->grad[i] * sv2;
      if (sn->requires_grad) {
        T acc = 0;
        for (std::size_t i = 0; i < rn->grad.size(); ++i) acc += rn->grad[i] * an->value[i];
        sn->grad[0] += acc;
      }
    });
  }
  return r;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a.value()[i];
    out[i] = x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
  }
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an]() {
      for (std::size_t i = 0; i < rn->grad.size(); ++i) {
        const T y = rn->value[i];
        an->grad[i] += rn->grad[i] * y * (T(1) - y);
      }
    });
  }
  return r;
}

template <class T>
Tensor<T> tanh_t(const Tensor<T>& a) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an]() {
      for (std::size_t i = 0; i < rn->grad.size(); ++i) {
        const T y = rn->value[i];
        an->grad[i] += rn->grad[i] * (T(1) - y * y);
      }
    });
  }
  return r;
}

// log(1 + exp(x)), numerically stable; reparameterizes non-negative scalars.
template <class T>
Tensor<T> softplus(const Tensor<T>& a) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a.value()[i];
    out[i] = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  Tensor<T> r = detail::result(a.shape(), std::move(out));
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an]() {
      for (std::size_t i = 0; i < rn->grad.size(); ++i) {
        const T x = an->value[i];
        const T s = x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
        an->grad[i] += rn->grad[i] * s;
      }
    });
  }
  return r;
}

// ---------------------------------------------------------------------------
// Shape ops: channel concat / slice, temporal stacking
// ---------------------------------------------------------------------------

// Concatenates along the last (channel) axis; all other extents must agree.
template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_channels: no inputs");
  const auto& s0 = parts[0].shape();
  std::size_t ctotal = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size()) throw ShapeError("concat_channels: rank mismatch");
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (s[i] != s0[i])
        throw ShapeError("concat_channels: " + shape_str(s) + " vs " + shape_str(s0));
    ctotal += s.back();
  }
  std::vector<std::size_t> oshape = s0;
  oshape.back() = ctotal;
  const std::size_t rows = shape_size(oshape) / ctotal;
  std::vector<T> out(rows * ctotal);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.shape().back();
    for (std::size_t rrow = 0; rrow < rows; ++rrow)
      for (std::size_t k = 0; k < c; ++k) out[rrow * ctotal + off + k] = p.value()[rrow * c + k];
    off += c;
  }
  Tensor<T> r = detail::result(std::move(oshape), std::move(out));
  bool any = false;
  if (grad_mode_flag())
    for (const auto& p : parts) any = any || p.requires_grad();
  if (any) {
    auto* rn = r.node().get();
    std::vector<TensorNode<T>*> pn;
    r.set_requires_grad(true);
    for (const auto& p : parts) {
      r.node()->parents.push_back(p.node());
      pn.push_back(p.node().get());
    }
    r.node()->backward = [rn, pn, rows, ctotal]() {
      std::size_t off2 = 0;
      for (auto* n : pn) {
        const std::size_t c = n->shape.back();
        if (n->requires_grad)
          for (std::size_t rrow = 0; rrow < rows; ++rrow)
            for (std::size_t k = 0; k < c; ++k)
              n->grad[rrow * c + k] += rn->grad[rrow * ctotal + off2 + k];
        off2 += c;
      }
    };
  }
  return r;
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& a, std::size_t begin, std::size_t count) {
  const auto& s = a.shape();
  if (s.empty() || begin + count > s.back())
    throw ShapeError("slice_channels: [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") out of " + shape_str(s));
  std::vector<std::size_t> oshape = s;
  oshape.back() = count;
  const std::size_t c = s.back();
  const std::size_t rows = a.size() / c;
  std::vector<T> out(rows * count);
  for (std::size_t rrow = 0; rrow < rows; ++rrow)
    for (std::size_t k = 0; k < count; ++k) out[rrow * count + k] = a.value()[rrow * c + begin + k];
  Tensor<T> r = detail::result(std::move(oshape), std::move(out));
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an, begin, count, c, rows]() {
      for (std::size_t rrow = 0; rrow < rows; ++rrow)
        for (std::size_t k = 0; k < count; ++k)
          an->grad[rrow * c + begin + k] += rn->grad[rrow * count + k];
    });
  }
  return r;
}

// Stacks H×W×C frames into an H×W×n×C block (new time axis before channels).
template <class T>
Tensor<T> stack_time(const std::vector<Tensor<T>>& frames) {
  if (frames.empty()) throw ContractError("stack_time: no inputs");
  const auto& s0 = frames[0].shape();
  if (s0.size() != 3) throw ShapeError("stack_time: expects H×W×C frames, got " + shape_str(s0));
  for (const auto& f : frames) check_same_shape(frames[0], f, "stack_time");
  const std::size_t H = s0[0], W = s0[1], C = s0[2], n = frames.size();
  std::vector<T> out(H * W * n * C);
  for (std::size_t tau = 0; tau < n; ++tau) {
    const auto& v = frames[tau].value();
    for (std::size_t p = 0; p < H * W; ++p)
      for (std::size_t c = 0; c < C; ++c) out[(p * n + tau) * C + c] = v[p * C + c];
  }
  Tensor<T> r = detail::result({H, W, n, C}, std::move(out));
  bool any = false;
  if (grad_mode_flag())
    for (const auto& f : frames) any = any || f.requires_grad();
  if (any) {
    auto* rn = r.node().get();
    std::vector<TensorNode<T>*> pn;
    r.set_requires_grad(true);
    for (const auto& f : frames) {
      r.node()->parents.push_back(f.node());
      pn.push_back(f.node().get());
    }
    r.node()->backward = [rn, pn, H, W, C, n]() {
      for (std::size_t tau = 0; tau < n; ++tau) {
        auto* fn = pn[tau];
        if (!fn->requires_grad) continue;
        for (std::size_t p = 0; p < H * W; ++p)
          for (std::size_t c = 0; c < C; ++c)
            fn->grad[p * C + c] += rn->grad[(p * n + tau) * C + c];
      }
    };
  }
  return r;
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

// 2D "same" convolution with zero padding. input H×W×Cin, kernel K×K×Cin×Cout.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>* bias = nullptr) {
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  if (is.size() != 3) throw ShapeError("conv2d: input must be H×W×Cin, got " + shape_str(is));
  if (ks.size() != 4 || ks[0] != ks[1])
    throw ShapeError("conv2d: kernel must be K×K×Cin×Cout, got " + shape_str(ks));
  if (ks[0] % 2 == 0) throw ConfigError("conv2d: kernel size must be odd, got " + std::to_string(ks[0]));
  if (is[2] != ks[2])
    throw ShapeError("conv2d: input channels " + std::to_string(is[2]) +
                     " vs kernel channels " + std::to_string(ks[2]));
  if (bias && bias->shape() != std::vector<std::size_t>{ks[3]})
    throw ShapeError("conv2d: bias shape " + shape_str(bias->shape()));
  const std::size_t H = is[0], W = is[1], Cin = is[2], K = ks[0], Cout = ks[3];
  const long pad = static_cast<long>(K / 2);

  std::vector<T> out(H * W * Cout, T(0));
  if (bias) {
    for (std::size_t p = 0; p < H * W; ++p)
      for (std::size_t co = 0; co < Cout; ++co) out[p * Cout + co] = bias->value()[co];
  }
  const T* in = input.value().data();
  const T* kv = kernel.value().data();
  for (std::size_t ki = 0; ki < K; ++ki) {
    for (std::size_t kj = 0; kj < K; ++kj) {
      const long di = static_cast<long>(ki) - pad, dj = static_cast<long>(kj) - pad;
      const long i0 = std::max(0L, -di), i1 = std::min<long>(H, static_cast<long>(H) - di);
      const long j0 = std::max(0L, -dj), j1 = std::min<long>(W, static_cast<long>(W) - dj);
      for (long i = i0; i < i1; ++i) {
        for (long j = j0; j < j1; ++j) {
          const T* ip = in + ((static_cast<std::size_t>(i + di) * W) + static_cast<std::size_t>(j + dj)) * Cin;
          T* op = out.data() + (static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)) * Cout;
          const T* kp = kv + ((ki * K + kj) * Cin) * Cout;
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const T v = ip[ci];
            const T* kc = kp + ci * Cout;
            for (std::size_t co = 0; co < Cout; ++co) op[co] += v * kc[co];
          }
        }
      }
    }
  }
  Tensor<T> r = detail::result({H, W, Cout}, std::move(out));
  const bool want = bias ? detail::track<T>({&input, &kernel, bias})
                         : detail::track<T>({&input, &kernel});
  if (want) {
    auto* rn = r.node().get();
    auto* an = input.node().get();
    auto* kn = kernel.node().get();
    TensorNode<T>* bn = bias ? bias->node().get() : nullptr;
    auto fn = [rn, an, kn, bn, H, W, Cin, K, Cout, pad]() {
      const T* go = rn->grad.data();
      if (bn && bn->requires_grad) {
        for (std::size_t p = 0; p < H * W; ++p)
          for (std::size_t co = 0; co < Cout; ++co) bn->grad[co] += go[p * Cout + co];
      }
      for (std::size_t ki = 0; ki < K; ++ki) {
        for (std::size_t kj = 0; kj < K; ++kj) {
          const long di = static_cast<long>(ki) - pad, dj = static_cast<long>(kj) - pad;
          const long i0 = std::max(0L, -di), i1 = std::min<long>(H, static_cast<long>(H) - di);
          const long j0 = std::max(0L, -dj), j1 = std::min<long>(W, static_cast<long>(W) - dj);
          for (long i = i0; i < i1; ++i) {
            for (long j = j0; j < j1; ++j) {
              const std::size_t pin = (static_cast<std::size_t>(i + di) * W + static_cast<std::size_t>(j + dj)) * Cin;
              const std::size_t pout = (static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)) * Cout;
              const std::size_t pk = ((ki * K + kj) * Cin) * Cout;
              for (std::size_t ci = 0; ci < Cin; ++ci) {
                const T iv = an->value[pin + ci];
                T gacc = 0;
                for (std::size_t co = 0; co < Cout; ++co) {
                  const T g = go[pout + co];
                  if (kn->requires_grad) kn->grad[pk + ci * Cout + co] += iv * g;
                  gacc += g * kn->value[pk + ci * Cout + co];
                }
                if (an->requires_grad) an->grad[pin + ci] += gacc;
              }
            }
          }
        }
      }
    };
    if (bias)
      detail::attach(r, {&input, &kernel, bias}, fn);
    else
      detail::attach(r, {&input, &kernel}, fn);
  }
  return r;
}

// 3D convolution collapsing the time axis: input H×W×Tw×Cin, kernel
// K×K×Tw×Cin×Cout, spatial padding "same", temporal extent matched exactly.
template <class T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>* bias = nullptr) {
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  if (is.size() != 4) throw ShapeError("conv3d: input must be H×W×Tw×Cin, got " + shape_str(is));
  if (ks.size() != 5 || ks[0] != ks[1])
    throw ShapeError("conv3d: kernel must be K×K×Tw×Cin×Cout, got " + shape_str(ks));
  if (ks[0] % 2 == 0) throw ConfigError("conv3d: kernel size must be odd");
  if (is[2] != ks[2])
    throw ShapeError("conv3d: temporal extent " + std::to_string(is[2]) + " vs kernel " +
                     std::to_string(ks[2]));
  if (is[3] != ks[3])
    throw ShapeError("conv3d: input channels " + std::to_string(is[3]) + " vs kernel " +
                     std::to_string(ks[3]));
  const std::size_t H = is[0], W = is[1], Tw = is[2], Cin = is[3], K = ks[0], Cout = ks[4];
  if (bias && bias->shape() != std::vector<std::size_t>{Cout})
    throw ShapeError("conv3d: bias shape " + shape_str(bias->shape()));
  const long pad = static_cast<long>(K / 2);

  std::vector<T> out(H * W * Cout, T(0));
  if (bias) {
    for (std::size_t p = 0; p < H * W; ++p)
      for (std::size_t co = 0; co < Cout; ++co) out[p * Cout + co] = bias->value()[co];
  }
  const T* in = input.value().data();
  const T* kv = kernel.value().data();
  for (std::size_t ki = 0; ki < K; ++ki) {
    for (std::size_t kj = 0; kj < K; ++kj) {
      const long di = static_cast<long>(ki) - pad, dj = static_cast<long>(kj) - pad;
      const long i0 = std::max(0L, -di), i1 = std::min<long>(H, static_cast<long>(H) - di);
      const long j0 = std::max(0L, -dj), j1 = std::min<long>(W, static_cast<long>(W) - dj);
      for (long i = i0; i < i1; ++i) {
        for (long j = j0; j < j1; ++j) {
          const std::size_t pin = ((static_cast<std::size_t>(i + di) * W) + static_cast<std::size_t>(j + dj)) * Tw * Cin;
          T* op = out.data() + (static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)) * Cout;
          for (std::size_t tau = 0; tau < Tw; ++tau) {
            const T* ip = in + pin + tau * Cin;
            const T* kp = kv + (((ki * K + kj) * Tw + tau) * Cin) * Cout;
            for (std::size_t ci = 0; ci < Cin; ++ci) {
              const T v = ip[ci];
              const T* kc = kp + ci * Cout;
              for (std::size_t co = 0; co < Cout; ++co) op[co] += v * kc[co];
            }
          }
        }
      }
    }
  }
  Tensor<T> r = detail::result({H, W, Cout}, std::move(out));
  const bool want = bias ? detail::track<T>({&input, &kernel, bias})
                         : detail::track<T>({&input, &kernel});
  if (want) {
    auto* rn = r.node().get();
    auto* an = input.node().get();
    auto* kn = kernel.node().get();
    TensorNode<T>* bn = bias ? bias->node().get() : nullptr;
    auto fn = [rn, an, kn, bn, H, W, Tw, Cin, K, Cout, pad]() {
      const T* go = rn->grad.data();
      if (bn && bn->requires_grad) {
        for (std::size_t p = 0; p < H * W; ++p)
          for (std::size_t co = 0; co < Cout; ++co) bn->grad[co] += go[p * Cout + co];
      }
      for (std::size_t ki = 0; ki < K; ++ki) {
        for (std::size_t kj = 0; kj < K; ++kj) {
          const long di = static_cast<long>(ki) - pad, dj = static_cast<long>(kj) - pad;
          const long i0 = std::max(0L, -di), i1 = std::min<long>(H, static_cast<long>(H) - di);
          const long j0 = std::max(0L, -dj), j1 = std::min<long>(W, static_cast<long>(W) - dj);
          for (long i = i0; i < i1; ++i) {
            for (long j = j0; j < j1; ++j) {
              const std::size_t pin = ((static_cast<std::size_t>(i + di) * W) + static_cast<std::size_t>(j + dj)) * Tw * Cin;
              const std::size_t pout = (static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)) * Cout;
              for (std::size_t tau = 0; tau < Tw; ++tau) {
                const std::size_t pk = (((ki * K + kj) * Tw + tau) * Cin) * Cout;
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                  const T iv = an->value[pin + tau * Cin + ci];
                  T gacc = 0;
                  for (std::size_t co = 0; co < Cout; ++co) {
                    const T g = go[pout + co];
                    if (kn->requires_grad) kn->grad[pk + ci * Cout + co] += iv * g;
                    gacc += g * kn->value[pk + ci * Cout + co];
                  }
                  if (an->requires_grad) an->grad[pin + tau * Cin + ci] += gacc;
                }
              }
            }
          }
        }
      }
    };
    if (bias)
      detail::attach(r, {&input, &kernel, bias}, fn);
    else
      detail::attach(r, {&input, &kernel}, fn);
  }
  return r;
}

// ---------------------------------------------------------------------------
// 5-point Laplacian with replicate (zero normal gradient) boundaries
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> laplacian(const Tensor<T>& a) {
  const auto& s = a.shape();
  if (s.size() != 3) throw ShapeError("laplacian: expects H×W×C, got " + shape_str(s));
  const std::size_t H = s[0], W = s[1], C = s[2];
  const T* in = a.value().data();
  std::vector<T> out(a.size());
  auto clampi = [](long v, long hi) { return v < 0 ? 0L : (v >= hi ? hi - 1 : v); };
  for (long i = 0; i < static_cast<long>(H); ++i) {
    const long im = clampi(i - 1, H), ip = clampi(i + 1, H);
    for (long j = 0; j < static_cast<long>(W); ++j) {
      const long jm = clampi(j - 1, W), jp = clampi(j + 1, W);
      for (std::size_t c = 0; c < C; ++c) {
        out[(i * W + j) * C + c] = in[(im * W + j) * C + c] + in[(ip * W + j) * C + c] +
                                   in[(i * W + jm) * C + c] + in[(i * W + jp) * C + c] -
                                   T(4) * in[(i * W + j) * C + c];
      }
    }
  }
  Tensor<T> r = detail::result(s, std::move(out));
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an, H, W, C]() {
      auto clampi = [](long v, long hi) { return v < 0 ? 0L : (v >= hi ? hi - 1 : v); };
      for (long i = 0; i < static_cast<long>(H); ++i) {
        const long im = clampi(i - 1, H), ip = clampi(i + 1, H);
        for (long j = 0; j < static_cast<long>(W); ++j) {
          const long jm = clampi(j - 1, W), jp = clampi(j + 1, W);
          for (std::size_t c = 0; c < C; ++c) {
            const T g = rn->grad[(i * W + j) * C + c];
            an->grad[(im * W + j) * C + c] += g;
            an->grad[(ip * W + j) * C + c] += g;
            an->grad[(i * W + jm) * C + c] += g;
            an->grad[(i * W + jp) * C + c] += g;
            an->grad[(i * W + j) * C + c] -= T(4) * g;
          }
        }
      }
    });
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reductions and losses
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.value()) acc += v;
  Tensor<T> r = Tensor<T>::scalar_value(acc);
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an]() {
      const T g = rn->grad[0];
      for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
    });
  }
  return r;
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  const T n = static_cast<T>(a.size());
  T acc = 0;
  for (T v : a.value()) acc += v;
  Tensor<T> r = Tensor<T>::scalar_value(acc / n);
  if (detail::track<T>({&a})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    detail::attach(r, {&a}, [rn, an, n]() {
      const T g = rn->grad[0] / n;
      for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
    });
  }
  return r;
}

// Mean squared error over all elements.
template <class T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mse_loss");
  const T n = static_cast<T>(a.size());
  T acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = a.value()[i] - b.value()[i];
    acc += d * d;
  }
  Tensor<T> r = Tensor<T>::scalar_value(acc / n);
  if (detail::track<T>({&a, &b})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    auto* bn = b.node().get();
    detail::attach(r, {&a, &b}, [rn, an, bn, n]() {
      const T g = rn->grad[0] * T(2) / n;
      for (std::size_t i = 0; i < an->value.size(); ++i) {
        const T d = an->value[i] - bn->value[i];
        if (an->requires_grad) an->grad[i] += g * d;
        if (bn->requires_grad) bn->grad[i] -= g * d;
      }
    });
  }
  return r;
}

// Mean absolute error; subgradient 0 at ties.
template <class T>
Tensor<T> mae_loss(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mae_loss");
  const T n = static_cast<T>(a.size());
  T acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.value()[i] - b.value()[i]);
  Tensor<T> r = Tensor<T>::scalar_value(acc / n);
  if (detail::track<T>({&a, &b})) {
    auto* rn = r.node().get();
    auto* an = a.node().get();
    auto* bn = b.node().get();
    detail::attach(r, {&a, &b}, [rn, an, bn, n]() {
      const T g = rn->grad[0] / n;
      for (std::size_t i = 0; i < an->value.size(); ++i) {
        const T d = an->value[i] - bn->value[i];
        const T sgn = d > 0 ? T(1) : (d < 0 ? T(-1) : T(0));
        if (an->requires_grad) an->grad[i] += g * sgn;
        if (bn->requires_grad) bn->grad[i] -= g * sgn;
      }
    });
  }
  return r;
}

// ---------------------------------------------------------------------------
// Gradient context
// ---------------------------------------------------------------------------

template <class T>
class GradientContext {
 public:
  // Marks a tensor as a trainable parameter and registers it.
  void track(Tensor<T>& p) {
    p.set_requires_grad(true);
    params_.push_back(p);
  }

  const std::vector<Tensor<T>>& params() const { return params_; }

  // Reverse pass from a scalar loss. Grad buffers of every reachable node are
  // reset first, so repeated calls without new forward work are idempotent.
  static void backward(const Tensor<T>& loss) {
    if (loss.size() != 1)
      throw ContractError("gradient: loss must be scalar, got shape " + shape_str(loss.shape()));
    std::vector<TensorNode<T>*> order;
    topo_sort(loss.node().get(), order);
    for (auto* n : order) n->grad.assign(n->value.size(), T(0));
    loss.node()->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward) (*it)->backward();
  }

  std::vector<std::vector<T>> gradient(const Tensor<T>& loss) const {
    backward(loss);
    std::vector<std::vector<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) {
      if (p.node()->grad.size() != p.size())
        out.push_back(std::vector<T>(p.size(), T(0)));  // unreachable parameter
      else
        out.push_back(p.node()->grad);
    }
    return out;
  }

  std::vector<T> gradient_of(const Tensor<T>& loss, const Tensor<T>& param) const {
    auto it = std::find_if(params_.begin(), params_.end(), [&](const Tensor<T>& p) {
      return p.node() == param.node();
    });
    if (it == params_.end()) throw LookupError("gradient_of: parameter not registered");
    backward(loss);
    if (param.node()->grad.size() != param.size()) return std::vector<T>(param.size(), T(0));
    return param.node()->grad;
  }

 private:
  static void topo_sort(TensorNode<T>* root, std::vector<TensorNode<T>*>& order) {
    std::unordered_set<TensorNode<T>*> seen;
    // Iterative post-order DFS; recursion would overflow on long rollouts.
    std::vector<std::pair<TensorNode<T>*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < node->parents.size()) {
        TensorNode<T>* p = node->parents[idx++].get();
        if (seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::vector<Tensor<T>> params_;
};

// ---------------------------------------------------------------------------
// Initialization helpers
// ---------------------------------------------------------------------------

// Uniform in ±sqrt(1/(K·K·Cin)) for a K×K×...×Cin×Cout kernel layout.
template <class T>
void init_conv_kernel(Tensor<T>& kernel, std::size_t fan_in, std::mt19937& rng) {
  const double limit = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (T& v : kernel.mutable_value()) v = static_cast<T>(dist(rng));
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.value())
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

}  // namespace ttcast
