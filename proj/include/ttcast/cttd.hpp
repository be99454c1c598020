#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "ttcast/tensor.hpp"

// Convolutional tensor-train decomposition: a large state-to-state kernel is
// factorized into an ordered chain of small cores, each K×K×R_l×R_{l+1}.
// `apply` is the sequential evaluation used in training; `compose` expands the
// chain into the explicit dense kernel and exists as a test oracle only (its
// cost grows exponentially with the order).

namespace ttcast::cttd {

template <class T>
struct CttdChain {
  std::vector<Tensor<T>> cores;

  std::size_t order() const { return cores.size(); }

  std::size_t kernel_size() const { return cores.empty() ? 0 : cores[0].shape()[0]; }

  // R_1 .. R_{m+1}
  std::vector<std::size_t> ranks() const {
    std::vector<std::size_t> r;
    for (const auto& c : cores) r.push_back(c.shape()[2]);
    if (!cores.empty()) r.push_back(cores.back().shape()[3]);
    return r;
  }

  void validate() const {
    if (cores.empty()) throw ConfigError("cttd: empty chain");
    for (std::size_t l = 0; l < cores.size(); ++l) {
      const auto& s = cores[l].shape();
      if (s.size() != 4 || s[0] != s[1])
        throw ShapeError("cttd: core " + std::to_string(l) + " must be K×K×R_l×R_{l+1}, got " +
                         shape_str(s));
      if (l > 0 && cores[l - 1].shape()[3] != s[2])
        throw ShapeError("cttd: rank mismatch between cores " + std::to_string(l - 1) + " and " +
                         std::to_string(l) + ": " + std::to_string(cores[l - 1].shape()[3]) +
                         " vs " + std::to_string(s[2]));
    }
  }
};

// Sequential rule: V¹ = 0, V^{l+1} = T^l ∗ (V^l + U^l), result V^{m+1}.
// inputs[l] must be H×W×R_l shaped feature maps; "same" zero padding keeps
// every intermediate on the H×W grid.
template <class T>
Tensor<T> apply(const CttdChain<T>& chain, const std::vector<Tensor<T>>& inputs) {
  chain.validate();
  if (inputs.size() != chain.order())
    throw ShapeError("cttd apply: " + std::to_string(inputs.size()) + " inputs for order " +
                     std::to_string(chain.order()) + " chain");
  const auto& s0 = inputs[0].shape();
  if (s0.size() != 3) throw ShapeError("cttd apply: inputs must be H×W×R");
  for (std::size_t l = 0; l < inputs.size(); ++l) {
    const auto& s = inputs[l].shape();
    if (s[0] != s0[0] || s[1] != s0[1])
      throw ShapeError("cttd apply: non-uniform spatial extents");
    if (s[2] != chain.cores[l].shape()[2])
      throw ShapeError("cttd apply: input " + std::to_string(l) + " has " + std::to_string(s[2]) +
                       " channels, core expects " + std::to_string(chain.cores[l].shape()[2]));
  }
  Tensor<T> v = Tensor<T>::zeros({s0[0], s0[1], chain.cores[0].shape()[2]});
  for (std::size_t l = 0; l < chain.order(); ++l)
    v = conv2d(add(v, inputs[l]), chain.cores[l]);
  return v;
}

namespace detail {

// Full (non-truncated) spatial convolution of two rank-carrying kernels,
// contracting the shared rank axis: out[x,y,ra,rc] = Σ_{rb} a[:,:,ra,rb] ∗ b[:,:,rb,rc].
template <class T>
Tensor<T> kernel_chain_product(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  const std::size_t Ea = as[0], Eb = bs[0], Ra = as[2], Rb = as[3], Rc = bs[3];
  if (bs[2] != Rb) throw ShapeError("kernel_chain_product: rank mismatch");
  const std::size_t E = Ea + Eb - 1;
  std::vector<T> out(E * E * Ra * Rc, T(0));
  for (std::size_t xa = 0; xa < Ea; ++xa)
    for (std::size_t ya = 0; ya < Ea; ++ya)
      for (std::size_t xb = 0; xb < Eb; ++xb)
        for (std::size_t yb = 0; yb < Eb; ++yb) {
          const std::size_t x = xa + xb, y = ya + yb;
          for (std::size_t ra = 0; ra < Ra; ++ra)
            for (std::size_t rb = 0; rb < Rb; ++rb)
              for (std::size_t rc = 0; rc < Rc; ++rc)
                out[((x * E + y) * Ra + ra) * Rc + rc] +=
                    a.value()[((xa * Ea + ya) * Ra + ra) * Rb + rb] *
                    b.value()[((xb * Eb + yb) * Rb + rb) * Rc + rc];
        }
  return Tensor<T>::from({E, E, Ra, Rc}, std::move(out));
}

}  // namespace detail

// Explicit composed kernel of cores first..m, spatial extent (m-first)(K-1)+K
// per axis, shape E×E×R_{first+1-indexed}×R_{m+1}. Test oracle; returns a
// constant tensor outside the gradient tape.
template <class T>
Tensor<T> compose(const CttdChain<T>& chain, std::size_t first = 0) {
  chain.validate();
  if (first >= chain.order()) throw ConfigError("cttd compose: first core out of range");
  NoGradGuard ng;
  Tensor<T> dense = Tensor<T>::from(chain.cores[first].shape(), chain.cores[first].value());
  for (std::size_t l = first + 1; l < chain.order(); ++l)
    dense = detail::kernel_chain_product(dense, chain.cores[l]);
  return dense;
}

template <class T>
std::size_t param_count(const CttdChain<T>& chain) {
  chain.validate();
  std::size_t n = 0;
  for (const auto& c : chain.cores) n += shape_size(c.shape());
  return n;
}

// Parameter count of the dense higher-order alternative: one explicit kernel
// per input stage, spatial extent (m-l)(K-1)+K, mapping R_l to R_{m+1}.
inline std::size_t dense_equivalent_count(std::size_t m, std::size_t k,
                                          const std::vector<std::size_t>& ranks) {
  if (ranks.size() != m + 1) throw ConfigError("dense_equivalent_count: need m+1 ranks");
  std::size_t n = 0;
  for (std::size_t l = 0; l < m; ++l) {
    const std::size_t e = (m - l - 1) * (k - 1) + k;
    n += e * e * ranks[l] * ranks[m];
  }
  return n;
}

}  // namespace ttcast::cttd
