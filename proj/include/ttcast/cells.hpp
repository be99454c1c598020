#pragma once

#include <deque>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ttcast/cttd.hpp"
#include "ttcast/physics.hpp"
#include "ttcast/tensor.hpp"

// Recurrent cells: the first-order ConvLSTM baseline and the higher-order
// tensor-train cell with sliding-window hidden history, physics-constrained
// intermediate states and CTTD gate computation.
//
// Gate order in the 4C axis is fixed as (input, forget, candidate, output);
// checkpoints depend on it.

namespace ttcast::cells {

template <class T>
struct GateSplit {
  Tensor<T> input, forget, candidate, output;
};

template <class T>
GateSplit<T> split_gates(const Tensor<T>& pre, std::size_t c) {
  return GateSplit<T>{slice_channels(pre, 0, c), slice_channels(pre, c, c),
                      slice_channels(pre, 2 * c, c), slice_channels(pre, 3 * c, c)};
}

// Completes the LSTM recurrence from gate pre-activations:
// memory' = sigmoid(F)⊙memory + sigmoid(I)⊙tanh(C̃), hidden' = sigmoid(O)⊙tanh(memory').
template <class T>
std::pair<Tensor<T>, Tensor<T>> lstm_update(const Tensor<T>& gates, const Tensor<T>& memory,
                                            std::size_t channels) {
  GateSplit<T> g = split_gates(gates, channels);
  Tensor<T> new_memory =
      add(mul(sigmoid(g.forget), memory), mul(sigmoid(g.input), tanh_t(g.candidate)));
  Tensor<T> hidden = mul(sigmoid(g.output), tanh_t(new_memory));
  return {hidden, new_memory};
}

// ---------------------------------------------------------------------------
// First-order ConvLSTM
// ---------------------------------------------------------------------------

template <class T>
class ConvLstmCell {
 public:
  ConvLstmCell(std::size_t in_channels, std::size_t channels, std::size_t kernel,
               std::mt19937& rng)
      : in_channels_(in_channels), channels_(channels), kernel_(kernel) {
    if (kernel % 2 == 0) throw ConfigError("ConvLstmCell: kernel size must be odd");
    w_input_ = Tensor<T>::zeros({kernel, kernel, in_channels, 4 * channels});
    t_hidden_ = Tensor<T>::zeros({kernel, kernel, channels, 4 * channels});
    bias_ = Tensor<T>::zeros({4 * channels});
    init_conv_kernel(w_input_, kernel * kernel * in_channels, rng);
    init_conv_kernel(t_hidden_, kernel * kernel * channels, rng);
    // forget-gate bias starts at 1
    for (std::size_t c = 0; c < channels; ++c) bias_.mutable_value()[channels + c] = T(1);
  }

  void reset(std::size_t h, std::size_t w) {
    hidden_ = Tensor<T>::zeros({h, w, channels_});
    memory_ = Tensor<T>::zeros({h, w, channels_});
  }

  Tensor<T> step(const Tensor<T>& x) {
    if (x.shape().size() != 3 || x.shape()[2] != in_channels_)
      throw ShapeError("ConvLstmCell: input " + shape_str(x.shape()) + ", expected H×W×" +
                       std::to_string(in_channels_));
    if (hidden_.size() == 0) reset(x.shape()[0], x.shape()[1]);
    Tensor<T> gates = add(conv2d(x, w_input_, &bias_), conv2d(hidden_, t_hidden_));
    auto [hidden, memory] = lstm_update(gates, memory_, channels_);
    hidden_ = hidden;
    memory_ = memory;
    return hidden_;
  }

  std::size_t channels() const { return channels_; }
  const Tensor<T>& hidden() const { return hidden_; }

  Tensor<T>& w_input() { return w_input_; }
  Tensor<T>& t_hidden() { return t_hidden_; }
  Tensor<T>& bias() { return bias_; }

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    return {{"w_input", &w_input_}, {"t_hidden", &t_hidden_}, {"bias", &bias_}};
  }

 private:
  std::size_t in_channels_, channels_, kernel_;
  Tensor<T> w_input_, t_hidden_, bias_;
  Tensor<T> hidden_, memory_;
};

// ---------------------------------------------------------------------------
// PITT / TT ConvLSTM cell
// ---------------------------------------------------------------------------

struct PittCellConfig {
  std::size_t in_channels = 1;
  std::size_t channels = 8;
  std::size_t kernel = 3;
  std::size_t order = 3;  // m
  std::size_t steps = 3;  // n
  std::size_t rank = 8;   // R
  physics::Kind kind = physics::Kind::none;
  double coeff_init = 0.1;

  void validate() const {
    if (kernel % 2 == 0) throw ConfigError("pitt cell: kernel size must be odd");
    if (order < 1 || steps < 1) throw ConfigError("pitt cell: order and steps must be >= 1");
    if (order > steps)
      throw ConfigError("pitt cell: order m=" + std::to_string(order) + " exceeds steps n=" +
                        std::to_string(steps));
  }
};

template <class T>
class PittConvLstmCell {
 public:
  PittConvLstmCell(const PittCellConfig& cfg, std::mt19937& rng) : cfg_(cfg) {
    cfg.validate();
    const std::size_t k = cfg.kernel, c = cfg.channels, r = cfg.rank;
    const std::size_t taps = cfg.steps - cfg.order + 1;
    w_input_ = Tensor<T>::zeros({k, k, cfg.in_channels, 4 * c});
    init_conv_kernel(w_input_, k * k * cfg.in_channels, rng);
    bias_ = Tensor<T>::zeros({4 * c});
    for (std::size_t i = 0; i < c; ++i) bias_.mutable_value()[c + i] = T(1);
    for (std::size_t o = 0; o < cfg.order; ++o) {
      Tensor<T> kw = Tensor<T>::zeros({k, k, taps, c, r});
      init_conv_kernel(kw, k * k * taps * c, rng);
      window_kernels_.push_back(kw);
      // J starts as the identity channel mixing, so H̃ = H at initialization.
      Tensor<T> j = Tensor<T>::zeros({1, 1, r, r});
      for (std::size_t i = 0; i < r; ++i) j.mutable_value()[i * r + i] = T(1);
      physics_maps_.push_back(j);
    }
    for (std::size_t l = 0; l < cfg.order; ++l) {
      const std::size_t rin = r;
      const std::size_t rout = (l + 1 == cfg.order) ? 4 * c : r;
      Tensor<T> core = Tensor<T>::zeros({k, k, rin, rout});
      init_conv_kernel(core, k * k * rin, rng);
      chain_.cores.push_back(core);
    }
    spec_ = physics::PhysicsSpec<T>::make(cfg.kind, cfg.coeff_init);
  }

  void reset(std::size_t h, std::size_t w) {
    history_.clear();
    for (std::size_t i = 0; i < cfg_.steps; ++i)
      history_.push_back(Tensor<T>::zeros({h, w, cfg_.channels}));
    memory_ = Tensor<T>::zeros({h, w, cfg_.channels});
    physics_loss_ = Tensor<T>::scalar_value(T(0));
  }

  // Sliding-window maps H^{(t,o)}: window o covers history lags o..o+(n-m),
  // newest lag first, projected to rank channels by the 3D window kernel.
  std::vector<Tensor<T>> window_map() const {
    if (history_.empty()) throw ContractError("pitt cell: step before reset");
    const std::size_t taps = cfg_.steps - cfg_.order + 1;
    std::vector<Tensor<T>> maps;
    for (std::size_t o = 0; o < cfg_.order; ++o) {
      std::vector<Tensor<T>> window(history_.begin() + o, history_.begin() + o + taps);
      maps.push_back(conv3d(stack_time(window), window_kernels_[o]));
    }
    return maps;
  }

  // H̃^{(t,o)} = J^{(o)} ∗ H^{(t,o)}; accumulates this step's physics residual.
  std::vector<Tensor<T>> physics_update(const std::vector<Tensor<T>>& maps) {
    std::vector<Tensor<T>> updated;
    for (std::size_t o = 0; o < maps.size(); ++o)
      updated.push_back(conv2d(maps[o], physics_maps_[o]));
    if (spec_.kind != physics::Kind::none)
      physics_loss_ = add(physics_loss_, physics::step_physics_loss(maps, updated, spec_));
    return updated;
  }

  Tensor<T> step(const Tensor<T>& x) {
    if (x.shape().size() != 3 || x.shape()[2] != cfg_.in_channels)
      throw ShapeError("pitt cell: input " + shape_str(x.shape()) + ", expected H×W×" +
                       std::to_string(cfg_.in_channels));
    if (history_.empty()) reset(x.shape()[0], x.shape()[1]);
    std::vector<Tensor<T>> updated = physics_update(window_map());
    Tensor<T> gates = add(conv2d(x, w_input_, &bias_), cttd::apply(chain_, updated));
    auto [hidden, memory] = lstm_update(gates, memory_, cfg_.channels);
    memory_ = memory;
    history_.push_front(hidden);
    history_.pop_back();
    return hidden;
  }

  // Accumulated L_dp contribution since the last reset (unweighted).
  const Tensor<T>& physics_loss() const { return physics_loss_; }

  const PittCellConfig& config() const { return cfg_; }
  const std::deque<Tensor<T>>& history() const { return history_; }
  Tensor<T>& w_input() { return w_input_; }
  Tensor<T>& bias() { return bias_; }
  std::vector<Tensor<T>>& window_kernels() { return window_kernels_; }
  std::vector<Tensor<T>>& physics_map_kernels() { return physics_maps_; }
  cttd::CttdChain<T>& chain() { return chain_; }
  physics::PhysicsSpec<T>& physics_spec() { return spec_; }

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<T>*>> out = {{"w_input", &w_input_},
                                                           {"bias", &bias_}};
    for (std::size_t o = 0; o < window_kernels_.size(); ++o)
      out.emplace_back("window_kernel." + std::to_string(o), &window_kernels_[o]);
    for (std::size_t o = 0; o < physics_maps_.size(); ++o)
      out.emplace_back("physics_map." + std::to_string(o), &physics_maps_[o]);
    for (std::size_t l = 0; l < chain_.cores.size(); ++l)
      out.emplace_back("core." + std::to_string(l), &chain_.cores[l]);
    if (cfg_.kind != physics::Kind::none) out.emplace_back("physics_coeff", &spec_.coeff_raw);
    return out;
  }

 private:
  PittCellConfig cfg_;
  Tensor<T> w_input_, bias_;
  std::vector<Tensor<T>> window_kernels_;
  std::vector<Tensor<T>> physics_maps_;
  cttd::CttdChain<T> chain_;
  physics::PhysicsSpec<T> spec_;
  std::deque<Tensor<T>> history_;  // front = H^{(t-1)}
  Tensor<T> memory_;
  Tensor<T> physics_loss_;
};

}  // namespace ttcast::cells
