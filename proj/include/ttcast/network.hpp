#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ttcast/cells.hpp"

// Assembly of the stacked forecasting network: blocks of recurrent layers,
// channel-concatenating skip connections, a 1×1 output convolution, and the
// autoregressive rollout with scheduled sampling.

namespace ttcast::network {

using real = float;

enum class CellKind { convlstm, tt, pitt_diffusion, pitt_wave };

CellKind cell_kind_from_name(const std::string& s);
std::string cell_kind_name(CellKind k);

struct NetworkConfig {
  std::vector<std::size_t> block_channels{32, 48, 48, 32};
  std::size_t layers_per_block = 3;
  CellKind cell = CellKind::tt;
  std::size_t kernel = 3;
  std::size_t order = 3;  // m
  std::size_t steps = 3;  // n
  std::size_t rank = 8;   // R
  double coeff_init = 0.1;
  // PC-space frame treated as the image plane: D×P with C channels.
  std::size_t frame_height = 30;   // D
  std::size_t frame_width = 50;    // P
  std::size_t frame_channels = 2;  // C
  // Skip s: output of block `from` concatenated to the input of block `to`.
  struct Skip {
    std::size_t from, to;
  };
  std::vector<Skip> skips{{0, 2}, {1, 3}};

  void validate() const;

  static NetworkConfig paper_preset(CellKind cell, std::size_t depths, std::size_t pcs,
                                    std::size_t channels);
  static NetworkConfig desk_preset(CellKind cell, std::size_t depths, std::size_t pcs,
                                   std::size_t channels);
};

struct RolloutResult {
  std::vector<Tensor<real>> frames;
  Tensor<real> physics_residual;  // unweighted L_dp accumulated over the rollout
};

class Network {
 public:
  Network(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }

  void reset_state();

  // One recurrent pass over a D×P×C frame; returns the predicted next frame.
  Tensor<real> step(const Tensor<real>& frame);

  // Sum of the physics residuals accumulated by the cells since reset_state().
  Tensor<real> physics_residual() const;

  // Consumes the context, then emits `horizon` frames; at each feedback step a
  // seeded draw picks the teacher frame with probability sampling_ratio.
  RolloutResult rollout(const std::vector<Tensor<real>>& context, std::size_t horizon,
                        const std::vector<Tensor<real>>* teacher, double sampling_ratio,
                        std::mt19937& rng);

  std::vector<std::pair<std::string, Tensor<real>*>> named_params();
  std::size_t param_count();

  // Factorized state-to-state parameter total and its dense higher-order
  // equivalent, summed over all recurrent layers (zero for plain ConvLSTM).
  std::size_t chain_param_count();
  std::size_t dense_equivalent_chain_count() const;

  GradientContext<real>& grad_context() { return ctx_; }

 private:
  struct Layer {
    std::unique_ptr<cells::ConvLstmCell<real>> convlstm;
    std::unique_ptr<cells::PittConvLstmCell<real>> pitt;
  };

  NetworkConfig config_;
  std::vector<std::vector<Layer>> blocks_;
  Tensor<real> out_kernel_, out_bias_;
  GradientContext<real> ctx_;
};

}  // namespace ttcast::network
