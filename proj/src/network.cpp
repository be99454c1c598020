#include "ttcast/network.hpp"

namespace ttcast::network {

CellKind cell_kind_from_name(const std::string& s) {
  if (s == "convlstm") return CellKind::convlstm;
  if (s == "tt") return CellKind::tt;
  if (s == "pitt-diffusion") return CellKind::pitt_diffusion;
  if (s == "pitt-wave") return CellKind::pitt_wave;
  throw ConfigError("unknown cell kind '" + s + "'");
}

std::string cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::convlstm: return "convlstm";
    case CellKind::tt: return "tt";
    case CellKind::pitt_diffusion: return "pitt-diffusion";
    case CellKind::pitt_wave: return "pitt-wave";
  }
  return "?";
}

void NetworkConfig::validate() const {
  if (block_channels.empty()) throw ConfigError("network: no blocks");
  if (layers_per_block < 1) throw ConfigError("network: layers_per_block < 1");
  if (frame_height < 1 || frame_width < 1 || frame_channels < 1)
    throw ConfigError("network: degenerate frame shape");
  for (const Skip& s : skips) {
    if (s.from >= block_channels.size() || s.to >= block_channels.size())
      throw ConfigError("network: skip references block out of range");
    if (s.from >= s.to) throw ConfigError("network: skip must go forward");
  }
}

NetworkConfig NetworkConfig::paper_preset(CellKind cell, std::size_t depths, std::size_t pcs,
                                          std::size_t channels) {
  NetworkConfig c;
  c.cell = cell;
  c.frame_height = depths;
  c.frame_width = pcs;
  c.frame_channels = channels;
  return c;
}

NetworkConfig NetworkConfig::desk_preset(CellKind cell, std::size_t depths, std::size_t pcs,
                                         std::size_t channels) {
  NetworkConfig c;
  c.cell = cell;
  c.block_channels = {8, 8};
  c.layers_per_block = 2;
  c.skips.clear();
  c.frame_height = depths;
  c.frame_width = pcs;
  c.frame_channels = channels;
  return c;
}

namespace {

physics::Kind physics_kind_of(CellKind k) {
  switch (k) {
    case CellKind::pitt_diffusion: return physics::Kind::diffusion;
    case CellKind::pitt_wave: return physics::Kind::wave;
    default: return physics::Kind::none;
  }
}

// Input channel width of layer `l` of block `b`, accounting for skip concat.
std::size_t layer_in_channels(const NetworkConfig& cfg, std::size_t b, std::size_t l) {
  if (l > 0) return cfg.block_channels[b];
  std::size_t c = b == 0 ? cfg.frame_channels : cfg.block_channels[b - 1];
  for (const auto& s : cfg.skips)
    if (s.to == b) c += cfg.block_channels[s.from];
  return c;
}

}  // namespace

Network::Network(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config.validate();
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  const std::size_t nblocks = config.block_channels.size();
  for (std::size_t b = 0; b < nblocks; ++b) {
    std::vector<Layer> block;
    for (std::size_t l = 0; l < config.layers_per_block; ++l) {
      const std::size_t in_c = layer_in_channels(config, b, l);
      const std::size_t c = config.block_channels[b];
      Layer layer;
      if (config.cell == CellKind::convlstm) {
        layer.convlstm =
            std::make_unique<cells::ConvLstmCell<real>>(in_c, c, config.kernel, rng);
      } else {
        cells::PittCellConfig pc;
        pc.in_channels = in_c;
        pc.channels = c;
        pc.kernel = config.kernel;
        pc.order = config.order;
        pc.steps = config.steps;
        pc.rank = config.rank;
        pc.kind = physics_kind_of(config.cell);
        pc.coeff_init = config.coeff_init;
        layer.pitt = std::make_unique<cells::PittConvLstmCell<real>>(pc, rng);
      }
      block.push_back(std::move(layer));
    }
    blocks_.push_back(std::move(block));
  }
  const std::size_t last_c = config.block_channels.back();
  out_kernel_ = Tensor<real>::zeros({1, 1, last_c, config.frame_channels});
  init_conv_kernel(out_kernel_, last_c, rng);
  out_bias_ = Tensor<real>::zeros({config.frame_channels});

  for (auto& [name, p] : named_params()) {
    (void)name;
    ctx_.track(*p);
  }
}

void Network::reset_state() {
  for (auto& block : blocks_)
    for (auto& layer : block) {
      if (layer.convlstm) layer.convlstm->reset(config_.frame_height, config_.frame_width);
      if (layer.pitt) layer.pitt->reset(config_.frame_height, config_.frame_width);
    }
}

Tensor<real> Network::step(const Tensor<real>& frame) {
  std::vector<Tensor<real>> block_outputs;
  Tensor<real> cur = frame;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    std::vector<Tensor<real>> inputs{cur};
    for (const auto& s : config_.skips)
      if (s.to == b) inputs.push_back(block_outputs[s.from]);
    cur = inputs.size() == 1 ? inputs[0] : concat_channels(inputs);
    for (auto& layer : blocks_[b])
      cur = layer.convlstm ? layer.convlstm->step(cur) : layer.pitt->step(cur);
    block_outputs.push_back(cur);
  }
  return conv2d(cur, out_kernel_, &out_bias_);
}

Tensor<real> Network::physics_residual() const {
  Tensor<real> total = Tensor<real>::scalar_value(0.0f);
  for (const auto& block : blocks_)
    for (const auto& layer : block)
      if (layer.pitt && layer.pitt->config().kind != physics::Kind::none)
        total = add(total, layer.pitt->physics_loss());
  return total;
}

RolloutResult Network::rollout(const std::vector<Tensor<real>>& context, std::size_t horizon,
                               const std::vector<Tensor<real>>* teacher, double sampling_ratio,
                               std::mt19937& rng) {
  if (context.empty()) throw ContractError("rollout: context must hold at least one frame");
  if (horizon < 1) throw ConfigError("rollout: horizon must be >= 1");
  if (sampling_ratio > 0.0 && (!teacher || teacher->size() < horizon))
    throw ContractError("rollout: teacher frames shorter than horizon with sampling_ratio > 0");

  reset_state();
  Tensor<real> pred;
  for (const auto& frame : context) pred = step(frame);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RolloutResult out;
  out.frames.push_back(pred);
  for (std::size_t i = 1; i < horizon; ++i) {
    Tensor<real> next_input = pred;
    if (sampling_ratio > 0.0 && unit(rng) < sampling_ratio) next_input = (*teacher)[i - 1];
    pred = step(next_input);
    out.frames.push_back(pred);
  }
  out.physics_residual = physics_residual();
  return out;
}

std::vector<std::pair<std::string, Tensor<real>*>> Network::named_params() {
  std::vector<std::pair<std::string, Tensor<real>*>> out;
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    for (std::size_t l = 0; l < blocks_[b].size(); ++l) {
      const std::string prefix =
          "block" + std::to_string(b) + ".layer" + std::to_string(l) + ".";
      auto cell_params = blocks_[b][l].convlstm ? blocks_[b][l].convlstm->named_params()
                                                : blocks_[b][l].pitt->named_params();
      for (auto& [name, p] : cell_params) out.emplace_back(prefix + name, p);
    }
  out.emplace_back("out.kernel", &out_kernel_);
  out.emplace_back("out.bias", &out_bias_);
  return out;
}

std::size_t Network::param_count() {
  std::size_t n = 0;
  for (auto& [name, p] : named_params()) {
    (void)name;
    n += p->size();
  }
  return n;
}

std::size_t Network::chain_param_count() {
  std::size_t n = 0;
  for (auto& block : blocks_)
    for (auto& layer : block)
      if (layer.pitt) n += cttd::param_count(layer.pitt->chain());
  return n;
}

std::size_t Network::dense_equivalent_chain_count() const {
  std::size_t n = 0;
  for (const auto& block : blocks_)
    for (const auto& layer : block)
      if (layer.pitt) {
        const auto& cfg = layer.pitt->config();
        std::vector<std::size_t> ranks(cfg.order, cfg.rank);
        ranks.push_back(4 * cfg.channels);
        n += cttd::dense_equivalent_count(cfg.order, cfg.kernel, ranks);
      }
  return n;
}

}  // namespace ttcast::network
