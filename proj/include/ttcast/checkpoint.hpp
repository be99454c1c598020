#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ttcast/data.hpp"
#include "ttcast/eof.hpp"
#include "ttcast/network.hpp"

// Checkpoint container: magic "PITT", version u32, JSON metadata block (names,
// shapes, offsets, config, schedule, RNG state), 8-byte-aligned raw float32
// payload, trailing CRC-32 of the payload. save→load→save is byte-identical.

namespace ttcast::trainer {

struct ScheduleState {
  std::size_t epoch = 0;
  double sampling_ratio = 1.0;
  double lr = 1e-4;
  double best_val = 0.0;
  bool has_best = false;
  std::size_t epochs_since_improvement = 0;
  bool sampling_active = false;
  std::size_t sampling_activation_epoch = 0;
  bool lr_decay_active = false;
  std::size_t lr_activation_epoch = 0;
  bool stop = false;
};

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, std::vector<float>> m, v;
};

struct Checkpoint {
  network::NetworkConfig net_config;
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<float>>> params;
  AdamState adam;
  ScheduleState schedule;
  eof::EofBasis basis;
  data::ChannelStats stats;
  std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Copies the network's current parameters into a checkpoint skeleton.
Checkpoint snapshot(network::Network& net, const AdamState& adam, const ScheduleState& schedule,
                    const eof::EofBasis& basis, const data::ChannelStats& stats,
                    const std::string& rng_state);

// Writes checkpoint parameters (and optimizer state) back into the network.
void restore(network::Network& net, const Checkpoint& ckpt);

}  // namespace ttcast::trainer
