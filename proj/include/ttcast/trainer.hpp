#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ttcast/checkpoint.hpp"
#include "ttcast/data.hpp"
#include "ttcast/eof.hpp"
#include "ttcast/network.hpp"

// Objective assembly, ADAM optimization, scheduled-sampling and learning-rate
// schedules, and the training loop with checkpoint persistence.

namespace ttcast::trainer {

using network::real;

struct TrainConfig {
  double initial_lr = 1e-4;
  double lr_decay_factor = 0.98;
  std::size_t lr_decay_every = 5;
  std::size_t patience = 20;  // epochs without improvement before each activation
  double lambda = 0.1;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  std::size_t sampling_ramp_epochs = 50;
  double improvement_threshold = 1e-5;
  std::size_t hard_patience = 80;  // stop ceiling on stagnant epochs
  std::size_t context_frames = 10, horizon_frames = 10;

  void validate() const {
    if (lr_decay_factor <= 0.0 || lr_decay_factor >= 1.0)
      throw ConfigError("train: lr_decay_factor must be in (0,1)");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (batch_size < 1 || max_epochs < 1) throw ConfigError("train: degenerate batch/epochs");
    if (sampling_ramp_epochs < 1) throw ConfigError("train: sampling ramp must be >= 1");
  }
};

// L = L1 (mean absolute) + L2 (mean squared) + lambda·L_dp, averaged over frames.
Tensor<real> total_loss(const std::vector<Tensor<real>>& pred,
                        const std::vector<Tensor<real>>& truth,
                        const Tensor<real>& physics_residual, double lambda);

// One bias-corrected ADAM update over named parameter/gradient pairs.
void adam_step(std::vector<std::pair<std::string, Tensor<real>*>>& params,
               const std::vector<std::vector<real>>& grads, AdamState& state, double lr,
               const TrainConfig& cfg);

// Advances the schedule with one epoch's validation loss. Sampling ratio stays
// at 1 until `patience` stagnant epochs, then ramps linearly to 0; a further
// `patience` stagnant epochs activate the exponential lr decay.
void schedule_tick(ScheduleState& state, double val_loss, const TrainConfig& cfg);

// Replays a scripted loss history through the schedule; used by tests.
std::vector<ScheduleState> schedule_replay(const std::vector<double>& history,
                                           const TrainConfig& cfg);

// PC-space dataset after compress → split → normalize.
struct PreparedData {
  std::vector<Tensor<real>> train_frames, val_frames;  // each D×P×C
  eof::EofBasis basis;
  data::ChannelStats stats;
  double time_step_hours = 12.0;
};

PreparedData prepare(const data::VolumeSequence& seq, std::size_t pcs,
                     const data::SplitSpec& split_spec = {});

struct EpochLog {
  std::size_t epoch;
  double lr, sampling_ratio;
  double train_l1, train_l2, train_ldp;
  double val_mse, val_ssim, val_total;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::string checkpoint_path;
  double best_val = 0.0;
};

// Runs the training loop; writes the best-validation checkpoint and a CSV log
// under out_dir. Pass a loaded checkpoint to resume exactly where it left off.
TrainResult fit(network::Network& net, const PreparedData& dataset, const TrainConfig& cfg,
                const std::string& out_dir, const Checkpoint* resume_from = nullptr);

void write_log_csv(const std::vector<EpochLog>& log, const std::string& path);

// Validation MSE of the persistence forecast (repeat the last context frame).
double persistence_validation_mse(const PreparedData& dataset, const TrainConfig& cfg);

}  // namespace ttcast::trainer
