#include "ttcast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ttcast/metrics.hpp"

namespace ttcast::trainer {

Tensor<real> total_loss(const std::vector<Tensor<real>>& pred,
                        const std::vector<Tensor<real>>& truth,
                        const Tensor<real>& physics_residual, double lambda) {
  if (pred.size() != truth.size() || pred.empty())
    throw ShapeError("total_loss: frame count mismatch");
  Tensor<real> l1 = Tensor<real>::scalar_value(0.0f);
  Tensor<real> l2 = Tensor<real>::scalar_value(0.0f);
  for (std::size_t t = 0; t < pred.size(); ++t) {
    l1 = add(l1, mae_loss(pred[t], truth[t]));
    l2 = add(l2, mse_loss(pred[t], truth[t]));
  }
  const real inv = real(1.0 / static_cast<double>(pred.size()));
  Tensor<real> loss = add(scale(l1, inv), scale(l2, inv));
  if (lambda != 0.0)
    loss = add(loss, scale(physics_residual, static_cast<real>(lambda)));
  return loss;
}

void adam_step(std::vector<std::pair<std::string, Tensor<real>*>>& params,
               const std::vector<std::vector<real>>& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: param/grad count mismatch");
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    const auto& g = grads[i];
    if (g.size() != p->size()) throw ShapeError("adam_step: gradient shape mismatch for " + name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != g.size()) m.assign(g.size(), 0.0f);
    if (v.size() != g.size()) v.assign(g.size(), 0.0f);
    auto& values = p->mutable_value();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double gk = g[k];
      m[k] = static_cast<float>(b1 * m[k] + (1.0 - b1) * gk);
      v[k] = static_cast<float>(b2 * v[k] + (1.0 - b2) * gk * gk);
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      values[k] = static_cast<float>(values[k] - lr * mhat / (std::sqrt(vhat) + cfg.adam_eps));
    }
  }
}

void schedule_tick(ScheduleState& state, double val_loss, const TrainConfig& cfg) {
  const bool improved =
      !state.has_best || val_loss < state.best_val - cfg.improvement_threshold;
  if (improved) {
    state.best_val = val_loss;
    state.has_best = true;
    state.epochs_since_improvement = 0;
  } else {
    state.epochs_since_improvement += 1;
  }
  if (!state.sampling_active && state.epochs_since_improvement >= cfg.patience) {
    state.sampling_active = true;
    state.sampling_activation_epoch = state.epoch + 1;
    state.epochs_since_improvement = 0;
  } else if (state.sampling_active && !state.lr_decay_active &&
             state.epochs_since_improvement >= cfg.patience) {
    state.lr_decay_active = true;
    state.lr_activation_epoch = state.epoch + 1;
    state.epochs_since_improvement = 0;
  }
  state.epoch += 1;
  if (state.sampling_active) {
    const double k = static_cast<double>(state.epoch - state.sampling_activation_epoch);
    state.sampling_ratio =
        std::max(0.0, 1.0 - k / static_cast<double>(cfg.sampling_ramp_epochs));
  } else {
    state.sampling_ratio = 1.0;
  }
  if (state.lr_decay_active) {
    const std::size_t k = (state.epoch - state.lr_activation_epoch) / cfg.lr_decay_every;
    state.lr = cfg.initial_lr * std::pow(cfg.lr_decay_factor, static_cast<double>(k));
  } else {
    state.lr = cfg.initial_lr;
  }
  if (state.epoch >= cfg.max_epochs || state.epochs_since_improvement >= cfg.hard_patience)
    state.stop = true;
}

std::vector<ScheduleState> schedule_replay(const std::vector<double>& history,
                                           const TrainConfig& cfg) {
  if (history.empty()) throw ContractError("schedule_replay: empty history");
  ScheduleState state;
  state.lr = cfg.initial_lr;
  std::vector<ScheduleState> out;
  for (double v : history) {
    schedule_tick(state, v, cfg);
    out.push_back(state);
  }
  return out;
}

PreparedData prepare(const data::VolumeSequence& seq, std::size_t pcs,
                     const data::SplitSpec& split_spec) {
  auto [pc, basis] = eof::compress(seq, pcs);

  const std::size_t t_train = static_cast<std::size_t>(
      std::floor(split_spec.train_fraction * static_cast<double>(pc.frames)));
  const std::size_t t_val = pc.frames - t_train;
  if (t_train < 20 || t_val < 20)
    throw ConfigError("prepare: series of " + std::to_string(pc.frames) +
                      " frames too short for a 20-frame window on each side");

  const std::size_t frame_size = pc.depths * pc.components * pc.channels;
  std::vector<float> train_values(pc.values.begin(), pc.values.begin() + t_train * frame_size);
  std::vector<float> val_values(pc.values.begin() + t_train * frame_size, pc.values.end());

  PreparedData out;
  out.stats = data::compute_channel_stats(train_values, pc.channels);
  data::normalize_in_place(train_values, pc.channels, out.stats);
  data::normalize_in_place(val_values, pc.channels, out.stats);
  out.basis = std::move(basis);
  out.time_step_hours = pc.time_step_hours;

  auto to_frames = [&](const std::vector<float>& values, std::size_t count) {
    std::vector<Tensor<real>> frames;
    for (std::size_t t = 0; t < count; ++t) {
      std::vector<real> frame(values.begin() + t * frame_size,
                              values.begin() + (t + 1) * frame_size);
      frames.push_back(
          Tensor<real>::from({pc.depths, pc.components, pc.channels}, std::move(frame)));
    }
    return frames;
  };
  out.train_frames = to_frames(train_values, t_train);
  out.val_frames = to_frames(val_values, t_val);
  return out;
}

namespace {

struct ValScore {
  double mse = 0, ssim = 0, l1 = 0, ldp = 0, total = 0;
};

ValScore validate(network::Network& net, const PreparedData& dataset, const TrainConfig& cfg) {
  NoGradGuard ng;
  const std::size_t window = cfg.context_frames + cfg.horizon_frames;
  if (dataset.val_frames.size() < window)
    throw ConfigError("validate: validation split shorter than one window");
  const std::size_t nwin = dataset.val_frames.size() - window + 1;
  std::mt19937 dummy_rng(0);  // no draws happen at sampling_ratio 0
  ValScore score;
  std::size_t frame_count = 0;
  const auto& shape = dataset.val_frames[0].shape();
  const std::size_t h = shape[0], w = shape[1], c = shape[2];
  std::vector<double> a(h * w), b(h * w);
  for (std::size_t s = 0; s < nwin; ++s) {
    std::vector<Tensor<real>> context(dataset.val_frames.begin() + s,
                                      dataset.val_frames.begin() + s + cfg.context_frames);
    network::RolloutResult rr = net.rollout(context, cfg.horizon_frames, nullptr, 0.0, dummy_rng);
    score.ldp += rr.physics_residual.size() ? rr.physics_residual.scalar() : 0.0;
    for (std::size_t t = 0; t < cfg.horizon_frames; ++t) {
      const auto& pred = rr.frames[t].value();
      const auto& truth = dataset.val_frames[s + cfg.context_frames + t].value();
      double acc2 = 0, acc1 = 0;
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
        acc2 += d * d;
        acc1 += std::abs(d);
        lo = std::min(lo, static_cast<double>(truth[i]));
        hi = std::max(hi, static_cast<double>(truth[i]));
      }
      score.mse += acc2 / static_cast<double>(pred.size());
      score.l1 += acc1 / static_cast<double>(pred.size());
      const double range = hi > lo ? hi - lo : 1.0;
      double ssim_acc = 0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t pix = 0; pix < h * w; ++pix) {
          a[pix] = pred[pix * c + ch];
          b[pix] = truth[pix * c + ch];
        }
        ssim_acc += metrics::ssim(a, b, h, w, range);
      }
      score.ssim += ssim_acc / static_cast<double>(c);
      ++frame_count;
    }
  }
  score.mse /= static_cast<double>(frame_count);
  score.l1 /= static_cast<double>(frame_count);
  score.ssim /= static_cast<double>(frame_count);
  score.ldp /= static_cast<double>(nwin);
  score.total = score.l1 + score.mse + cfg.lambda * score.ldp;
  return score;
}

std::string rng_to_string(const std::mt19937& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

void rng_from_string(std::mt19937& rng, const std::string& s) {
  std::istringstream ss(s);
  ss >> rng;
  if (!ss) throw IoError("checkpoint: malformed RNG state");
}

}  // namespace

double persistence_validation_mse(const PreparedData& dataset, const TrainConfig& cfg) {
  const std::size_t window = cfg.context_frames + cfg.horizon_frames;
  if (dataset.val_frames.size() < window)
    throw ConfigError("persistence baseline: validation split shorter than one window");
  const std::size_t nwin = dataset.val_frames.size() - window + 1;
  double total = 0;
  std::size_t frame_count = 0;
  for (std::size_t s = 0; s < nwin; ++s) {
    const auto& last_context = dataset.val_frames[s + cfg.context_frames - 1].value();
    for (std::size_t t = 0; t < cfg.horizon_frames; ++t) {
      const auto& truth = dataset.val_frames[s + cfg.context_frames + t].value();
      double acc = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = static_cast<double>(last_context[i]) - static_cast<double>(truth[i]);
        acc += d * d;
      }
      total += acc / static_cast<double>(truth.size());
      ++frame_count;
    }
  }
  return total / static_cast<double>(frame_count);
}

TrainResult fit(network::Network& net, const PreparedData& dataset, const TrainConfig& cfg,
                const std::string& out_dir, const Checkpoint* resume_from) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const std::size_t window = cfg.context_frames + cfg.horizon_frames;
  if (dataset.train_frames.size() < window)
    throw ConfigError("fit: training split shorter than one window");

  std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
  AdamState adam;
  ScheduleState schedule;
  schedule.lr = cfg.initial_lr;
  if (resume_from) {
    restore(net, *resume_from);
    adam = resume_from->adam;
    schedule = resume_from->schedule;
    rng_from_string(rng, resume_from->rng_state);
    // a resumed run may raise max_epochs past the cap that stopped the old one
    schedule.stop = schedule.epoch >= cfg.max_epochs ||
                    schedule.epochs_since_improvement >= cfg.hard_patience;
  }

  auto params = net.named_params();
  std::vector<std::size_t> starts(dataset.train_frames.size() - window + 1);
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = i;

  const std::string best_path = out_dir + "/best.ckpt";
  const std::string last_path = out_dir + "/last.ckpt";

  TrainResult result;
  result.checkpoint_path = best_path;

  while (!schedule.stop && schedule.epoch < cfg.max_epochs) {
    // shuffle from the identity order so a resumed run sees the same batches
    for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = i;
    std::shuffle(starts.begin(), starts.end(), rng);
    double train_l1 = 0, train_l2 = 0, train_ldp = 0;
    std::size_t member_count = 0;

    for (std::size_t b0 = 0; b0 < starts.size(); b0 += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, starts.size() - b0);
      Tensor<real> batch_loss = Tensor<real>::scalar_value(0.0f);
      for (std::size_t k = 0; k < bsz; ++k) {
        const std::size_t s = starts[b0 + k];
        std::vector<Tensor<real>> context(dataset.train_frames.begin() + s,
                                          dataset.train_frames.begin() + s + cfg.context_frames);
        std::vector<Tensor<real>> target(
            dataset.train_frames.begin() + s + cfg.context_frames,
            dataset.train_frames.begin() + s + window);
        network::RolloutResult rr =
            net.rollout(context, cfg.horizon_frames, &target, schedule.sampling_ratio, rng);
        Tensor<real> member = total_loss(rr.frames, target, rr.physics_residual, cfg.lambda);
        batch_loss = add(batch_loss, member);

        {
          NoGradGuard ng;
          double l1 = 0, l2 = 0;
          for (std::size_t t = 0; t < cfg.horizon_frames; ++t) {
            l1 += mae_loss(rr.frames[t], target[t]).scalar();
            l2 += mse_loss(rr.frames[t], target[t]).scalar();
          }
          train_l1 += l1 / static_cast<double>(cfg.horizon_frames);
          train_l2 += l2 / static_cast<double>(cfg.horizon_frames);
          train_ldp += rr.physics_residual.scalar();
          ++member_count;
        }
      }
      batch_loss = scale(batch_loss, real(1.0 / static_cast<double>(bsz)));
      if (!std::isfinite(static_cast<double>(batch_loss.scalar())))
        throw NumericError("fit: non-finite loss at epoch " + std::to_string(schedule.epoch) +
                           "; last checkpoint retained at " + last_path);
      auto grads = net.grad_context().gradient(batch_loss);
      adam_step(params, grads, adam, schedule.lr, cfg);
    }

    ValScore val = validate(net, dataset, cfg);
    const double prev_best = schedule.has_best ? schedule.best_val : 0.0;
    const bool had_best = schedule.has_best;

    EpochLog row;
    row.epoch = schedule.epoch;
    row.lr = schedule.lr;
    row.sampling_ratio = schedule.sampling_ratio;
    row.train_l1 = train_l1 / static_cast<double>(member_count);
    row.train_l2 = train_l2 / static_cast<double>(member_count);
    row.train_ldp = train_ldp / static_cast<double>(member_count);
    row.val_mse = val.mse;
    row.val_ssim = val.ssim;
    row.val_total = val.total;
    result.log.push_back(row);

    schedule_tick(schedule, val.total, cfg);

    const std::string rng_state = rng_to_string(rng);
    Checkpoint ckpt = snapshot(net, adam, schedule, dataset.basis, dataset.stats, rng_state);
    save_checkpoint(ckpt, last_path);
    if (!had_best || schedule.best_val < prev_best) save_checkpoint(ckpt, best_path);
  }

  result.best_val = schedule.best_val;
  write_log_csv(result.log, out_dir + "/train_log.csv");
  return result;
}

void write_log_csv(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "epoch,lr,sampling_ratio,train_l1,train_l2,train_ldp,val_mse,val_ssim\n";
  out.precision(10);
  for (const auto& r : log)
    out << r.epoch << "," << r.lr << "," << r.sampling_ratio << "," << r.train_l1 << ","
        << r.train_l2 << "," << r.train_ldp << "," << r.val_mse << "," << r.val_ssim << "\n";
  if (!out) throw IoError("short write on '" + path + "'");
}

}  // namespace ttcast::trainer
