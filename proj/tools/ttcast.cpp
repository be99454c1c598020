// Command-line front end: data generation, training, prediction, evaluation,
// heatmap rendering, and manifest replay. Every command freezes its resolved
// configuration into a RunManifest JSON so a run can be replayed bit-for-bit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttcast/checkpoint.hpp"
#include "ttcast/data.hpp"
#include "ttcast/eof.hpp"
#include "ttcast/metrics.hpp"
#include "ttcast/network.hpp"
#include "ttcast/trainer.hpp"
#include "ttcast/util.hpp"

using nlohmann::json;
using namespace ttcast;

namespace {

std::string file_digest(const std::string& path) {
  const std::vector<char> bytes = util::read_file(path);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", util::crc32_bytes(bytes.data(), bytes.size()));
  return buf;
}

void write_manifest(const std::string& command, const json& cfg, const json& inputs,
                    const json& outputs, const std::string& path) {
  json m;
  m["tool"] = util::version_string();
  m["command"] = command;
  m["config"] = cfg;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  const std::string text = m.dump(2) + "\n";
  util::write_file(path, text.data(), text.size());
}

// PC-space series round-trip through VSEQ1: stored as T×D×1×P×C.
data::VolumeSequence pc_to_volume(const eof::PcSequence& pc) {
  data::VolumeSequence v;
  v.frames = pc.frames;
  v.depths = pc.depths;
  v.height = 1;
  v.width = pc.components;
  v.channels = pc.channels;
  v.time_step_hours = pc.time_step_hours;
  v.axis_names = {"time", "depth", "pc", "component", "channel"};
  v.values = pc.values;
  return v;
}

eof::PcSequence volume_to_pc(const data::VolumeSequence& v) {
  if (v.height != 1) throw ShapeError("expected a PC-space series (height 1), got height " +
                                      std::to_string(v.height));
  eof::PcSequence pc;
  pc.frames = v.frames;
  pc.depths = v.depths;
  pc.components = v.width;
  pc.channels = v.channels;
  pc.time_step_hours = v.time_step_hours;
  pc.values = v.values;
  return pc;
}

std::string pc_output_path(const std::string& out) {
  const std::string ext = ".vseq";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + ".pc.vseq";
  return out + ".pc.vseq";
}

void run_gen_data(const json& cfg) {
  const auto kind = data::field_kind_from_name(cfg.at("kind"));
  const std::vector<std::size_t> shape = cfg.at("shape");
  if (shape.size() != 4) throw ConfigError("gen-data: --shape must be T,D,H,W");
  data::SyntheticParams params;
  params.alpha = cfg.at("alpha");
  params.c2 = cfg.at("c2");
  params.modes = cfg.at("modes");
  const std::uint64_t seed = cfg.at("seed");
  const std::string out = cfg.at("out");

  data::VolumeSequence seq =
      data::generate_synthetic(kind, shape[0], shape[1], shape[2], shape[3], params, seed);
  data::save(seq, out);
  const std::string digest = file_digest(out);
  write_manifest("gen-data", cfg, json::object(), json{{"data", out}, {"digest", digest}},
                 out + ".manifest.json");
  std::cout << "wrote " << out << " shape " << shape[0] << "x" << shape[1] << "x" << shape[2]
            << "x" << shape[3] << "x" << seq.channels << " digest " << digest << "\n";
}

void run_train(const json& cfg) {
  const std::string data_path = cfg.at("data");
  if (!std::filesystem::exists(data_path))
    throw IoError("train: data file '" + data_path + "' not found");
  const std::string dataset_digest = file_digest(data_path);

  const auto cell = network::cell_kind_from_name(cfg.at("cell"));
  const std::string preset = cfg.at("preset");
  const std::size_t pcs = cfg.at("pcs");

  data::VolumeSequence seq = data::load(data_path);
  trainer::PreparedData prep = trainer::prepare(seq, pcs);

  network::NetworkConfig ncfg =
      preset == "paper"
          ? network::NetworkConfig::paper_preset(cell, seq.depths, pcs, seq.channels)
          : network::NetworkConfig::desk_preset(cell, seq.depths, pcs, seq.channels);

  trainer::TrainConfig tcfg;
  tcfg.lambda = cfg.at("lambda");
  tcfg.max_epochs = cfg.at("epochs");
  tcfg.seed = cfg.at("seed");
  const std::string out_dir = cfg.at("out_dir");

  network::Network net(ncfg, tcfg.seed);
  std::cout << "cell " << network::cell_kind_name(cell) << " preset " << preset
            << " parameters " << net.param_count() << "\n";

  trainer::Checkpoint resume;
  const trainer::Checkpoint* resume_ptr = nullptr;
  if (cfg.contains("resume") && !cfg.at("resume").get<std::string>().empty()) {
    resume = trainer::load_checkpoint(cfg.at("resume"));
    resume_ptr = &resume;
  }

  trainer::TrainResult result = trainer::fit(net, prep, tcfg, out_dir, resume_ptr);
  write_manifest("train", cfg, json{{"data", data_path}, {"digest", dataset_digest}},
                 json{{"checkpoint", result.checkpoint_path},
                      {"log", out_dir + "/train_log.csv"}},
                 out_dir + "/manifest.json");
  std::cout << "best validation loss " << result.best_val << " checkpoint "
            << result.checkpoint_path << "\n";
}

void run_predict(const json& cfg) {
  const std::size_t horizon = cfg.at("horizon");
  if (horizon < 1) throw ConfigError("predict: horizon must be >= 1");
  const std::string ckpt_path = cfg.at("checkpoint");
  const std::string context_path = cfg.at("context");
  const std::string out = cfg.at("out");

  trainer::Checkpoint ckpt = trainer::load_checkpoint(ckpt_path);
  if (ckpt.basis.slices.empty())
    throw IoError("predict: checkpoint carries no EOF basis");
  network::Network net(ckpt.net_config, 0);
  trainer::restore(net, ckpt);

  const std::size_t warmup =
      ckpt.net_config.cell == network::CellKind::convlstm ? 1 : ckpt.net_config.steps;
  data::VolumeSequence context_seq = data::load(context_path);
  if (context_seq.frames < warmup)
    throw ConfigError("predict: context holds " + std::to_string(context_seq.frames) +
                      " frames, fewer than the network warm-up of " + std::to_string(warmup));

  eof::PcSequence pc = context_seq.height == 1 ? volume_to_pc(context_seq)
                                               : eof::project(context_seq, ckpt.basis);
  data::normalize_in_place(pc.values, pc.channels, ckpt.stats);

  const std::size_t frame_size = pc.depths * pc.components * pc.channels;
  std::vector<Tensor<network::real>> context;
  for (std::size_t t = 0; t < pc.frames; ++t) {
    std::vector<float> frame(pc.values.begin() + t * frame_size,
                             pc.values.begin() + (t + 1) * frame_size);
    context.push_back(Tensor<network::real>::from({pc.depths, pc.components, pc.channels},
                                                  std::move(frame)));
  }

  NoGradGuard ng;
  std::mt19937 rng(0);
  network::RolloutResult rr = net.rollout(context, horizon, nullptr, 0.0, rng);

  eof::PcSequence pred;
  pred.frames = horizon;
  pred.depths = pc.depths;
  pred.components = pc.components;
  pred.channels = pc.channels;
  pred.time_step_hours = pc.time_step_hours;
  pred.values.reserve(horizon * frame_size);
  for (const auto& f : rr.frames)
    pred.values.insert(pred.values.end(), f.value().begin(), f.value().end());
  data::denormalize_in_place(pred.values, pred.channels, ckpt.stats);

  const std::string pc_path = pc_output_path(out);
  data::save(pc_to_volume(pred), pc_path);
  data::VolumeSequence phys = eof::reconstruct(pred, ckpt.basis);
  data::save(phys, out);

  write_manifest("predict", cfg,
                 json{{"checkpoint", ckpt_path},
                      {"checkpoint_digest", file_digest(ckpt_path)},
                      {"context", context_path},
                      {"context_digest", file_digest(context_path)}},
                 json{{"physical", out}, {"pc", pc_path}}, out + ".manifest.json");
  std::cout << "wrote " << out << " and " << pc_path << " (" << horizon << " frames)\n";
}

void run_evaluate(const json& cfg) {
  const std::string pred_path = cfg.at("pred");
  const std::string truth_path = cfg.at("truth");
  const std::string out_csv = cfg.at("out_csv");

  trainer::Checkpoint ckpt;
  const eof::EofBasis* basis = nullptr;
  if (cfg.contains("basis_from") && !cfg.at("basis_from").get<std::string>().empty()) {
    ckpt = trainer::load_checkpoint(cfg.at("basis_from"));
    if (!ckpt.basis.slices.empty()) basis = &ckpt.basis;
  }

  auto to_pc = [&](const data::VolumeSequence& v) {
    if (v.height == 1) return volume_to_pc(v);
    if (!basis)
      throw ConfigError("evaluate: physical-space input needs --basis-from for projection");
    return eof::project(v, *basis);
  };
  eof::PcSequence pred = to_pc(data::load(pred_path));
  eof::PcSequence truth_full = to_pc(data::load(truth_path));
  if (truth_full.frames < pred.frames)
    throw ShapeError("evaluate: truth holds fewer frames than prediction");
  eof::PcSequence truth = truth_full;
  truth.frames = pred.frames;
  truth.values.resize(pred.frames * pred.depths * pred.components * pred.channels);

  metrics::EvalReport report = metrics::evaluate(pred, truth, basis);
  metrics::write_report_csv(report, out_csv);
  write_manifest("evaluate", cfg,
                 json{{"pred", pred_path},
                      {"pred_digest", file_digest(pred_path)},
                      {"truth", truth_path},
                      {"truth_digest", file_digest(truth_path)}},
                 json{{"csv", out_csv}}, out_csv + ".manifest.json");
  std::cout << "horizon " << report.horizon << " pc_mse " << report.pc_mse_mean;
  if (basis) std::cout << " phys_mse " << report.phys_mse_mean;
  std::cout << "\n";
}

// Heatmap of lg(max(sqrt(u^2+v^2), 1e-6)). Color ramp over t in [0,1] anchored
// at the log floor -6 (t=0) and the frame maximum (t=1):
//   r = 255 t, g = 255 * 4 t (1-t), b = 255 (1-t)
void run_render(const json& cfg) {
  const std::string in_path = cfg.at("in");
  const std::size_t frame = cfg.at("frame");
  const std::size_t depth = cfg.at("depth");
  const std::string out = cfg.at("out");

  data::VolumeSequence seq = data::load(in_path);
  if (frame >= seq.frames)
    throw ConfigError("render: frame " + std::to_string(frame) + " out of range (have " +
                      std::to_string(seq.frames) + ")");
  if (depth >= seq.depths)
    throw ConfigError("render: depth " + std::to_string(depth) + " out of range (have " +
                      std::to_string(seq.depths) + ")");

  const std::size_t h = seq.height, w = seq.width;
  std::vector<double> mag(h * w);
  double hi = -6.0;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double u = seq.at(frame, depth, i, j, 0);
      const double v = seq.channels > 1 ? seq.at(frame, depth, i, j, 1) : 0.0;
      const double m = std::log10(std::max(std::sqrt(u * u + v * v), 1e-6));
      mag[i * w + j] = m;
      hi = std::max(hi, m);
    }

  std::string ppm = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const double span = hi - (-6.0);
  for (double m : mag) {
    const double t = span > 0.0 ? std::clamp((m + 6.0) / span, 0.0, 1.0) : 0.0;
    const auto byte = [](double x) {
      return static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * x)));
    };
    ppm.push_back(byte(t));
    ppm.push_back(byte(4.0 * t * (1.0 - t)));
    ppm.push_back(byte(1.0 - t));
  }
  util::write_file(out, ppm.data(), ppm.size());
  write_manifest("render", cfg, json{{"in", in_path}, {"in_digest", file_digest(in_path)}},
                 json{{"image", out}}, out + ".manifest.json");
  std::cout << "wrote " << out << " (" << w << "x" << h << ")\n";
}

void dispatch(const std::string& command, const json& cfg) {
  if (command == "gen-data") return run_gen_data(cfg);
  if (command == "train") return run_train(cfg);
  if (command == "predict") return run_predict(cfg);
  if (command == "evaluate") return run_evaluate(cfg);
  if (command == "render") return run_render(cfg);
  throw ConfigError("unknown command '" + command + "' in manifest");
}

void run_replay(const json& cfg) {
  const std::string path = cfg.at("manifest");
  const std::vector<char> bytes = util::read_file(path);
  json m;
  try {
    m = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw IoError("replay: cannot parse manifest '" + path + "': " + e.what());
  }
  if (!m.contains("command") || !m.contains("config"))
    throw IoError("replay: manifest '" + path + "' missing command/config");
  dispatch(m.at("command"), m.at("config"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ttcast: tensor-train forecasting toolkit for gridded field sequences"};
  app.set_version_flag("--version", util::version_string());
  app.require_subcommand(1);

  json cfg;
  std::string command;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic PDE dataset (VSEQ1)");
  {
    cfg["gen-data"] = {{"kind", "wave"},    {"shape", std::vector<std::size_t>{200, 4, 16, 16}},
                       {"alpha", 0.1},      {"c2", 0.2},
                       {"modes", 3},        {"seed", 0},
                       {"out", "data.vseq"}};
    auto& c = cfg["gen-data"];
    gen->add_option_function<std::string>("--kind", [&](const std::string& v) { c["kind"] = v; },
                                          "diffusion|wave|mixed");
    gen->add_option_function<std::vector<std::size_t>>(
        "--shape", [&](const std::vector<std::size_t>& v) { c["shape"] = v; }, "T,D,H,W")
        ->delimiter(',');
    gen->add_option_function<double>("--alpha", [&](double v) { c["alpha"] = v; },
                                     "diffusivity (<= 0.25)");
    gen->add_option_function<double>("--c2", [&](double v) { c["c2"] = v; },
                                     "wave speed squared (2*c2 <= 1)");
    gen->add_option_function<std::size_t>("--modes", [&](std::size_t v) { c["modes"] = v; },
                                          "initial-condition mode count");
    gen->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { c["seed"] = v; },
                                            "RNG seed");
    gen->add_option_function<std::string>("--out", [&](const std::string& v) { c["out"] = v; },
                                          "output VSEQ1 path")
        ->required();
  }

  auto* train = app.add_subcommand("train", "Train a forecasting model");
  {
    cfg["train"] = {{"data", ""},   {"cell", "pitt-wave"}, {"preset", "desk"}, {"pcs", 0},
                    {"lambda", 0.1}, {"epochs", 50},        {"seed", 0},
                    {"out_dir", "run"}, {"resume", ""}};
    auto& c = cfg["train"];
    train->add_option_function<std::string>("--data", [&](const std::string& v) { c["data"] = v; },
                                            "input VSEQ1 path")
        ->required();
    train->add_option_function<std::string>(
        "--cell", [&](const std::string& v) { c["cell"] = v; },
        "convlstm|tt|pitt-diffusion|pitt-wave");
    train->add_option_function<std::string>(
            "--preset", [&](const std::string& v) { c["preset"] = v; }, "paper|desk")
        ->check(CLI::IsMember({"paper", "desk"}));
    train->add_option_function<std::size_t>("--pcs", [&](std::size_t v) { c["pcs"] = v; },
                                            "retained PCs (default 16 desk, 50 paper)");
    train->add_option_function<double>("--lambda", [&](double v) { c["lambda"] = v; },
                                       "physics-loss weight");
    train->add_option_function<std::size_t>("--epochs", [&](std::size_t v) { c["epochs"] = v; },
                                            "epoch cap");
    train->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { c["seed"] = v; },
                                              "RNG seed");
    train->add_option_function<std::string>(
            "--out-dir", [&](const std::string& v) { c["out_dir"] = v; }, "output directory")
        ->required();
    train->add_option_function<std::string>(
        "--resume", [&](const std::string& v) { c["resume"] = v; }, "checkpoint to resume from");
  }

  auto* predict = app.add_subcommand("predict", "Roll a trained model forward");
  {
    cfg["predict"] = {{"checkpoint", ""}, {"context", ""}, {"horizon", 10}, {"out", ""}};
    auto& c = cfg["predict"];
    predict->add_option_function<std::string>(
            "--checkpoint", [&](const std::string& v) { c["checkpoint"] = v; }, "checkpoint path")
        ->required();
    predict->add_option_function<std::string>(
            "--context", [&](const std::string& v) { c["context"] = v; },
            "VSEQ1 context frames (physical or PC space)")
        ->required();
    predict->add_option_function<std::size_t>(
        "--horizon", [&](std::size_t v) { c["horizon"] = v; }, "frames to predict");
    predict->add_option_function<std::string>(
            "--out", [&](const std::string& v) { c["out"] = v; },
            "physical-space output path (PC output beside it)")
        ->required();
  }

  auto* evaluate = app.add_subcommand("evaluate", "Frame-wise MSE/SSIM report");
  {
    cfg["evaluate"] = {{"pred", ""}, {"truth", ""}, {"basis_from", ""}, {"out_csv", ""}};
    auto& c = cfg["evaluate"];
    evaluate->add_option_function<std::string>(
            "--pred", [&](const std::string& v) { c["pred"] = v; }, "predicted VSEQ1")
        ->required();
    evaluate->add_option_function<std::string>(
            "--truth", [&](const std::string& v) { c["truth"] = v; }, "ground-truth VSEQ1")
        ->required();
    evaluate->add_option_function<std::string>(
        "--basis-from", [&](const std::string& v) { c["basis_from"] = v; },
        "checkpoint providing the EOF basis");
    evaluate->add_option_function<std::string>(
            "--out-csv", [&](const std::string& v) { c["out_csv"] = v; }, "metrics CSV path")
        ->required();
  }

  auto* render = app.add_subcommand("render", "P6 heatmap of lg(max(sqrt(u^2+v^2), 1e-6))");
  {
    cfg["render"] = {{"in", ""}, {"frame", 0}, {"depth", 0}, {"out", ""}};
    auto& c = cfg["render"];
    render->add_option_function<std::string>("--in", [&](const std::string& v) { c["in"] = v; },
                                             "input VSEQ1")
        ->required();
    render->add_option_function<std::size_t>("--frame", [&](std::size_t v) { c["frame"] = v; },
                                             "frame index");
    render->add_option_function<std::size_t>("--depth", [&](std::size_t v) { c["depth"] = v; },
                                             "depth index");
    render->add_option_function<std::string>("--out", [&](const std::string& v) { c["out"] = v; },
                                             "output .ppm path")
        ->required();
  }

  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  {
    cfg["replay"] = {{"manifest", ""}};
    auto& c = cfg["replay"];
    replay->add_option_function<std::string>(
            "--manifest", [&](const std::string& v) { c["manifest"] = v; }, "manifest JSON path")
        ->required();
  }

  gen->callback([&] { command = "gen-data"; });
  train->callback([&] { command = "train"; });
  predict->callback([&] { command = "predict"; });
  evaluate->callback([&] { command = "evaluate"; });
  render->callback([&] { command = "render"; });
  replay->callback([&] { command = "replay"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (command == "train") {
      auto& c = cfg["train"];
      if (c["pcs"].get<std::size_t>() == 0)
        c["pcs"] = c["preset"].get<std::string>() == "paper" ? 50 : 16;
    }
    if (command == "replay")
      run_replay(cfg["replay"]);
    else
      dispatch(command, cfg[command]);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << e.what() << "\n";
    return 4;
  } catch (const Error& e) {  // shape / lookup / io
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
