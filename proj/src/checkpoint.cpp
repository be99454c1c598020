#include "ttcast/checkpoint.hpp"

#include <cstring>

#include "json.hpp"
#include "ttcast/util.hpp"

namespace ttcast::trainer {

namespace {

constexpr char kMagic[4] = {'P', 'I', 'T', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

nlohmann::json config_to_json(const network::NetworkConfig& c) {
  nlohmann::json skips = nlohmann::json::array();
  for (const auto& s : c.skips) skips.push_back({{"from", s.from}, {"to", s.to}});
  return {
      {"block_channels", c.block_channels},
      {"layers_per_block", c.layers_per_block},
      {"cell", network::cell_kind_name(c.cell)},
      {"kernel", c.kernel},
      {"order", c.order},
      {"steps", c.steps},
      {"rank", c.rank},
      {"coeff_init", c.coeff_init},
      {"frame_height", c.frame_height},
      {"frame_width", c.frame_width},
      {"frame_channels", c.frame_channels},
      {"skips", skips},
  };
}

network::NetworkConfig config_from_json(const nlohmann::json& j) {
  network::NetworkConfig c;
  c.block_channels = j.at("block_channels").get<std::vector<std::size_t>>();
  c.layers_per_block = j.at("layers_per_block").get<std::size_t>();
  c.cell = network::cell_kind_from_name(j.at("cell").get<std::string>());
  c.kernel = j.at("kernel").get<std::size_t>();
  c.order = j.at("order").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.rank = j.at("rank").get<std::size_t>();
  c.coeff_init = j.at("coeff_init").get<double>();
  c.frame_height = j.at("frame_height").get<std::size_t>();
  c.frame_width = j.at("frame_width").get<std::size_t>();
  c.frame_channels = j.at("frame_channels").get<std::size_t>();
  c.skips.clear();
  for (const auto& s : j.at("skips"))
    c.skips.push_back({s.at("from").get<std::size_t>(), s.at("to").get<std::size_t>()});
  return c;
}

nlohmann::json schedule_to_json(const ScheduleState& s) {
  return {
      {"epoch", s.epoch},
      {"sampling_ratio", s.sampling_ratio},
      {"lr", s.lr},
      {"best_val", s.best_val},
      {"has_best", s.has_best},
      {"epochs_since_improvement", s.epochs_since_improvement},
      {"sampling_active", s.sampling_active},
      {"sampling_activation_epoch", s.sampling_activation_epoch},
      {"lr_decay_active", s.lr_decay_active},
      {"lr_activation_epoch", s.lr_activation_epoch},
      {"stop", s.stop},
  };
}

ScheduleState schedule_from_json(const nlohmann::json& j) {
  ScheduleState s;
  s.epoch = j.at("epoch").get<std::size_t>();
  s.sampling_ratio = j.at("sampling_ratio").get<double>();
  s.lr = j.at("lr").get<double>();
  s.best_val = j.at("best_val").get<double>();
  s.has_best = j.at("has_best").get<bool>();
  s.epochs_since_improvement = j.at("epochs_since_improvement").get<std::size_t>();
  s.sampling_active = j.at("sampling_active").get<bool>();
  s.sampling_activation_epoch = j.at("sampling_activation_epoch").get<std::size_t>();
  s.lr_decay_active = j.at("lr_decay_active").get<bool>();
  s.lr_activation_epoch = j.at("lr_activation_epoch").get<std::size_t>();
  s.stop = j.at("stop").get<bool>();
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::vector<float> payload;
  nlohmann::json entries = nlohmann::json::array();
  auto push_entry = [&](const std::string& name, const std::vector<std::size_t>& shape,
                        const float* values, std::size_t count) {
    entries.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}});
    payload.insert(payload.end(), values, values + count);
  };

  for (const auto& [name, entry] : ckpt.params)
    push_entry("param." + name, entry.first, entry.second.data(), entry.second.size());
  for (const auto& [name, m] : ckpt.adam.m) push_entry("adam.m." + name, {m.size()}, m.data(), m.size());
  for (const auto& [name, v] : ckpt.adam.v) push_entry("adam.v." + name, {v.size()}, v.data(), v.size());

  const auto& basis = ckpt.basis;
  for (std::size_t d = 0; d < basis.depths; ++d)
    for (std::size_t c = 0; c < basis.channels; ++c) {
      const auto& sb = basis.slice(d, c);
      const std::string prefix = "basis." + std::to_string(d) + "." + std::to_string(c) + ".";
      std::vector<float> tmp(sb.mean.begin(), sb.mean.end());
      push_entry(prefix + "mean", {tmp.size()}, tmp.data(), tmp.size());
      tmp.assign(sb.eofs.begin(), sb.eofs.end());
      push_entry(prefix + "eofs", {basis.components, basis.height * basis.width}, tmp.data(),
                 tmp.size());
      tmp.assign(sb.singular_values.begin(), sb.singular_values.end());
      push_entry(prefix + "singular_values", {tmp.size()}, tmp.data(), tmp.size());
    }

  nlohmann::json meta = {
      {"format", "PITT"},
      {"network", config_to_json(ckpt.net_config)},
      {"schedule", schedule_to_json(ckpt.schedule)},
      {"adam_step", ckpt.adam.step},
      {"basis_shape",
       {{"depths", basis.depths},
        {"channels", basis.channels},
        {"height", basis.height},
        {"width", basis.width},
        {"components", basis.components}}},
      {"norm_stats",
       {{"mean", ckpt.stats.mean},
        {"stddev", ckpt.stats.stddev},
        {"fallback", ckpt.stats.unit_scale_fallback}}},
      {"rng", ckpt.rng_state},
      {"entries", entries},
  };
  const std::string hdr = meta.dump();

  std::vector<char> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(hdr.size()));
  out.insert(out.end(), hdr.begin(), hdr.end());
  while (out.size() % 8 != 0) out.push_back(0);
  const std::size_t payload_bytes = payload.size() * sizeof(float);
  const std::size_t payload_off = out.size();
  out.resize(out.size() + payload_bytes);
  std::memcpy(out.data() + payload_off, payload.data(), payload_bytes);
  put_u32(out, util::crc32_bytes(out.data() + payload_off, payload_bytes));
  util::write_file(path, out.data(), out.size());
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::vector<char> buf = util::read_file(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw IoError("'" + path + "': bad magic, not a PITT checkpoint");
  const std::uint32_t version = get_u32(buf.data() + 4);
  if (version != kVersion)
    throw IoError("'" + path + "': unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t hdr_len = get_u32(buf.data() + 8);
  if (buf.size() < 12 + hdr_len) throw IoError("'" + path + "': truncated metadata block");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(buf.begin() + 12, buf.begin() + 12 + hdr_len);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': malformed metadata: " + e.what());
  }

  std::size_t off = 12 + hdr_len;
  while (off % 8 != 0) ++off;
  if (buf.size() < off + 4) throw IoError("'" + path + "': truncated payload");
  const std::size_t payload_bytes = buf.size() - off - 4;
  if (payload_bytes % sizeof(float) != 0)
    throw IoError("'" + path + "': payload not a whole number of float32 values");
  const std::uint32_t stored_crc = get_u32(buf.data() + off + payload_bytes);
  if (stored_crc != util::crc32_bytes(buf.data() + off, payload_bytes))
    throw IoError("'" + path + "': payload CRC-32 digest mismatch");
  const float* payload = reinterpret_cast<const float*>(buf.data() + off);
  const std::size_t payload_count = payload_bytes / sizeof(float);

  Checkpoint ckpt;
  ckpt.net_config = config_from_json(meta.at("network"));
  ckpt.schedule = schedule_from_json(meta.at("schedule"));
  ckpt.adam.step = meta.at("adam_step").get<std::size_t>();
  ckpt.rng_state = meta.at("rng").get<std::string>();
  const auto& ns = meta.at("norm_stats");
  ckpt.stats.mean = ns.at("mean").get<std::vector<double>>();
  ckpt.stats.stddev = ns.at("stddev").get<std::vector<double>>();
  ckpt.stats.unit_scale_fallback = ns.at("fallback").get<std::vector<bool>>();

  const auto& bs = meta.at("basis_shape");
  ckpt.basis.depths = bs.at("depths").get<std::size_t>();
  ckpt.basis.channels = bs.at("channels").get<std::size_t>();
  ckpt.basis.height = bs.at("height").get<std::size_t>();
  ckpt.basis.width = bs.at("width").get<std::size_t>();
  ckpt.basis.components = bs.at("components").get<std::size_t>();
  ckpt.basis.slices.resize(ckpt.basis.depths * ckpt.basis.channels);

  for (const auto& e : meta.at("entries")) {
    const std::string name = e.at("name").get<std::string>();
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    const std::size_t offset = e.at("offset").get<std::size_t>();
    std::size_t count = 1;
    for (std::size_t x : shape) count *= x;
    if (offset + count > payload_count)
      throw IoError("'" + path + "': entry '" + name + "' exceeds payload bounds");
    const float* src = payload + offset;
    if (name.rfind("param.", 0) == 0) {
      ckpt.params[name.substr(6)] = {shape, std::vector<float>(src, src + count)};
    } else if (name.rfind("adam.m.", 0) == 0) {
      ckpt.adam.m[name.substr(7)] = std::vector<float>(src, src + count);
    } else if (name.rfind("adam.v.", 0) == 0) {
      ckpt.adam.v[name.substr(7)] = std::vector<float>(src, src + count);
    } else if (name.rfind("basis.", 0) == 0) {
      std::string rest = name.substr(6);
      const std::size_t dot1 = rest.find('.');
      const std::size_t dot2 = rest.find('.', dot1 + 1);
      if (dot1 == std::string::npos || dot2 == std::string::npos)
        throw IoError("'" + path + "': malformed basis entry '" + name + "'");
      const std::size_t d = std::stoul(rest.substr(0, dot1));
      const std::size_t c = std::stoul(rest.substr(dot1 + 1, dot2 - dot1 - 1));
      const std::string field = rest.substr(dot2 + 1);
      if (d >= ckpt.basis.depths || c >= ckpt.basis.channels)
        throw IoError("'" + path + "': basis entry '" + name + "' out of range");
      auto& sb = ckpt.basis.slices[d * ckpt.basis.channels + c];
      std::vector<double> values(src, src + count);
      if (field == "mean")
        sb.mean = std::move(values);
      else if (field == "eofs")
        sb.eofs = std::move(values);
      else if (field == "singular_values")
        sb.singular_values = std::move(values);
      else
        throw IoError("'" + path + "': unknown basis field '" + field + "'");
    } else {
      throw IoError("'" + path + "': unknown entry '" + name + "'");
    }
  }
  return ckpt;
}

Checkpoint snapshot(network::Network& net, const AdamState& adam, const ScheduleState& schedule,
                    const eof::EofBasis& basis, const data::ChannelStats& stats,
                    const std::string& rng_state) {
  Checkpoint ckpt;
  ckpt.net_config = net.config();
  for (auto& [name, p] : net.named_params()) ckpt.params[name] = {p->shape(), p->value()};
  ckpt.adam = adam;
  ckpt.schedule = schedule;
  ckpt.basis = basis;
  ckpt.stats = stats;
  ckpt.rng_state = rng_state;
  return ckpt;
}

void restore(network::Network& net, const Checkpoint& ckpt) {
  for (auto& [name, p] : net.named_params()) {
    auto it = ckpt.params.find(name);
    if (it == ckpt.params.end())
      throw IoError("checkpoint: missing parameter '" + name + "'");
    if (it->second.first != p->shape())
      throw IoError("checkpoint: parameter '" + name + "' has shape " +
                    shape_str(it->second.first) + ", network expects " + shape_str(p->shape()));
    p->mutable_value() = it->second.second;
  }
}

}  // namespace ttcast::trainer
