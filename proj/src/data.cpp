#include "ttcast/data.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "json.hpp"
#include "ttcast/util.hpp"

namespace ttcast::data {

namespace {

constexpr char kMagic[4] = {'V', 'S', 'E', 'Q'};
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

// 5-point Laplacian with replicate boundaries on a single H×W layer.
void laplacian_layer(const std::vector<double>& v, std::vector<double>& out, std::size_t h,
                     std::size_t w) {
  auto clampi = [](long x, long hi) { return x < 0 ? 0L : (x >= hi ? hi - 1 : x); };
  for (long i = 0; i < static_cast<long>(h); ++i) {
    const long im = clampi(i - 1, h), ip = clampi(i + 1, h);
    for (long j = 0; j < static_cast<long>(w); ++j) {
      const long jm = clampi(j - 1, w), jp = clampi(j + 1, w);
      out[i * w + j] = v[im * w + j] + v[ip * w + j] + v[i * w + jm] + v[i * w + jp] -
                       4.0 * v[i * w + j];
    }
  }
}

}  // namespace

FieldKind field_kind_from_name(const std::string& s) {
  if (s == "diffusion") return FieldKind::diffusion;
  if (s == "wave") return FieldKind::wave;
  if (s == "mixed") return FieldKind::mixed;
  throw ConfigError("unknown synthetic field kind '" + s + "'");
}

std::string field_kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::diffusion: return "diffusion";
    case FieldKind::wave: return "wave";
    case FieldKind::mixed: return "mixed";
  }
  return "?";
}

VolumeSequence generate_synthetic(FieldKind kind, std::size_t frames, std::size_t depths,
                                  std::size_t height, std::size_t width,
                                  const SyntheticParams& params, std::uint64_t seed) {
  if (frames < 1 || depths < 1 || height < 2 || width < 2)
    throw ConfigError("generate_synthetic: degenerate shape");
  const bool uses_diffusion = kind != FieldKind::wave;
  const bool uses_wave = kind != FieldKind::diffusion;
  if (uses_diffusion && params.alpha > 0.25)
    throw ConfigError("generate_synthetic: alpha=" + std::to_string(params.alpha) +
                      " violates stability bound alpha <= 0.25");
  if (uses_diffusion && params.alpha < 0.0)
    throw ConfigError("generate_synthetic: alpha must be >= 0");
  if (uses_wave && 2.0 * params.c2 > 1.0)
    throw ConfigError("generate_synthetic: c2=" + std::to_string(params.c2) +
                      " violates CFL-style bound 2*c2 <= 1");
  if (uses_wave && params.c2 < 0.0) throw ConfigError("generate_synthetic: c2 must be >= 0");

  VolumeSequence seq;
  seq.frames = frames;
  seq.depths = depths;
  seq.height = height;
  seq.width = width;
  seq.channels = 2;
  seq.values.assign(seq.size(), 0.0f);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> wavenum(1, 2);

  const std::size_t n = height * width;
  std::vector<double> field(n), prev(n), lap(n), next(n);

  for (std::size_t d = 0; d < depths; ++d) {
    FieldKind layer_kind = kind;
    if (kind == FieldKind::mixed)
      layer_kind = (d % 2 == 0) ? FieldKind::diffusion : FieldKind::wave;

    // one smooth random initial condition per depth layer; channel 1 reuses
    // the same modes with a 90° phase shift
    struct Mode {
      double a, ph;
      int p, q;
    };
    std::vector<Mode> mode_set(params.modes);
    for (auto& m : mode_set) m = {amp(rng), phase(rng), wavenum(rng), wavenum(rng)};

    for (std::size_t c = 0; c < 2; ++c) {
      const double shift = c == 0 ? 0.0 : std::numbers::pi / 2.0;
      for (std::size_t i = 0; i < height; ++i)
        for (std::size_t j = 0; j < width; ++j) {
          double v = 0;
          for (const auto& m : mode_set)
            v += m.a * std::sin(2.0 * std::numbers::pi *
                                    (m.p * static_cast<double>(i) / height +
                                     m.q * static_cast<double>(j) / width) +
                                m.ph + shift);
          field[i * width + j] = v;
        }
      prev = field;
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < n; ++i)
          seq.values[(((t * depths + d) * height) * width + i) * 2 + c] =
              static_cast<float>(field[i]);
        laplacian_layer(field, lap, height, width);
        if (layer_kind == FieldKind::diffusion) {
          for (std::size_t i = 0; i < n; ++i) next[i] = field[i] + params.alpha * lap[i];
        } else {
          for (std::size_t i = 0; i < n; ++i)
            next[i] = 2.0 * field[i] - prev[i] + params.c2 * lap[i];
        }
        prev = field;
        field = next;
      }
    }
  }
  return seq;
}

void save(const VolumeSequence& seq, const std::string& path) {
  seq.validate();
  nlohmann::json header = {
      {"axes", seq.axis_names},
      {"dtype", "f32le"},
      {"endian", "little"},
      {"shape", {seq.frames, seq.depths, seq.height, seq.width, seq.channels}},
      {"time_step_hours", seq.time_step_hours},
  };
  const std::string hdr = header.dump();

  std::vector<char> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(hdr.size()));
  out.insert(out.end(), hdr.begin(), hdr.end());
  while (out.size() % 8 != 0) out.push_back(0);

  const std::size_t payload_bytes = seq.values.size() * sizeof(float);
  const std::size_t payload_off = out.size();
  out.resize(out.size() + payload_bytes);
  std::memcpy(out.data() + payload_off, seq.values.data(), payload_bytes);
  put_u32(out, util::crc32_bytes(out.data() + payload_off, payload_bytes));
  util::write_file(path, out.data(), out.size());
}

VolumeSequence load(const std::string& path) {
  const std::vector<char> buf = util::read_file(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw IoError("'" + path + "': bad magic, not a VSEQ1 file");
  const std::uint32_t version = get_u32(buf.data() + 4);
  if (version != kVersion)
    throw IoError("'" + path + "': unsupported VSEQ version " + std::to_string(version));
  const std::uint32_t hdr_len = get_u32(buf.data() + 8);
  if (buf.size() < 12 + hdr_len) throw IoError("'" + path + "': truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin() + 12, buf.begin() + 12 + hdr_len);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': malformed header: " + e.what());
  }
  if (header.value("dtype", "") != "f32le")
    throw IoError("'" + path + "': unsupported dtype field '" + header.value("dtype", "") + "'");
  if (header.value("endian", "") != "little")
    throw IoError("'" + path + "': big-endian payloads are not supported (endian field '" +
                  header.value("endian", "") + "')");
  const auto shape = header.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 5) throw IoError("'" + path + "': shape field must have 5 extents");

  VolumeSequence seq;
  seq.frames = shape[0];
  seq.depths = shape[1];
  seq.height = shape[2];
  seq.width = shape[3];
  seq.channels = shape[4];
  seq.time_step_hours = header.value("time_step_hours", 12.0);
  if (header.contains("axes")) seq.axis_names = header.at("axes").get<std::vector<std::string>>();

  std::size_t off = 12 + hdr_len;
  while (off % 8 != 0) ++off;
  const std::size_t payload_bytes = seq.size() * sizeof(float);
  if (buf.size() != off + payload_bytes + 4)
    throw IoError("'" + path + "': payload length " + std::to_string(buf.size() - off) +
                  " does not match header shape (expected " +
                  std::to_string(payload_bytes + 4) + " bytes after header)");
  const std::uint32_t stored_crc = get_u32(buf.data() + off + payload_bytes);
  const std::uint32_t actual_crc = util::crc32_bytes(buf.data() + off, payload_bytes);
  if (stored_crc != actual_crc) throw IoError("'" + path + "': payload CRC-32 mismatch");

  seq.values.resize(seq.size());
  std::memcpy(seq.values.data(), buf.data() + off, payload_bytes);
  return seq;
}

ChannelStats compute_channel_stats(const std::vector<float>& values, std::size_t channels) {
  if (channels == 0 || values.size() % channels != 0)
    throw ShapeError("compute_channel_stats: value count not divisible by channels");
  const std::size_t rows = values.size() / channels;
  ChannelStats s;
  s.mean.assign(channels, 0.0);
  s.stddev.assign(channels, 0.0);
  s.unit_scale_fallback.assign(channels, false);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < channels; ++c) s.mean[c] += values[r * channels + c];
  for (std::size_t c = 0; c < channels; ++c) s.mean[c] /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = values[r * channels + c] - s.mean[c];
      s.stddev[c] += d * d;
    }
  for (std::size_t c = 0; c < channels; ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / static_cast<double>(rows));
    if (s.stddev[c] < 1e-12) {
      s.stddev[c] = 1.0;
      s.unit_scale_fallback[c] = true;
    }
  }
  return s;
}

void normalize_in_place(std::vector<float>& values, std::size_t channels, const ChannelStats& s) {
  const std::size_t rows = values.size() / channels;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < channels; ++c)
      values[r * channels + c] =
          static_cast<float>((values[r * channels + c] - s.mean[c]) / s.stddev[c]);
}

void denormalize_in_place(std::vector<float>& values, std::size_t channels, const ChannelStats& s) {
  const std::size_t rows = values.size() / channels;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < channels; ++c)
      values[r * channels + c] =
          static_cast<float>(values[r * channels + c] * s.stddev[c] + s.mean[c]);
}

std::pair<VolumeSequence, VolumeSequence> split(const VolumeSequence& seq, const SplitSpec& spec,
                                                std::size_t min_window) {
  const std::size_t t_train = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(seq.frames)));
  const std::size_t t_val = seq.frames - t_train;
  if (t_train < min_window || t_val < min_window)
    throw ConfigError("split: series of " + std::to_string(seq.frames) +
                      " frames too short for a " + std::to_string(min_window) +
                      "-frame window on each side (got " + std::to_string(t_train) + "/" +
                      std::to_string(t_val) + ")");
  auto make = [&](std::size_t begin, std::size_t count) {
    VolumeSequence out = seq;
    out.frames = count;
    const std::size_t stride = seq.depths * seq.height * seq.width * seq.channels;
    out.values.assign(seq.values.begin() + begin * stride,
                      seq.values.begin() + (begin + count) * stride);
    return out;
  };
  return {make(0, t_train), make(t_train, t_val)};
}

}  // namespace ttcast::data
