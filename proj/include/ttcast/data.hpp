#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ttcast/errors.hpp"

// Dataset container, VSEQ1 on-disk format, normalization, splitting and the
// synthetic PDE generator that stands in for real mooring data.

namespace ttcast::data {

// Raw gridded series, T×D×H×W×C row-major float32. For velocity data the two
// channels are the u and v components in m/s.
struct VolumeSequence {
  std::size_t frames = 0;   // T
  std::size_t depths = 0;   // D
  std::size_t height = 0;   // H
  std::size_t width = 0;    // W
  std::size_t channels = 0; // C
  double time_step_hours = 12.0;
  std::vector<std::string> axis_names{"time", "depth", "lon", "lat", "channel"};
  std::vector<float> values;

  std::size_t size() const { return frames * depths * height * width * channels; }

  float& at(std::size_t t, std::size_t d, std::size_t i, std::size_t j, std::size_t c) {
    return values[(((t * depths + d) * height + i) * width + j) * channels + c];
  }
  float at(std::size_t t, std::size_t d, std::size_t i, std::size_t j, std::size_t c) const {
    return values[(((t * depths + d) * height + i) * width + j) * channels + c];
  }

  void validate() const {
    if (values.size() != size()) throw ShapeError("VolumeSequence: payload/shape mismatch");
  }
};

enum class FieldKind { diffusion, wave, mixed };

FieldKind field_kind_from_name(const std::string& s);
std::string field_kind_name(FieldKind k);

struct SyntheticParams {
  double alpha = 0.1;  // diffusivity, grid-units²/step
  double c2 = 0.2;     // wave speed²
  std::size_t modes = 3;
};

// Integrates the chosen PDE from seeded smooth initial conditions, one depth
// layer at a time, channel 1 phase-shifted by 90° relative to channel 0.
// Throws ConfigError naming the violated bound on unstable parameters
// (diffusion: alpha <= 0.25; wave: 2·c² <= 1).
VolumeSequence generate_synthetic(FieldKind kind, std::size_t frames, std::size_t depths,
                                  std::size_t height, std::size_t width,
                                  const SyntheticParams& params, std::uint64_t seed);

// VSEQ1 container: magic "VSEQ", version u32, JSON header, 8-byte-aligned
// float32 little-endian payload, trailing CRC-32 of the payload.
void save(const VolumeSequence& seq, const std::string& path);
VolumeSequence load(const std::string& path);

// Per-channel z-score statistics. A zero-variance channel falls back to unit
// scale and is flagged.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> unit_scale_fallback;
};

ChannelStats compute_channel_stats(const std::vector<float>& values, std::size_t channels);
void normalize_in_place(std::vector<float>& values, std::size_t channels, const ChannelStats& s);
void denormalize_in_place(std::vector<float>& values, std::size_t channels, const ChannelStats& s);

struct SplitSpec {
  double train_fraction = 0.8;
};

// Contiguous prefix/suffix split at floor(train_fraction·T). Requires at
// least one 20-frame window on each side.
std::pair<VolumeSequence, VolumeSequence> split(const VolumeSequence& seq, const SplitSpec& spec,
                                                std::size_t min_window = 20);

}  // namespace ttcast::data
