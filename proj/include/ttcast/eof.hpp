#pragma once

#include <cstddef>
#include <vector>

#include "ttcast/data.hpp"

// Empirical Orthogonal Function analysis per (depth, channel) slice: SVD,
// truncation, projection of unseen data onto the fitted basis, and
// reconstruction. The temporal mean of each slice is removed before the SVD
// and stored with the basis.

namespace ttcast::eof {

// Basis of one (depth, channel) slice.
struct SliceBasis {
  std::vector<double> mean;             // H·W temporal mean, added back on reconstruction
  std::vector<double> eofs;             // P × (H·W) row-major, rows orthonormal
  std::vector<double> singular_values;  // length min(T, H·W), non-increasing
};

struct EofBasis {
  std::size_t depths = 0, channels = 0, height = 0, width = 0;
  std::size_t components = 0;  // P
  std::vector<SliceBasis> slices;  // index d*channels + c

  const SliceBasis& slice(std::size_t d, std::size_t c) const {
    return slices[d * channels + c];
  }
};

// Compressed series X' of shape T×D×P×C, tied to the basis it was built with.
struct PcSequence {
  std::size_t frames = 0, depths = 0, components = 0, channels = 0;
  double time_step_hours = 12.0;
  std::vector<float> values;  // T×D×P×C row-major

  std::size_t size() const { return frames * depths * components * channels; }
};

struct FitResult {
  std::vector<double> pcs;              // T × P (UΣ truncated)
  std::vector<double> eofs;             // P × cols (Vᵀ truncated)
  std::vector<double> singular_values;  // full spectrum, non-increasing
};

// SVD of a T×cols matrix, keeping the top P components. No mean removal at
// this level.
FitResult fit(const std::vector<double>& s, std::size_t rows, std::size_t cols, std::size_t p);

// Fits one basis per (depth, channel) slice and returns the compressed series.
std::pair<PcSequence, EofBasis> compress(const data::VolumeSequence& x, std::size_t p);

// Projects unseen data onto an existing basis (valid because EOF rows are
// orthonormal); on training data this reproduces compress().
PcSequence project(const data::VolumeSequence& x, const EofBasis& basis);

data::VolumeSequence reconstruct(const PcSequence& pcs, const EofBasis& basis);

}  // namespace ttcast::eof
