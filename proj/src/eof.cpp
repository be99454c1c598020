#include "ttcast/eof.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "ttcast/util.hpp"

namespace ttcast::eof {

FitResult fit(const std::vector<double>& s, std::size_t rows, std::size_t cols, std::size_t p) {
  if (rows < 1 || cols < 1) throw ConfigError("eof fit: empty matrix");
  if (s.size() != rows * cols) throw ShapeError("eof fit: value count does not match rows×cols");
  if (p < 1 || p > std::min(rows, cols))
    throw ConfigError("eof fit: P=" + std::to_string(p) + " exceeds min(T, H*W)=" +
                      std::to_string(std::min(rows, cols)));
  for (double v : s)
    if (!std::isfinite(v)) throw NumericError("eof fit: non-finite input");

  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = s[i * cols + j];

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("eof fit: SVD did not converge");
  const auto& u = svd.matrixU();
  const auto& v = svd.matrixV();
  const auto& sigma = svd.singularValues();

  FitResult r;
  r.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
  r.pcs.resize(rows * p);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < p; ++k) r.pcs[i * p + k] = u(i, k) * sigma(k);
  r.eofs.resize(p * cols);
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t j = 0; j < cols; ++j) r.eofs[k * cols + j] = v(j, k);
  return r;
}

std::pair<PcSequence, EofBasis> compress(const data::VolumeSequence& x, std::size_t p) {
  x.validate();
  const std::size_t t = x.frames, d = x.depths, h = x.height, w = x.width, c = x.channels;
  const std::size_t hw = h * w;

  EofBasis basis;
  basis.depths = d;
  basis.channels = c;
  basis.height = h;
  basis.width = w;
  basis.components = p;
  basis.slices.resize(d * c);

  PcSequence out;
  out.frames = t;
  out.depths = d;
  out.components = p;
  out.channels = c;
  out.time_step_hours = x.time_step_hours;
  out.values.assign(out.size(), 0.0f);

  util::parallel_for(d * c, [&](std::size_t idx) {
    const std::size_t di = idx / c, ci = idx % c;
    std::vector<double> s(t * hw);
    std::vector<double> mean(hw, 0.0);
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t pix = 0; pix < hw; ++pix) {
        const double v = x.values[(((ti * d + di) * hw) + pix) * c + ci];
        s[ti * hw + pix] = v;
        mean[pix] += v;
      }
    for (std::size_t pix = 0; pix < hw; ++pix) mean[pix] /= static_cast<double>(t);
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t pix = 0; pix < hw; ++pix) s[ti * hw + pix] -= mean[pix];

    FitResult fr = fit(s, t, hw, p);
    SliceBasis& sb = basis.slices[idx];
    sb.mean = std::move(mean);
    sb.eofs = std::move(fr.eofs);
    sb.singular_values = std::move(fr.singular_values);
    for (std::size_t ti = 0; ti < t; ++ti)
      for (std::size_t k = 0; k < p; ++k)
        out.values[((ti * d + di) * p + k) * c + ci] = static_cast<float>(fr.pcs[ti * p + k]);
  });
  return {std::move(out), std::move(basis)};
}

PcSequence project(const data::VolumeSequence& x, const EofBasis& basis) {
  x.validate();
  if (x.depths != basis.depths || x.channels != basis.channels || x.height != basis.height ||
      x.width != basis.width)
    throw ShapeError("eof project: data shape does not match basis");
  const std::size_t t = x.frames, d = x.depths, c = x.channels, p = basis.components;
  const std::size_t hw = basis.height * basis.width;

  PcSequence out;
  out.frames = t;
  out.depths = d;
  out.components = p;
  out.channels = c;
  out.time_step_hours = x.time_step_hours;
  out.values.assign(out.size(), 0.0f);

  util::parallel_for(d * c, [&](std::size_t idx) {
    const std::size_t di = idx / c, ci = idx % c;
    const SliceBasis& sb = basis.slices[idx];
    for (std::size_t ti = 0; ti < t; ++ti) {
      for (std::size_t k = 0; k < p; ++k) {
        double acc = 0.0;
        for (std::size_t pix = 0; pix < hw; ++pix)
          acc += (x.values[(((ti * d + di) * hw) + pix) * c + ci] - sb.mean[pix]) *
                 sb.eofs[k * hw + pix];
        out.values[((ti * d + di) * p + k) * c + ci] = static_cast<float>(acc);
      }
    }
  });
  return out;
}

data::VolumeSequence reconstruct(const PcSequence& pcs, const EofBasis& basis) {
  if (pcs.depths != basis.depths || pcs.channels != basis.channels ||
      pcs.components != basis.components)
    throw ContractError("eof reconstruct: sequence does not match basis");
  const std::size_t t = pcs.frames, d = pcs.depths, c = pcs.channels, p = pcs.components;
  const std::size_t hw = basis.height * basis.width;

  data::VolumeSequence out;
  out.frames = t;
  out.depths = d;
  out.height = basis.height;
  out.width = basis.width;
  out.channels = c;
  out.time_step_hours = pcs.time_step_hours;
  out.values.assign(out.size(), 0.0f);

  util::parallel_for(d * c, [&](std::size_t idx) {
    const std::size_t di = idx / c, ci = idx % c;
    const SliceBasis& sb = basis.slices[idx];
    for (std::size_t ti = 0; ti < t; ++ti) {
      for (std::size_t pix = 0; pix < hw; ++pix) {
        double acc = sb.mean[pix];
        for (std::size_t k = 0; k < p; ++k)
          acc += pcs.values[((ti * d + di) * p + k) * c + ci] * sb.eofs[k * hw + pix];
        out.values[(((ti * d + di) * hw) + pix) * c + ci] = static_cast<float>(acc);
      }
    }
  });
  return out;
}

}  // namespace ttcast::eof
