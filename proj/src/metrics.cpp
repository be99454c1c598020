#include "ttcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace ttcast::metrics {

namespace {

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> w(size * size);
  const double half = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      const double di = static_cast<double>(i) - half, dj = static_cast<double>(j) - half;
      w[i * size + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total += w[i * size + j];
    }
  for (double& v : w) v /= total;
  return w;
}

double series_dynamic_range(const std::vector<float>& v) {
  float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
  for (float x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  double range = static_cast<double>(hi) - static_cast<double>(lo);
  return range > 0 ? range : 1.0;
}

}  // namespace

double mse(const std::vector<float>& pred, const std::vector<float>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("mse: size mismatch");
  if (pred.empty()) throw ShapeError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

std::vector<double> mse_per_frame(const std::vector<float>& pred, const std::vector<float>& truth,
                                  std::size_t frames) {
  if (pred.size() != truth.size() || frames == 0 || pred.size() % frames != 0)
    throw ShapeError("mse_per_frame: size mismatch");
  const std::size_t fsz = pred.size() / frames;
  std::vector<double> out(frames, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < fsz; ++i) {
      const double d =
          static_cast<double>(pred[t * fsz + i]) - static_cast<double>(truth[t * fsz + i]);
      acc += d * d;
    }
    out[t] = acc / static_cast<double>(fsz);
  }
  return out;
}

double ssim(const std::vector<double>& a, const std::vector<double>& b, std::size_t h,
            std::size_t w, double dynamic_range, bool* window_shrunk) {
  if (a.size() != h * w || b.size() != h * w) throw ShapeError("ssim: frame size mismatch");
  std::size_t win = 11;
  const std::size_t smallest = std::min(h, w);
  if (smallest < win) {
    win = smallest % 2 == 1 ? smallest : smallest - 1;
    if (win < 1) win = 1;
    if (window_shrunk) *window_shrunk = true;
  }
  const std::vector<double> weights = gaussian_window(win, 1.5);
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i0 = 0; i0 + win <= h; ++i0) {
    for (std::size_t j0 = 0; j0 + win <= w; ++j0) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (std::size_t i = 0; i < win; ++i)
        for (std::size_t j = 0; j < win; ++j) {
          const double wt = weights[i * win + j];
          const double va = a[(i0 + i) * w + (j0 + j)], vb = b[(i0 + i) * w + (j0 + j)];
          mu_a += wt * va;
          mu_b += wt * vb;
          aa += wt * va * va;
          bb += wt * vb * vb;
          ab += wt * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

namespace {

// Mean per-channel SSIM of one T-indexed frame of a ...×C layout.
double frame_ssim(const std::vector<float>& pred, const std::vector<float>& truth,
                  std::size_t frame_offset, std::size_t images, std::size_t h, std::size_t w,
                  std::size_t channels, double range, bool* shrunk) {
  // images = number of h×w planes per frame (D for physical space, 1 for PC)
  std::vector<double> a(h * w), b(h * w);
  double acc = 0.0;
  for (std::size_t img = 0; img < images; ++img) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t pix = 0; pix < h * w; ++pix) {
        const std::size_t idx = frame_offset + (img * h * w + pix) * channels + c;
        a[pix] = pred[idx];
        b[pix] = truth[idx];
      }
      acc += ssim(a, b, h, w, range, shrunk);
    }
  }
  return acc / static_cast<double>(images * channels);
}

}  // namespace

EvalReport evaluate(const eof::PcSequence& pred, const eof::PcSequence& truth,
                    const eof::EofBasis* basis) {
  if (pred.frames != truth.frames)
    throw ShapeError("evaluate: horizon mismatch (" + std::to_string(pred.frames) + " vs " +
                     std::to_string(truth.frames) + ")");
  if (pred.depths != truth.depths || pred.components != truth.components ||
      pred.channels != truth.channels)
    throw ShapeError("evaluate: frame shape mismatch");

  EvalReport r;
  r.horizon = pred.frames;
  const std::size_t frame_size = pred.depths * pred.components * pred.channels;
  r.pc_mse = mse_per_frame(pred.values, truth.values, pred.frames);
  const double pc_range = series_dynamic_range(truth.values);
  for (std::size_t t = 0; t < pred.frames; ++t)
    r.pc_ssim.push_back(frame_ssim(pred.values, truth.values, t * frame_size, 1, pred.depths,
                                   pred.components, pred.channels, pc_range, &r.window_shrunk));

  if (basis) {
    const data::VolumeSequence vp = eof::reconstruct(pred, *basis);
    const data::VolumeSequence vt = eof::reconstruct(truth, *basis);
    const std::size_t pfs = vp.depths * vp.height * vp.width * vp.channels;
    r.phys_mse = mse_per_frame(vp.values, vt.values, vp.frames);
    const double phys_range = series_dynamic_range(vt.values);
    for (std::size_t t = 0; t < vp.frames; ++t)
      r.phys_ssim.push_back(frame_ssim(vp.values, vt.values, t * pfs, vp.depths, vp.height,
                                       vp.width, vp.channels, phys_range, &r.window_shrunk));
  }

  auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  r.pc_mse_mean = mean_of(r.pc_mse);
  r.pc_ssim_mean = mean_of(r.pc_ssim);
  r.phys_mse_mean = mean_of(r.phys_mse);
  r.phys_ssim_mean = mean_of(r.phys_ssim);
  return r;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "frame,space,mse,ssim\n";
  out.precision(10);
  for (std::size_t t = 0; t < report.pc_mse.size(); ++t)
    out << t << ",pc," << report.pc_mse[t] << "," << report.pc_ssim[t] << "\n";
  for (std::size_t t = 0; t < report.phys_mse.size(); ++t)
    out << t << ",physical," << report.phys_mse[t] << "," << report.phys_ssim[t] << "\n";
  if (!out) throw IoError("short write on '" + path + "'");
}

}  // namespace ttcast::metrics
