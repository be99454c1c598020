#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ttcast/eof.hpp"

// Frame-wise and aggregate MSE and SSIM, in PC space and (when a basis is
// available) reconstructed physical space.

namespace ttcast::metrics {

double mse(const std::vector<float>& pred, const std::vector<float>& truth);

// Per-frame MSE of a frames×frame_size series.
std::vector<double> mse_per_frame(const std::vector<float>& pred, const std::vector<float>& truth,
                                  std::size_t frames);

// Standard single-channel SSIM with a Gaussian window (size 11, sigma 1.5),
// C1=(0.01·L)², C2=(0.03·L)². The window shrinks to the largest odd size that
// fits when a frame is smaller than 11; `window_shrunk` reports that.
double ssim(const std::vector<double>& a, const std::vector<double>& b, std::size_t h,
            std::size_t w, double dynamic_range, bool* window_shrunk = nullptr);

struct EvalReport {
  std::size_t horizon = 0;
  std::vector<double> pc_mse, pc_ssim;
  std::vector<double> phys_mse, phys_ssim;  // empty without a basis
  double pc_mse_mean = 0, pc_ssim_mean = 0;
  double phys_mse_mean = 0, phys_ssim_mean = 0;
  bool window_shrunk = false;
};

// Frame-wise metrics of two PC-space series; with a basis, both series are
// reconstructed and physical-space metrics added. SSIM dynamic range is the
// (max - min) of the ground-truth series, frozen per evaluation.
EvalReport evaluate(const eof::PcSequence& pred, const eof::PcSequence& truth,
                    const eof::EofBasis* basis);

// CSV rows `frame,space,mse,ssim` with a header line.
void write_report_csv(const EvalReport& report, const std::string& path);

}  // namespace ttcast::metrics
