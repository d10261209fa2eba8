#pragma once

#include "hazebayes/image.hpp"

namespace hazebayes {

struct MetricConfig {
  double data_range = 1.0;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;

  void validate() const;
};

// Mean squared difference over all pixel-channel sites.
double mse(const ImageTensor& a, const ImageTensor& b);

// 10*log10(range^2 / mse); identical inputs report the 99 dB cap.
double psnr(const ImageTensor& a, const ImageTensor& b, const MetricConfig& cfg = {});
double psnr_from_mse(double mse_value, const MetricConfig& cfg = {});

// Gaussian-window SSIM over valid window positions, averaged per channel and
// then across channels.
double ssim(const ImageTensor& a, const ImageTensor& b, const MetricConfig& cfg = {});

}  // namespace hazebayes
