#include "hazebayes/metrics.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hazebayes/errors.hpp"
#include "hazebayes/numeric.hpp"

namespace hazebayes {

void MetricConfig::validate() const {
  if (!(data_range > 0.0)) throw ValueError("data_range must be positive");
  if (ssim_window < 1 || ssim_window % 2 == 0) {
    throw ValueError("ssim_window must be odd and positive");
  }
  if (!(ssim_sigma > 0.0)) throw ValueError("ssim_sigma must be positive");
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw ValueError("k1 and k2 must be positive");
}

double mse(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("mse: shape mismatch");
  const double total = pairwise_sum_indexed(0, a.size(), [&](std::size_t i) {
    const double d = a.data()[i] - b.data()[i];
    return d * d;
  });
  return total / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value, const MetricConfig& cfg) {
  cfg.validate();
  if (mse_value < 0.0) throw ValueError("mse cannot be negative");
  if (mse_value == 0.0) return 99.0;
  return 10.0 * std::log10(cfg.data_range * cfg.data_range / mse_value);
}

double psnr(const ImageTensor& a, const ImageTensor& b, const MetricConfig& cfg) {
  return psnr_from_mse(mse(a, b), cfg);
}

namespace {

double ssim_channel(const ImageTensor& a, const ImageTensor& b, int channel,
                    const std::vector<double>& weights, int window,
                    const MetricConfig& cfg) {
  const int r = window / 2;
  const int h = a.height();
  const int w = a.width();
  const double c1 = (cfg.k1 * cfg.data_range) * (cfg.k1 * cfg.data_range);
  const double c2 = (cfg.k2 * cfg.data_range) * (cfg.k2 * cfg.data_range);

  double total = 0.0;
  std::size_t count = 0;
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      double mu_a = 0.0, mu_b = 0.0, ea2 = 0.0, eb2 = 0.0, eab = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double wgt =
              weights[static_cast<std::size_t>(dy + r) * window + (dx + r)];
          const double va = a.at(y + dy, x + dx, channel);
          const double vb = b.at(y + dy, x + dx, channel);
          mu_a += wgt * va;
          mu_b += wgt * vb;
          ea2 += wgt * va * va;
          eb2 += wgt * vb * vb;
          eab += wgt * va * vb;
        }
      }
      const double var_a = ea2 - mu_a * mu_a;
      const double var_b = eb2 - mu_b * mu_b;
      const double cov = eab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b, const MetricConfig& cfg) {
  cfg.validate();
  if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch");
  const int window = cfg.ssim_window;
  if (a.height() < window || a.width() < window) {
    throw ValueError("ssim: image smaller than the " + std::to_string(window) +
                     "-pixel window");
  }

  const int r = window / 2;
  std::vector<double> weights(static_cast<std::size_t>(window) * window);
  double norm = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double g =
          std::exp(-(dy * dy + dx * dx) / (2.0 * cfg.ssim_sigma * cfg.ssim_sigma));
      weights[static_cast<std::size_t>(dy + r) * window + (dx + r)] = g;
      norm += g;
    }
  }
  for (double& wv : weights) wv /= norm;

  double acc = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    acc += ssim_channel(a, b, c, weights, window, cfg);
  }
  return acc / a.channels();
}

}  // namespace hazebayes
