#include "hazebayes/dcp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "hazebayes/errors.hpp"

namespace hazebayes {

void DcpConfig::validate() const {
  if (window < 1 || window % 2 == 0) {
    throw ValueError("dcp window must be odd and positive, got " + std::to_string(window));
  }
  if (!(omega > 0.0 && omega <= 1.0)) {
    throw ValueError("dcp omega must be in (0, 1], got " + std::to_string(omega));
  }
  if (!(t0 > 0.0 && t0 < 1.0)) {
    throw ValueError("dcp t0 must be in (0, 1), got " + std::to_string(t0));
  }
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw ValueError("dcp top_fraction must be in (0, 1], got " +
                     std::to_string(top_fraction));
  }
}

ImageTensor dark_channel(const ImageTensor& image, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ValueError("dark_channel window must be odd and positive, got " +
                     std::to_string(window));
  }
  ImageTensor channel_min(image.height(), image.width(), 1);
  const int c = image.channels();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double m = image.at(y, x, 0);
      for (int ch = 1; ch < c; ++ch) m = std::min(m, image.at(y, x, ch));
      channel_min.at(y, x, 0) = m;
    }
  }
  return min_filter(channel_min, window);
}

double estimate_atmospheric_light(const ImageTensor& image, const DcpConfig& config) {
  config.validate();
  const ImageTensor dark = dark_channel(image, config.window);
  const std::size_t n = static_cast<std::size_t>(image.height()) * image.width();
  std::size_t k = static_cast<std::size_t>(
      std::ceil(config.top_fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dark.data()[a] > dark.data()[b];
  });

  const int c = image.channels();
  double airlight = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pixel = order[i];
    double mean = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      mean += image.data()[pixel * static_cast<std::size_t>(c) + ch];
    }
    mean /= c;
    airlight = std::max(airlight, mean);
  }
  return airlight;
}

DehazeOutput dcp_dehaze(const ImageTensor& hazy, const DcpConfig& config) {
  config.validate();
  const double airlight = estimate_atmospheric_light(hazy, config);
  if (airlight <= 0.0) {
    throw ValueError("estimated atmospheric light is not positive");
  }

  ImageTensor normalized(hazy.height(), hazy.width(), hazy.channels());
  for (std::size_t i = 0; i < hazy.size(); ++i) {
    normalized.data()[i] = hazy.data()[i] / airlight;
  }
  const ImageTensor dark = dark_channel(normalized, config.window);

  ImageTensor tmap(hazy.height(), hazy.width(), 1);
  for (std::size_t i = 0; i < tmap.size(); ++i) {
    tmap.data()[i] = std::max(1.0 - config.omega * dark.data()[i], config.t0);
  }

  ImageTensor radiance(hazy.height(), hazy.width(), hazy.channels());
  const int c = hazy.channels();
  for (int y = 0; y < hazy.height(); ++y) {
    for (int x = 0; x < hazy.width(); ++x) {
      const double t = tmap.at(y, x, 0);
      for (int ch = 0; ch < c; ++ch) {
        const double v = (hazy.at(y, x, ch) - airlight) / t + airlight;
        radiance.at(y, x, ch) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return DehazeOutput{std::move(radiance), TransmissionMap(std::move(tmap)), airlight};
}

}  // namespace hazebayes
