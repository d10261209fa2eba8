#include "hazebayes/haze_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hazebayes {

void ScatterParams::validate() const {
  if (!(beta > 0.0)) throw ValueError("ScatterParams: beta must be positive");
  if (!(airlight > 0.0 && airlight <= 1.0)) {
    throw ValueError("ScatterParams: atmospheric light must be in (0, 1]");
  }
}

TransmissionMap transmission_from_depth(const DepthMap& d, double beta) {
  if (!(beta > 0.0)) {
    throw ValueError("transmission_from_depth: beta must be positive, got " +
                     std::to_string(beta));
  }
  const ImageTensor& depth = d.tensor();
  ImageTensor t(depth.height(), depth.width(), 1);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    t.data()[i] = std::exp(-beta * depth.data()[i]);
  }
  return TransmissionMap(std::move(t));
}

ImageTensor synthesize_hazy(const ImageTensor& x, const TransmissionMap& t, double airlight) {
  if (!(airlight > 0.0 && airlight <= 1.0)) {
    throw ValueError("synthesize_hazy: atmospheric light must be in (0, 1]");
  }
  const ImageTensor& tm = t.tensor();
  if (tm.height() != x.height() || tm.width() != x.width()) {
    throw ShapeError("synthesize_hazy: transmission and image are not spatially aligned");
  }
  if (tm.channels() != 1 && tm.channels() != x.channels()) {
    throw ShapeError("synthesize_hazy: transmission channels incompatible with image");
  }

  ImageTensor y(x.height(), x.width(), x.channels());
  for (int yy = 0; yy < x.height(); ++yy) {
    for (int xx = 0; xx < x.width(); ++xx) {
      for (int c = 0; c < x.channels(); ++c) {
        const double tv = tm.channels() == 1 ? tm.at(yy, xx, 0) : tm.at(yy, xx, c);
        y.at(yy, xx, c) = x.at(yy, xx, c) * tv + airlight * (1.0 - tv);
      }
    }
  }
  return y;
}

ImageTensor log_transmission_from_pair(const ImageTensor& y, const ImageTensor& x,
                                       double airlight, double guard) {
  if (!y.same_shape(x)) throw ShapeError("log_transmission_from_pair: shape mismatch");
  if (!(guard > 0.0)) throw ValueError("log_transmission_from_pair: guard must be positive");

  // Recovered transmission is confined to [1e-4, 1].
  const double log_floor = std::log(1e-4);
  ImageTensor out(y.height(), y.width(), 1);
  for (int yy = 0; yy < y.height(); ++yy) {
    for (int xx = 0; xx < y.width(); ++xx) {
      // Per-channel log-ratio, averaged. Equals the shared value exactly
      // when the pair came from the scattering model.
      double acc = 0.0;
      for (int c = 0; c < y.channels(); ++c) {
        const double den = x.at(yy, xx, c) - airlight;
        if (std::abs(den) <= guard) {
          throw ValueError("log_transmission_from_pair: |x - A| below guard at pixel (" +
                           std::to_string(yy) + ", " + std::to_string(xx) + ")");
        }
        const double ratio = (y.at(yy, xx, c) - airlight) / den;
        if (!(ratio > 0.0)) {
          throw ValueError("log_transmission_from_pair: nonpositive ratio at pixel (" +
                           std::to_string(yy) + ", " + std::to_string(xx) + ")");
        }
        acc += std::log(ratio);
      }
      out.at(yy, xx, 0) = std::clamp(acc / y.channels(), log_floor, 0.0);
    }
  }
  return out;
}

TransmissionMap transmission_from_pair_nh(const ImageTensor& y, const ImageTensor& x,
                                          double eps, double t_floor) {
  if (!y.same_shape(x)) throw ShapeError("transmission_from_pair_nh: shape mismatch");
  if (!(eps > 0.0)) throw ValueError("transmission_from_pair_nh: eps must be positive");

  ImageTensor t(y.height(), y.width(), y.channels());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = (y.data()[i] - 1.0) / (x.data()[i] - 1.0 + eps);
    // 0/0 can occur when y = 1 and x = 1 - eps; treat it as fully opaque.
    t.data()[i] = std::isnan(v) ? t_floor : std::clamp(v, t_floor, 1.0);
  }
  return TransmissionMap(std::move(t));
}

TransmissionMap reduce_transmission(const TransmissionMap& t) {
  if (t.channels() == 1) return t;
  const ImageTensor& tm = t.tensor();
  ImageTensor out(tm.height(), tm.width(), 1);
  for (int yy = 0; yy < tm.height(); ++yy) {
    for (int xx = 0; xx < tm.width(); ++xx) {
      double acc = 0.0;
      for (int c = 0; c < tm.channels(); ++c) acc += std::log(tm.at(yy, xx, c));
      out.at(yy, xx, 0) = std::exp(acc / tm.channels());
    }
  }
  return TransmissionMap(std::move(out));
}

}  // namespace hazebayes
