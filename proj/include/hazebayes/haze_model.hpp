#pragma once

#include "hazebayes/image.hpp"

namespace hazebayes {

// Homogeneous-atmosphere scattering parameters: attenuation rate per depth
// unit and the global airlight intensity.
struct ScatterParams {
  double beta = 1.0;  // > 0
  double airlight = 1.0;  // in (0, 1]

  void validate() const;
};

// t[i] = exp(-beta * d[i]); strictly in (0, 1] for d >= 0.
TransmissionMap transmission_from_depth(const DepthMap& d, double beta);

// y[i] = x[i] * t[i] + A * (1 - t[i]). A 1-channel map broadcasts over the
// channels of x. Output is the convex combination of x and A, so it stays
// within [min(x, A), max(x, A)] elementwise.
ImageTensor synthesize_hazy(const ImageTensor& x, const TransmissionMap& t, double airlight);

// Recovers -beta*d = log((y - A) / (x - A)) per pixel, averaging the three
// channel log-ratios when inputs are color. exp of the result reproduces
// the transmission used by synthesize_hazy. Fails with the pixel location
// when a denominator falls below `guard` or a ratio is nonpositive.
ImageTensor log_transmission_from_pair(const ImageTensor& y, const ImageTensor& x,
                                       double airlight, double guard = 1e-3);

// Per-channel transmission from a real clean/hazy pair under A = 1:
// t = (y - 1) / (x - 1 + eps), clamped into [t_floor, 1].
TransmissionMap transmission_from_pair_nh(const ImageTensor& y, const ImageTensor& x,
                                          double eps = 1e-6, double t_floor = 0.05);

// Reduces a 3-channel transmission map to 1 channel through the geometric
// mean, i.e. exp of the mean log. Identity for 1-channel input.
TransmissionMap reduce_transmission(const TransmissionMap& t);

}  // namespace hazebayes
