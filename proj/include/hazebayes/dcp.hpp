#pragma once

#include "hazebayes/image.hpp"

namespace hazebayes {

struct DcpConfig {
  int window = 15;
  double omega = 0.95;
  double t0 = 0.1;
  double top_fraction = 0.001;

  void validate() const;
};

struct DehazeOutput {
  ImageTensor radiance;
  TransmissionMap transmission;
  double airlight = 0.0;
};

// Per-pixel channel minimum followed by a square min filter.
ImageTensor dark_channel(const ImageTensor& image, int window);

// Channel mean of the brightest dark-channel pixels, brightest-first with
// row-major order breaking ties. Returns the largest candidate mean.
double estimate_atmospheric_light(const ImageTensor& image, const DcpConfig& config = {});

DehazeOutput dcp_dehaze(const ImageTensor& hazy, const DcpConfig& config = {});

}  // namespace hazebayes
