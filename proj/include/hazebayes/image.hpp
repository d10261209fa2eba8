#pragma once

#include <cstdint>
#include <vector>

#include "hazebayes/errors.hpp"

namespace hazebayes {

// Dense H x W x C grid of finite 64-bit reals, row-major and
// channel-interleaved: index(y, x, c) = (y * width + x) * channels + c.
// This layout is shared by PFM I/O and network checkpoints.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels);
  ImageTensor(int height, int width, int channels, std::vector<double> data);

  static ImageTensor constant(int height, int width, int channels, double value);
  // Bytes scaled by 1/255; output lands in [0, 1].
  static ImageTensor from_u8(int height, int width, int channels,
                             const std::vector<std::uint8_t>& bytes);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

  double& at(int y, int x, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const ImageTensor& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

 private:
  void validate() const;

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Per-pixel transmission, every element strictly in (0, 1].
// 1 channel for the e^{-beta d} model, 3 channels for the per-channel
// ratio construction used on real pairs.
class TransmissionMap {
 public:
  explicit TransmissionMap(ImageTensor t);

  const ImageTensor& tensor() const { return map_; }
  int height() const { return map_.height(); }
  int width() const { return map_.width(); }
  int channels() const { return map_.channels(); }

 private:
  ImageTensor map_;
};

// Single-channel nonnegative scene depth.
class DepthMap {
 public:
  explicit DepthMap(ImageTensor d);

  const ImageTensor& tensor() const { return map_; }
  int height() const { return map_.height(); }
  int width() const { return map_.width(); }

 private:
  ImageTensor map_;
};

// Sliding-window minimum with replicate border padding; window odd, >= 1.
// Single-channel input only.
ImageTensor min_filter(const ImageTensor& t, int window);

}  // namespace hazebayes
