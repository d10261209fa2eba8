#include "hazebayes/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hazebayes {

ImageTensor::ImageTensor(int height, int width, int channels)
    : height_(height),
      width_(width),
      channels_(channels),
      data_(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0) *
                std::max(channels, 0),
            0.0) {
  validate();
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  validate();
}

ImageTensor ImageTensor::constant(int height, int width, int channels, double value) {
  ImageTensor t(height, width, channels);
  std::fill(t.data_.begin(), t.data_.end(), value);
  t.validate();
  return t;
}

ImageTensor ImageTensor::from_u8(int height, int width, int channels,
                                 const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("from_u8: byte count does not match " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels));
  }
  ImageTensor t(height, width, channels);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    t.data_[i] = static_cast<double>(bytes[i]) / 255.0;
  }
  return t;
}

void ImageTensor::validate() const {
  if (height_ <= 0 || width_ <= 0) {
    throw ValueError("ImageTensor: dimensions must be positive, got " +
                     std::to_string(height_) + "x" + std::to_string(width_));
  }
  if (channels_ != 1 && channels_ != 3) {
    throw ValueError("ImageTensor: channels must be 1 or 3, got " + std::to_string(channels_));
  }
  if (data_.size() != static_cast<std::size_t>(height_) * width_ * channels_) {
    throw ShapeError("ImageTensor: data length " + std::to_string(data_.size()) +
                     " does not match shape");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw ValueError("ImageTensor: non-finite element");
  }
}

TransmissionMap::TransmissionMap(ImageTensor t) : map_(std::move(t)) {
  for (double v : map_.raw()) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw ValueError("TransmissionMap: element " + std::to_string(v) +
                       " outside (0, 1]");
    }
  }
}

DepthMap::DepthMap(ImageTensor d) : map_(std::move(d)) {
  if (map_.channels() != 1) throw ShapeError("DepthMap: expected a single channel");
  for (double v : map_.raw()) {
    if (!(v >= 0.0)) throw ValueError("DepthMap: negative depth " + std::to_string(v));
  }
}

namespace {

// 1-D running minimum along one axis with clamped (replicate) borders.
void min_pass(const double* in, double* out, int outer, int inner, int stride_outer,
              int stride_inner, int radius) {
  for (int o = 0; o < outer; ++o) {
    const double* src = in + static_cast<std::ptrdiff_t>(o) * stride_outer;
    double* dst = out + static_cast<std::ptrdiff_t>(o) * stride_outer;
    for (int i = 0; i < inner; ++i) {
      const int lo = std::max(0, i - radius);
      const int hi = std::min(inner - 1, i + radius);
      double m = src[static_cast<std::ptrdiff_t>(lo) * stride_inner];
      for (int j = lo + 1; j <= hi; ++j) {
        m = std::min(m, src[static_cast<std::ptrdiff_t>(j) * stride_inner]);
      }
      dst[static_cast<std::ptrdiff_t>(i) * stride_inner] = m;
    }
  }
}

}  // namespace

ImageTensor min_filter(const ImageTensor& t, int window) {
  if (t.channels() != 1) throw ShapeError("min_filter: expected a single channel");
  if (window < 1 || window % 2 == 0) {
    throw ValueError("min_filter: window must be odd and positive, got " +
                     std::to_string(window));
  }
  if (window == 1) return t;

  const int h = t.height();
  const int w = t.width();
  const int radius = window / 2;

  // The square-window minimum separates into a horizontal then vertical pass.
  ImageTensor tmp(h, w, 1);
  min_pass(t.data(), tmp.data(), h, w, w, 1, radius);
  ImageTensor out(h, w, 1);
  min_pass(tmp.data(), out.data(), w, h, 1, w, radius);
  return out;
}

}  // namespace hazebayes
