#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazebayes/autodiff.hpp"
#include "hazebayes/conv.hpp"
#include "hazebayes/image.hpp"

namespace hazebayes {

// Layer widths plus the two head variants: a residual head that adds the
// input back (dehazing net) and a clamped single-channel head (transmission
// net). Activations between layers are relu.
struct NetSpec {
  std::vector<int> widths;
  bool residual = false;
  bool clamp_output = false;
  double t_min = 0.05;

  static NetSpec dnet_default() { return {{3, 16, 16, 3}, true, false, 0.05}; }
  static NetSpec tnet_default() { return {{3, 16, 16, 1}, false, true, 0.05}; }

  void validate() const;
  int layer_count() const { return static_cast<int>(widths.size()) - 1; }
  bool operator==(const NetSpec&) const = default;
};

struct ConvLayer {
  Tensor kernel;  // (out, in, 3, 3)
  Tensor bias;    // (out)
};

struct LayerOffsets {
  std::size_t kernel = 0;
  std::size_t bias = 0;
  int in_ch = 0;
  int out_ch = 0;
};

// Flattening order: layers front to back, kernel elements in storage order,
// then the bias. The order is part of the checkpoint format.
std::vector<LayerOffsets> layer_offsets(const NetSpec& spec);
std::size_t spec_param_count(const NetSpec& spec);

class NetworkWeights {
 public:
  explicit NetworkWeights(NetSpec spec);

  const NetSpec& spec() const { return spec_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  ConvLayer& layer(int i) { return layers_[static_cast<std::size_t>(i)]; }
  const ConvLayer& layer(int i) const { return layers_[static_cast<std::size_t>(i)]; }

  std::size_t param_count() const;
  double param(std::size_t flat) const;
  void set_param(std::size_t flat, double v);
  std::vector<double> flatten() const;
  void load_flat(const std::vector<double>& flat);

 private:
  NetSpec spec_;
  std::vector<ConvLayer> layers_;
};

// Kaiming fan-in kernels (std sqrt(2/fan_in)), zero biases. Both head kinds
// open at a gradient-friendly constant: a residual head's final layer starts
// at zero so the net opens as the identity, and a clamped head's final layer
// starts with a zero kernel and its bias at the midpoint of [t_min, 1] so no
// site starts pinned against a clamp bound (where the gradient vanishes).
NetworkWeights init_weights(const NetSpec& spec, std::uint64_t seed);

ImageTensor dnet_forward(const NetworkWeights& w, const ImageTensor& y);
TransmissionMap tnet_forward(const NetworkWeights& w, const ImageTensor& y);

// Taped twin of the plain forward; weight nodes are exposed for updates.
struct TapedNet {
  std::vector<VarId> kernels;
  std::vector<VarId> biases;
  VarId output;
};

TapedNet net_forward_taped(Tape& tape, const NetworkWeights& w, VarId input);

// Checkpoint: one file holding a JSON manifest line (spec, seed, step,
// flattening note) followed by the raw little-endian float64 parameter
// payload in flattening order.
void save_checkpoint(const std::string& path, const NetworkWeights& w,
                     std::int64_t step, std::uint64_t seed);
NetworkWeights load_checkpoint(const std::string& path, std::int64_t* step = nullptr,
                               std::uint64_t* seed = nullptr);

// Forward pass over a flat parameter array, templated so tests can run the
// identical arithmetic in extended precision. `out` holds h*w*back elements.
template <typename T>
void net_forward_flat(const NetSpec& spec, const T* params, const T* in, int h,
                      int w, T* out) {
  const auto offs = layer_offsets(spec);
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  std::vector<T> cur(in, in + pixels * static_cast<std::size_t>(spec.widths.front()));
  std::vector<T> next;
  for (std::size_t li = 0; li < offs.size(); ++li) {
    const LayerOffsets& lo = offs[li];
    next.assign(pixels * static_cast<std::size_t>(lo.out_ch), T(0));
    conv3x3_replicate(cur.data(), h, w, lo.in_ch, params + lo.kernel, lo.out_ch,
                      next.data());
    const T* bias = params + lo.bias;
    const std::size_t c = static_cast<std::size_t>(lo.out_ch);
    const bool inner = li + 1 < offs.size();
    for (std::size_t i = 0; i < next.size(); ++i) {
      const T v = next[i] + bias[i % c];
      next[i] = inner ? (v > T(0) ? v : T(0)) : v;
    }
    cur.swap(next);
  }
  if (spec.residual) {
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = in[i] + cur[i];
  } else if (spec.clamp_output) {
    const T lo = T(spec.t_min);
    const T hi = T(1);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      cur[i] = cur[i] < lo ? lo : (cur[i] > hi ? hi : cur[i]);
    }
  }
  for (std::size_t i = 0; i < cur.size(); ++i) out[i] = cur[i];
}

}  // namespace hazebayes
