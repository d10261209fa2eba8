#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hazebayes/image.hpp"

namespace hazebayes {

// Dense row-major tensor of rank 0 to 4. Rank 0 is a scalar with one element.
// Images use (height, width, channels) with interleaved channels, kernels use
// (out, in, 3, 3).
class Tensor {
 public:
  Tensor() : v_(1, 0.0) {}
  explicit Tensor(std::vector<int> dims);

  static Tensor scalar(double v);
  static Tensor from_image(const ImageTensor& img);
  ImageTensor to_image() const;

  const std::vector<int>& dims() const { return dims_; }
  std::size_t numel() const { return v_.size(); }
  bool is_scalar() const { return dims_.empty(); }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<double> v_;
};

struct VarId {
  std::size_t index = 0;
};

// Reverse-mode tape. Nodes are appended in creation order, which is already a
// topological order, so the backward pass is a single reverse sweep. A tape is
// single-threaded; run independent tapes for concurrency.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  VarId input(Tensor value, bool requires_grad = true);
  VarId constant(Tensor value) { return input(std::move(value), false); }

  const Tensor& value(VarId id) const { return at(id).value; }
  const Tensor& grad(VarId id) const { return at(id).grad; }
  std::size_t size() const { return nodes_.size(); }

  // Elementwise binaries; operands broadcast only scalar-to-tensor or
  // 1-channel-to-3-channel on matching spatial dims.
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId mul(VarId a, VarId b);

  VarId scalar_mul(VarId a, double s);
  VarId exp(VarId a);
  VarId log(VarId a);
  VarId abs(VarId a);
  VarId square(VarId a);
  VarId relu(VarId a);
  // Gradient passes only strictly inside (lo, hi); saturation is real.
  VarId clamp(VarId a, double lo, double hi);

  // input (h, w, cin) against kernel (cout, cin, 3, 3), stride 1, replicate
  // padding, output (h, w, cout).
  VarId conv2d(VarId input, VarId kernel);
  VarId bias_add(VarId input, VarId bias);

  VarId sum(VarId a);
  VarId mean(VarId a);

  // Seeds d(sink)/d(sink) = 1 and sweeps the tape in reverse; afterwards
  // grad(id) holds d(sink)/d(id) for every node the sink depends on.
  void backward(VarId sink);

 private:
  friend struct TapeOps;
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&, std::size_t)> pull;
  };

  Node& at(VarId id);
  const Node& at(VarId id) const;
  VarId emplace(Node node);

  std::vector<Node> nodes_;
};

}  // namespace hazebayes
