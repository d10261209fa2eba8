#include "hazebayes/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "hazebayes/conv.hpp"
#include "hazebayes/errors.hpp"
#include "hazebayes/numeric.hpp"

namespace hazebayes {

Tensor::Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() > 4) throw ShapeError("tensor rank exceeds 4");
  std::size_t n = 1;
  for (int d : dims_) {
    if (d <= 0) throw ShapeError("tensor dims must be positive");
    n *= static_cast<std::size_t>(d);
  }
  v_.assign(n, 0.0);
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.v_[0] = v;
  return t;
}

Tensor Tensor::from_image(const ImageTensor& img) {
  Tensor t({img.height(), img.width(), img.channels()});
  const double* src = img.data();
  for (std::size_t i = 0; i < t.numel(); ++i) t.v_[i] = src[i];
  return t;
}

ImageTensor Tensor::to_image() const {
  if (dims_.size() != 3) throw ShapeError("tensor is not image-shaped");
  ImageTensor img(dims_[0], dims_[1], dims_[2]);
  for (std::size_t i = 0; i < numel(); ++i) img.data()[i] = v_[i];
  return img;
}

namespace {

enum class Ew { add, sub, mul };
enum class Bc { same, scalar_a, scalar_b, chan_a, chan_b };

struct MapId {
  std::size_t operator()(std::size_t i) const { return i; }
};
struct MapZero {
  std::size_t operator()(std::size_t) const { return 0; }
};
struct MapChan {
  std::size_t c;
  std::size_t operator()(std::size_t i) const { return i / c; }
};

template <typename F>
void with_maps(Bc bc, std::size_t chan, F&& f) {
  switch (bc) {
    case Bc::same: f(MapId{}, MapId{}); return;
    case Bc::scalar_a: f(MapZero{}, MapId{}); return;
    case Bc::scalar_b: f(MapId{}, MapZero{}); return;
    case Bc::chan_a: f(MapChan{chan}, MapId{}); return;
    case Bc::chan_b: f(MapId{}, MapChan{chan}); return;
  }
}

bool chan_broadcastable(const Tensor& narrow, const Tensor& full) {
  return narrow.dims().size() == 3 && full.dims().size() == 3 &&
         narrow.dims()[0] == full.dims()[0] && narrow.dims()[1] == full.dims()[1] &&
         narrow.dims()[2] == 1 && full.dims()[2] == 3;
}

}  // namespace

struct TapeOps {
  static Tape::Node& node(Tape& t, std::size_t i) { return t.nodes_[i]; }

  template <typename Fw, typename Dv>
  static VarId unary(Tape& t, VarId ia, Fw fw, Dv dv) {
    const Tensor& a = t.value(ia);
    Tape::Node n;
    n.value = Tensor(a.dims());
    n.grad = Tensor(a.dims());
    for (std::size_t i = 0; i < a.numel(); ++i) n.value[i] = fw(a[i]);
    n.requires_grad = t.at(ia).requires_grad;
    if (n.requires_grad) {
      n.pull = [ia, dv](Tape& tp, std::size_t self) {
        const Tensor& g = node(tp, self).grad;
        const Tensor& out = node(tp, self).value;
        Tape::Node& pa = node(tp, ia.index);
        for (std::size_t i = 0; i < g.numel(); ++i) {
          pa.grad[i] += g[i] * dv(pa.value[i], out[i]);
        }
      };
    }
    return t.emplace(std::move(n));
  }

  static VarId binary(Tape& t, Ew op, VarId ia, VarId ib) {
    const Tensor& a = t.value(ia);
    const Tensor& b = t.value(ib);
    Bc bc;
    const Tensor* shape_src = nullptr;
    if (a.same_dims(b)) {
      bc = Bc::same;
      shape_src = &a;
    } else if (a.is_scalar()) {
      bc = Bc::scalar_a;
      shape_src = &b;
    } else if (b.is_scalar()) {
      bc = Bc::scalar_b;
      shape_src = &a;
    } else if (chan_broadcastable(a, b)) {
      bc = Bc::chan_a;
      shape_src = &b;
    } else if (chan_broadcastable(b, a)) {
      bc = Bc::chan_b;
      shape_src = &a;
    } else {
      throw ShapeError("elementwise operands are not broadcast-compatible");
    }

    Tape::Node n;
    n.value = Tensor(shape_src->dims());
    n.grad = Tensor(shape_src->dims());
    with_maps(bc, 3, [&](auto ma, auto mb) {
      Tensor& out = n.value;
      switch (op) {
        case Ew::add:
          for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[ma(i)] + b[mb(i)];
          break;
        case Ew::sub:
          for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[ma(i)] - b[mb(i)];
          break;
        case Ew::mul:
          for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[ma(i)] * b[mb(i)];
          break;
      }
    });
    n.requires_grad = t.at(ia).requires_grad || t.at(ib).requires_grad;
    if (n.requires_grad) {
      n.pull = [op, bc, ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = node(tp, self).grad;
        Tape::Node& pa = node(tp, ia.index);
        Tape::Node& pb = node(tp, ib.index);
        with_maps(bc, 3, [&](auto ma, auto mb) {
          for (std::size_t i = 0; i < g.numel(); ++i) {
            switch (op) {
              case Ew::add:
                if (pa.requires_grad) pa.grad[ma(i)] += g[i];
                if (pb.requires_grad) pb.grad[mb(i)] += g[i];
                break;
              case Ew::sub:
                if (pa.requires_grad) pa.grad[ma(i)] += g[i];
                if (pb.requires_grad) pb.grad[mb(i)] -= g[i];
                break;
              case Ew::mul:
                if (pa.requires_grad) pa.grad[ma(i)] += g[i] * pb.value[mb(i)];
                if (pb.requires_grad) pb.grad[mb(i)] += g[i] * pa.value[ma(i)];
                break;
            }
          }
        });
      };
    }
    return t.emplace(std::move(n));
  }
};

Tape::Node& Tape::at(VarId id) {
  if (id.index >= nodes_.size()) throw ValueError("tape id out of range");
  return nodes_[id.index];
}

const Tape::Node& Tape::at(VarId id) const {
  if (id.index >= nodes_.size()) throw ValueError("tape id out of range");
  return nodes_[id.index];
}

VarId Tape::emplace(Node node) {
  nodes_.push_back(std::move(node));
  return VarId{nodes_.size() - 1};
}

VarId Tape::input(Tensor value, bool requires_grad) {
  Node n;
  n.grad = Tensor(value.dims());
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return emplace(std::move(n));
}

VarId Tape::add(VarId a, VarId b) { return TapeOps::binary(*this, Ew::add, a, b); }
VarId Tape::sub(VarId a, VarId b) { return TapeOps::binary(*this, Ew::sub, a, b); }
VarId Tape::mul(VarId a, VarId b) { return TapeOps::binary(*this, Ew::mul, a, b); }

VarId Tape::scalar_mul(VarId a, double s) {
  return TapeOps::unary(
      *this, a, [s](double x) { return s * x; },
      [s](double, double) { return s; });
}

VarId Tape::exp(VarId a) {
  return TapeOps::unary(
      *this, a, [](double x) { return std::exp(x); },
      [](double, double out) { return out; });
}

VarId Tape::log(VarId a) {
  return TapeOps::unary(
      *this, a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

VarId Tape::abs(VarId a) {
  return TapeOps::unary(
      *this, a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

VarId Tape::square(VarId a) {
  return TapeOps::unary(
      *this, a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

VarId Tape::relu(VarId a) {
  return TapeOps::unary(
      *this, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

VarId Tape::clamp(VarId a, double lo, double hi) {
  if (!(lo < hi)) throw ValueError("clamp needs lo < hi");
  return TapeOps::unary(
      *this, a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

VarId Tape::conv2d(VarId input, VarId kernel) {
  const Tensor& in = value(input);
  const Tensor& k = value(kernel);
  if (in.dims().size() != 3) throw ShapeError("conv2d input must be rank 3");
  if (k.dims().size() != 4 || k.dims()[2] != 3 || k.dims()[3] != 3) {
    throw ShapeError("conv2d kernel must be (out, in, 3, 3)");
  }
  if (k.dims()[1] != in.dims()[2]) {
    throw ShapeError("conv2d kernel input channels mismatch: kernel " +
                     std::to_string(k.dims()[1]) + " vs input " +
                     std::to_string(in.dims()[2]));
  }
  const int h = in.dims()[0];
  const int w = in.dims()[1];
  const int cin = in.dims()[2];
  const int cout = k.dims()[0];

  Node n;
  n.value = Tensor({h, w, cout});
  n.grad = Tensor({h, w, cout});
  conv3x3_replicate(in.data(), h, w, cin, k.data(), cout, n.value.data());
  n.requires_grad = at(input).requires_grad || at(kernel).requires_grad;
  if (n.requires_grad) {
    n.pull = [input, kernel, h, w, cin, cout](Tape& tp, std::size_t self) {
      const Tensor& g = TapeOps::node(tp, self).grad;
      Node& pin = TapeOps::node(tp, input.index);
      Node& pk = TapeOps::node(tp, kernel.index);
      conv3x3_replicate_backward(pin.value.data(), h, w, cin, pk.value.data(), cout,
                                 g.data(), pin.requires_grad ? pin.grad.data() : nullptr,
                                 pk.requires_grad ? pk.grad.data() : nullptr);
    };
  }
  return emplace(std::move(n));
}

VarId Tape::bias_add(VarId input, VarId bias) {
  const Tensor& in = value(input);
  const Tensor& b = value(bias);
  if (in.dims().size() != 3) throw ShapeError("bias_add input must be rank 3");
  if (b.dims().size() != 1 || b.dims()[0] != in.dims()[2]) {
    throw ShapeError("bias_add bias length must equal input channels");
  }
  const std::size_t c = static_cast<std::size_t>(in.dims()[2]);

  Node n;
  n.value = Tensor(in.dims());
  n.grad = Tensor(in.dims());
  for (std::size_t i = 0; i < in.numel(); ++i) n.value[i] = in[i] + b[i % c];
  n.requires_grad = at(input).requires_grad || at(bias).requires_grad;
  if (n.requires_grad) {
    n.pull = [input, bias, c](Tape& tp, std::size_t self) {
      const Tensor& g = TapeOps::node(tp, self).grad;
      Node& pin = TapeOps::node(tp, input.index);
      Node& pb = TapeOps::node(tp, bias.index);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (pin.requires_grad) pin.grad[i] += g[i];
        if (pb.requires_grad) pb.grad[i % c] += g[i];
      }
    };
  }
  return emplace(std::move(n));
}

VarId Tape::sum(VarId a) {
  const Tensor& in = value(a);
  Node n;
  n.value = Tensor::scalar(pairwise_sum({in.data(), in.numel()}));
  n.grad = Tensor();
  n.requires_grad = at(a).requires_grad;
  if (n.requires_grad) {
    n.pull = [a](Tape& tp, std::size_t self) {
      const double g = TapeOps::node(tp, self).grad[0];
      Node& pa = TapeOps::node(tp, a.index);
      if (!pa.requires_grad) return;
      for (std::size_t i = 0; i < pa.grad.numel(); ++i) pa.grad[i] += g;
    };
  }
  return emplace(std::move(n));
}

VarId Tape::mean(VarId a) {
  const Tensor& in = value(a);
  const double inv_n = 1.0 / static_cast<double>(in.numel());
  Node n;
  n.value = Tensor::scalar(pairwise_sum({in.data(), in.numel()}) * inv_n);
  n.grad = Tensor();
  n.requires_grad = at(a).requires_grad;
  if (n.requires_grad) {
    n.pull = [a, inv_n](Tape& tp, std::size_t self) {
      const double g = TapeOps::node(tp, self).grad[0] * inv_n;
      Node& pa = TapeOps::node(tp, a.index);
      if (!pa.requires_grad) return;
      for (std::size_t i = 0; i < pa.grad.numel(); ++i) pa.grad[i] += g;
    };
  }
  return emplace(std::move(n));
}

void Tape::backward(VarId sink) {
  Node& s = at(sink);
  if (!s.value.is_scalar()) throw ValueError("backward sink must be scalar");
  for (Node& n : nodes_) {
    std::fill(n.grad.data(), n.grad.data() + n.grad.numel(), 0.0);
  }
  s.grad[0] = 1.0;
  for (std::size_t i = sink.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.pull) n.pull(*this, i);
  }
}

void conv3x3_replicate_backward(const double* in, int h, int w, int cin,
                                const double* kernel, int cout,
                                const double* gout, double* gin, double* gkernel) {
  const int ph = h + 2;
  const int pw = w + 2;
  std::vector<double> pad(static_cast<std::size_t>(ph) * pw * cin);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::clamp(y - 1, 0, h - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::clamp(x - 1, 0, w - 1);
      const double* src = in + (static_cast<std::size_t>(sy) * w + sx) * cin;
      double* dst = pad.data() + (static_cast<std::size_t>(y) * pw + x) * cin;
      for (int c = 0; c < cin; ++c) dst[c] = src[c];
    }
  }
  std::vector<double> gpad;
  if (gin) gpad.assign(pad.size(), 0.0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int co = 0; co < cout; ++co) {
        const double g = gout[(static_cast<std::size_t>(y) * w + x) * cout + co];
        if (g == 0.0) continue;
        for (int ky = 0; ky < 3; ++ky) {
          const std::size_t prow = ((static_cast<std::size_t>(y) + ky) * pw + x) * cin;
          for (int kx = 0; kx < 3; ++kx) {
            const std::size_t poff = prow + static_cast<std::size_t>(kx) * cin;
            const std::size_t koff =
                ((static_cast<std::size_t>(co) * cin) * 3 + ky) * 3 + kx;
            for (int ci = 0; ci < cin; ++ci) {
              const std::size_t kidx = koff + static_cast<std::size_t>(ci) * 9;
              if (gkernel) gkernel[kidx] += g * pad[poff + ci];
              if (gin) gpad[poff + ci] += g * kernel[kidx];
            }
          }
        }
      }
    }
  }

  if (gin) {
    for (int y = 0; y < ph; ++y) {
      const int sy = std::clamp(y - 1, 0, h - 1);
      for (int x = 0; x < pw; ++x) {
        const int sx = std::clamp(x - 1, 0, w - 1);
        const double* src = gpad.data() + (static_cast<std::size_t>(y) * pw + x) * cin;
        double* dst = gin + (static_cast<std::size_t>(sy) * w + sx) * cin;
        for (int c = 0; c < cin; ++c) dst[c] += src[c];
      }
    }
  }
}

}  // namespace hazebayes
