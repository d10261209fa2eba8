#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace hazebayes {

// 3x3 convolution, stride 1, replicate padding, channel-interleaved layout.
// Templated on the scalar type so double and long double paths share one
// accumulation order; equal inputs give bitwise-equal outputs per type.
template <typename T>
void conv3x3_replicate(const T* in, int h, int w, int cin, const T* kernel,
                       int cout, T* out) {
  const int ph = h + 2;
  const int pw = w + 2;
  std::vector<T> pad(static_cast<std::size_t>(ph) * pw * cin);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::clamp(y - 1, 0, h - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::clamp(x - 1, 0, w - 1);
      const T* src = in + (static_cast<std::size_t>(sy) * w + sx) * cin;
      T* dst = pad.data() + (static_cast<std::size_t>(y) * pw + x) * cin;
      for (int c = 0; c < cin; ++c) dst[c] = src[c];
    }
  }
  // Kernel rearranged to (out, ky, kx, in) so the innermost product is
  // contiguous on both sides.
  std::vector<T> kt(static_cast<std::size_t>(cout) * 9 * cin);
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          kt[((static_cast<std::size_t>(co) * 3 + ky) * 3 + kx) * cin + ci] =
              kernel[((static_cast<std::size_t>(co) * cin + ci) * 3 + ky) * 3 + kx];
        }
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int co = 0; co < cout; ++co) {
        T acc = T(0);
        const T* kp = kt.data() + static_cast<std::size_t>(co) * 9 * cin;
        for (int ky = 0; ky < 3; ++ky) {
          const T* row =
              pad.data() + ((static_cast<std::size_t>(y) + ky) * pw + x) * cin;
          for (int kx = 0; kx < 3; ++kx) {
            const T* px = row + static_cast<std::size_t>(kx) * cin;
            const T* kk = kp + (static_cast<std::size_t>(ky) * 3 + kx) * cin;
            for (int ci = 0; ci < cin; ++ci) acc += px[ci] * kk[ci];
          }
        }
        out[(static_cast<std::size_t>(y) * w + x) * cout + co] = acc;
      }
    }
  }
}

// Accumulates conv gradients: d(sink)/d(in) into gin and d(sink)/d(kernel)
// into gkernel, either of which may be null to skip. Single serial sweep in a
// fixed order, so results do not depend on thread count.
void conv3x3_replicate_backward(const double* in, int h, int w, int cin,
                                const double* kernel, int cout,
                                const double* gout, double* gin,
                                double* gkernel);

}  // namespace hazebayes
