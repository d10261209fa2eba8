#include "hazebayes/variational.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "hazebayes/errors.hpp"
#include "hazebayes/haze_model.hpp"
#include "hazebayes/numeric.hpp"

namespace hazebayes {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_broadcastable(const ImageTensor& full, const ImageTensor& narrow,
                         const char* what) {
  if (full.height() != narrow.height() || full.width() != narrow.width()) {
    throw ShapeError(std::string(what) + ": spatial size mismatch");
  }
  if (narrow.channels() != full.channels() && narrow.channels() != 1) {
    throw ShapeError(std::string(what) + ": channel count must match or be 1");
  }
}

ImageTensor expand_channels(const ImageTensor& in, int channels) {
  if (in.channels() == channels) return in;
  ImageTensor out(in.height(), in.width(), channels);
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      for (int c = 0; c < channels; ++c) out.at(y, x, c) = in.at(y, x, 0);
    }
  }
  return out;
}

// Aligns the transmission estimate and reference to a common channel count
// under the chosen mode. The estimate is never reduced, only repeated.
std::pair<ImageTensor, ImageTensor> align_tau(const TransmissionMap& nu,
                                              const TransmissionMap& t,
                                              TauChannelMode mode) {
  const ImageTensor& nu_t = nu.tensor();
  const ImageTensor& t_t = t.tensor();
  if (nu_t.height() != t_t.height() || nu_t.width() != t_t.width()) {
    throw ShapeError("transmission estimate and reference differ spatially");
  }
  if (nu_t.channels() == t_t.channels()) return {nu_t, t_t};
  if (nu_t.channels() == 1 && t_t.channels() == 3) {
    if (mode == TauChannelMode::broadcast) return {expand_channels(nu_t, 3), t_t};
    return {nu_t, reduce_transmission(t).tensor()};
  }
  if (nu_t.channels() == 3 && t_t.channels() == 1) {
    return {nu_t, expand_channels(t_t, 3)};
  }
  throw ShapeError("transmission channel counts cannot be aligned");
}

}  // namespace

void HyperParams::validate() const {
  if (!(sigma2 > 0.0)) throw ValueError("sigma2 must be positive");
  if (!(eps1_2 > 0.0)) throw ValueError("eps1_2 must be positive");
  if (!(eps2_2 > 0.0)) throw ValueError("eps2_2 must be positive");
  if (!(airlight > 0.0 && airlight <= 1.0)) {
    throw ValueError("airlight must be in (0, 1], got " + std::to_string(airlight));
  }
}

double likelihood_term(const ImageTensor& y, const ImageTensor& phi,
                       const ImageTensor& nu, const HyperParams& hp) {
  hp.validate();
  if (!y.same_shape(phi)) throw ShapeError("likelihood_term: y and phi differ");
  check_broadcastable(y, nu, "likelihood_term");

  const double c0 = -0.5 * (kLog2Pi + std::log(hp.sigma2));
  const double two_sigma2 = 2.0 * hp.sigma2;
  const std::size_t channels = static_cast<std::size_t>(y.channels());
  const bool nu_scalar = nu.channels() == 1;
  const double a = hp.airlight;

  return pairwise_sum_indexed(0, y.size(), [&](std::size_t i) {
    const double nuv = nu_scalar ? nu.data()[i / channels] : nu.data()[i];
    // Same arithmetic as synthesize_hazy, so consistent inputs leave an
    // exactly zero residual.
    const double r = y.data()[i] - (phi.data()[i] * nuv + a * (1.0 - nuv));
    return c0 - (r * r + hp.sigma2) / two_sigma2;
  });
}

double kl_laplace(const ImageTensor& phi, const ImageTensor& x, double eps1_2) {
  if (!(eps1_2 > 0.0)) throw ValueError("eps1_2 must be positive");
  if (!phi.same_shape(x)) throw ShapeError("kl_laplace: phi and x differ");
  return pairwise_sum_indexed(0, phi.size(), [&](std::size_t i) {
    const double a = std::abs(phi.data()[i] - x.data()[i]) / eps1_2;
    // expm1 keeps the small-|a| quadratic behavior; equals exp(-a) + a - 1.
    return std::expm1(-a) + a;
  });
}

double kl_lognormal(const TransmissionMap& nu, const TransmissionMap& t,
                    double eps2_2) {
  if (!(eps2_2 > 0.0)) throw ValueError("eps2_2 must be positive");
  if (!nu.tensor().same_shape(t.tensor())) {
    throw ShapeError("kl_lognormal: nu and t differ");
  }
  const double denom = 2.0 * eps2_2;
  return pairwise_sum_indexed(0, nu.tensor().size(), [&](std::size_t i) {
    const double d = std::log(nu.tensor().data()[i]) - std::log(t.tensor().data()[i]);
    return d * d / denom;
  });
}

ObjectiveBreakdown negative_elbo(const ImageTensor& y, const ImageTensor& x,
                                 const TransmissionMap& t, const ImageTensor& phi,
                                 const TransmissionMap& nu, const HyperParams& hp,
                                 TauChannelMode mode) {
  if (!y.same_shape(x)) throw ShapeError("negative_elbo: y and x differ");
  auto [nu_aligned, t_aligned] = align_tau(nu, t, mode);

  ObjectiveBreakdown bd;
  bd.likelihood = likelihood_term(y, phi, nu.tensor(), hp);
  bd.kl_z = kl_laplace(phi, x, hp.eps1_2);
  bd.kl_tau = kl_lognormal(TransmissionMap(std::move(nu_aligned)),
                           TransmissionMap(std::move(t_aligned)), hp.eps2_2);
  bd.negative_elbo = -bd.likelihood + bd.kl_z + bd.kl_tau;
  return bd;
}

std::pair<ImageTensor, ImageTensor> objective_grads(
    const ImageTensor& y, const ImageTensor& x, const TransmissionMap& t,
    const ImageTensor& phi, const TransmissionMap& nu, const HyperParams& hp,
    TauChannelMode mode) {
  hp.validate();
  if (!y.same_shape(x)) throw ShapeError("objective_grads: y and x differ");
  if (!y.same_shape(phi)) throw ShapeError("objective_grads: y and phi differ");
  check_broadcastable(y, nu.tensor(), "objective_grads");
  auto [nu_aligned, t_aligned] = align_tau(nu, t, mode);

  const int h = y.height();
  const int w = y.width();
  const int channels = y.channels();
  const bool nu_scalar = nu.channels() == 1;
  const double a = hp.airlight;

  ImageTensor dphi(h, w, channels);
  ImageTensor dnu(h, w, nu.channels());

  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) {
      double dnu_acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double nuv = nu_scalar ? nu.tensor().at(yy, xx, 0) : nu.tensor().at(yy, xx, c);
        const double r = y.at(yy, xx, c) - (phi.at(yy, xx, c) * nuv + a * (1.0 - nuv));
        const double d = phi.at(yy, xx, c) - x.at(yy, xx, c);
        const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        const double amag = std::abs(d) / hp.eps1_2;
        dphi.at(yy, xx, c) =
            -r * nuv / hp.sigma2 + sign * (-std::expm1(-amag)) / hp.eps1_2;
        const double dlike = -r * (phi.at(yy, xx, c) - a) / hp.sigma2;
        if (nu_scalar) {
          dnu_acc += dlike;
        } else {
          dnu.at(yy, xx, c) = dlike;
        }
      }
      // KL(tau) sites follow the aligned layout; a repeated estimate collects
      // every aligned channel's contribution.
      const int k = t_aligned.channels();
      for (int c = 0; c < k; ++c) {
        const double nual = nu_aligned.at(yy, xx, c);
        const double g = (std::log(nual) - std::log(t_aligned.at(yy, xx, c))) /
                         (hp.eps2_2 * nual);
        if (nu_scalar) {
          dnu_acc += g;
        } else {
          dnu.at(yy, xx, c) += g;
        }
      }
      if (nu_scalar) dnu.at(yy, xx, 0) = dnu_acc;
    }
  }
  return {std::move(dphi), std::move(dnu)};
}

}  // namespace hazebayes
