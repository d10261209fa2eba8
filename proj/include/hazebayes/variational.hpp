#pragma once

#include <utility>

#include "hazebayes/image.hpp"

namespace hazebayes {

struct HyperParams {
  double sigma2 = 1e-5;
  double eps1_2 = 1e-6;
  double eps2_2 = 1e-5;
  double airlight = 1.0;

  void validate() const;
};

struct ObjectiveBreakdown {
  double likelihood = 0.0;
  double kl_z = 0.0;
  double kl_tau = 0.0;
  double negative_elbo = 0.0;
};

// How a 1-channel transmission estimate meets a 3-channel reference:
// broadcast repeats the estimate per channel, reduce collapses the reference
// to its per-pixel geometric mean.
enum class TauChannelMode { broadcast, reduce };

// Gaussian log-likelihood expectation, summed over pixel-channel sites:
// -(log 2*pi*sigma2)/2 - ((y - (phi*nu + A*(1 - nu)))^2 + sigma2)/(2*sigma2).
double likelihood_term(const ImageTensor& y, const ImageTensor& phi,
                       const ImageTensor& nu, const HyperParams& hp);

// KL between Laplace posteriors centered at phi and priors centered at x with
// common scale eps1_2, summed: exp(-|phi-x|/eps1_2) + |phi-x|/eps1_2 - 1.
double kl_laplace(const ImageTensor& phi, const ImageTensor& x, double eps1_2);

// KL between lognormal posteriors and priors with common scatter eps2_2,
// summed: (log nu - log t)^2 / (2*eps2_2).
double kl_lognormal(const TransmissionMap& nu, const TransmissionMap& t,
                    double eps2_2);

ObjectiveBreakdown negative_elbo(const ImageTensor& y, const ImageTensor& x,
                                 const TransmissionMap& t, const ImageTensor& phi,
                                 const TransmissionMap& nu, const HyperParams& hp,
                                 TauChannelMode mode = TauChannelMode::broadcast);

// Analytic gradients of negative_elbo with respect to phi and nu.
std::pair<ImageTensor, ImageTensor> objective_grads(
    const ImageTensor& y, const ImageTensor& x, const TransmissionMap& t,
    const ImageTensor& phi, const TransmissionMap& nu, const HyperParams& hp,
    TauChannelMode mode = TauChannelMode::broadcast);

}  // namespace hazebayes
