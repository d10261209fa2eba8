#pragma once

#include <functional>
#include <vector>

namespace hazebayes {

// Adaptive Simpson integration over consecutive segments of `breakpoints`.
// The tolerance tightens relative to the integral's coarse magnitude so small
// results keep relative accuracy; exhausting the recursion budget throws
// NumericalError.
double integrate_adaptive(const std::function<double(double)>& f,
                          std::vector<double> breakpoints, double abs_tol = 1e-10);

// KL(q || p) for two Laplace distributions with a common scale, integrated
// numerically in standardized coordinates v = (u - location_q) / scale.
double kl_laplace_quadrature(double location_q, double location_p, double scale,
                             double abs_tol = 1e-10);

// KL(q || p) for two lognormal distributions with a common scatter, integrated
// numerically in standardized coordinates w = (ln u - log_mean_q) / scatter.
double kl_lognormal_quadrature(double log_mean_q, double log_mean_p, double scatter,
                               double abs_tol = 1e-10);

enum class KlKind { laplace, lognormal };

double kl_quadrature_oracle(KlKind kind, double center_q, double center_p,
                            double spread, double abs_tol = 1e-10);

}  // namespace hazebayes
