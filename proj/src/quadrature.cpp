#include "hazebayes/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hazebayes/errors.hpp"

namespace hazebayes {

namespace {

constexpr int kMaxDepth = 60;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double refine(const std::function<double(double)>& f, double a, double b, double fa,
              double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double err = left + right - whole;
  // Below this floor further halving only reshuffles machine noise.
  const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(left) + std::abs(right) +
                        (b - a) * (std::abs(fa) + std::abs(fm) + std::abs(fb) +
                                   std::abs(flm) + std::abs(frm)));
  if (std::abs(err) <= 15.0 * tol || std::abs(err) <= noise) {
    return left + right + err / 15.0;
  }
  if (depth >= kMaxDepth) {
    throw NumericalError("adaptive quadrature did not converge within depth " +
                         std::to_string(kMaxDepth));
  }
  return refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f,
                          std::vector<double> breakpoints, double abs_tol) {
  if (breakpoints.size() < 2) {
    throw ValueError("integrate_adaptive needs at least two breakpoints");
  }
  if (!(abs_tol > 0.0)) {
    throw ValueError("integrate_adaptive abs_tol must be positive");
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                    breakpoints.end());

  struct Segment {
    double a, b, fa, fm, fb, coarse;
  };
  std::vector<Segment> segments;
  double scale = 0.0;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    Segment s;
    s.a = breakpoints[i - 1];
    s.b = breakpoints[i];
    s.fa = f(s.a);
    s.fm = f(0.5 * (s.a + s.b));
    s.fb = f(s.b);
    s.coarse = simpson(s.a, s.b, s.fa, s.fm, s.fb);
    scale += std::abs(s.coarse);
    segments.push_back(s);
  }
  if (segments.empty()) {
    throw ValueError("integrate_adaptive breakpoints collapse to a point");
  }

  // Hold the requested absolute tolerance when the integral is large enough
  // for that to be meaningful, otherwise track the magnitude relatively.
  const double tol = std::max(std::min(abs_tol, 1e-13 * scale), 5e-15 * scale);
  const double tol_per_segment = tol / static_cast<double>(segments.size());

  double total = 0.0;
  for (const Segment& s : segments) {
    total += refine(f, s.a, s.b, s.fa, s.fm, s.fb, s.coarse, tol_per_segment, 0);
  }
  return total;
}

double kl_laplace_quadrature(double location_q, double location_p, double scale,
                             double abs_tol) {
  if (!(scale > 0.0)) {
    throw ValueError("laplace scale must be positive, got " + std::to_string(scale));
  }
  constexpr double span = 60.0;
  const double delta = (location_p - location_q) / scale;
  // Substituting u = location_q + scale * v gives q(u) du = exp(-|v|)/2 dv and
  // log q(u) - log p(u) = |v - delta| - |v|.
  auto integrand = [delta](double v) {
    return 0.5 * std::exp(-std::abs(v)) * (std::abs(v - delta) - std::abs(v));
  };
  return integrate_adaptive(integrand,
                            {-span, 0.0, std::clamp(delta, -span, span), span},
                            abs_tol);
}

double kl_lognormal_quadrature(double log_mean_q, double log_mean_p, double scatter,
                               double abs_tol) {
  if (!(scatter > 0.0)) {
    throw ValueError("lognormal scatter must be positive, got " +
                     std::to_string(scatter));
  }
  constexpr double span = 12.0;
  const double gamma = (log_mean_p - log_mean_q) / scatter;
  // Substituting u = exp(log_mean_q + scatter * w) gives q(u) du = phi(w) dw
  // and log q(u) - log p(u) = ((w - gamma)^2 - w^2) / 2.
  auto integrand = [gamma](double w) {
    const double phi = kInvSqrt2Pi * std::exp(-0.5 * w * w);
    const double wp = w - gamma;
    return phi * 0.5 * (wp * wp - w * w);
  };
  return integrate_adaptive(integrand,
                            {-span, 0.0, std::clamp(gamma, -span, span), span},
                            abs_tol);
}

double kl_quadrature_oracle(KlKind kind, double center_q, double center_p,
                            double spread, double abs_tol) {
  switch (kind) {
    case KlKind::laplace:
      return kl_laplace_quadrature(center_q, center_p, spread, abs_tol);
    case KlKind::lognormal:
      return kl_lognormal_quadrature(center_q, center_p, spread, abs_tol);
  }
  throw ValueError("unknown KL kind");
}

}  // namespace hazebayes
