#pragma once

#include <cmath>

#include "smpp/common.hpp"
#include "smpp/special.hpp"

namespace smpp {

// Beta density on (0,1) in mean/scale form: shapes (mu*tau, (1-mu)*tau).
// The scale tau controls concentration; variance is mu(1-mu)/(tau+1).
struct BetaKernel {
  double mu;
  double tau;

  double shape_a() const { return mu * tau; }
  double shape_b() const { return (1.0 - mu) * tau; }

  double logpdf(double t) const {
    if (t <= 0.0 || t >= 1.0) return neg_inf();
    const double a = shape_a();
    const double b = shape_b();
    return (a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - lbeta(a, b);
  }

  double cdf(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return inc_beta(shape_a(), shape_b(), t);
  }

  // Mass assigned to the interval (t1, t2].
  double interval_prob(double t1, double t2) const { return cdf(t2) - cdf(t1); }

  double variance() const { return mu * (1.0 - mu) / (tau + 1.0); }
};

inline double beta_logpdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return neg_inf();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta(a, b);
}

inline double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return inc_beta(a, b, x);
}

// Gaussian mark kernel.
struct GaussKernel {
  double mean;
  double variance;

  double logpdf(double y) const { return normal_logpdf(y, mean, std::sqrt(variance)); }
  double cdf(double y) const { return normal_cdf(y, mean, std::sqrt(variance)); }
};

}  // namespace smpp
