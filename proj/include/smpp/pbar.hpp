#pragma once

#include <cmath>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/kernels.hpp"
#include "smpp/rng.hpp"

namespace smpp {

// Positively correlated Beta autoregression. Each step combines the
// previous value with two latent Beta multipliers,
//   mu_k = v_k u_k mu_{k-1} + (1 - v_k),
//   v_k ~ Beta(b, a - rho),  u_k ~ Beta(rho, a - rho),
// which leaves Beta(a, b) invariant and gives lag-m autocorrelation
// {rho b / (a (a + b - rho))}^m. Requires 0 < rho < a.
struct PbarParams {
  double a = 1.0;
  double b = 1.0;
  double rho = 0.5;

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw numeric_error("PbarParams: a, b must be positive");
    if (!(rho > 0.0) || !(rho < a)) throw numeric_error("PbarParams: need 0 < rho < a");
  }
};

struct PbarStep {
  double mu = 0.0;  // value after the step
  double v = 0.0;
  double u = 0.0;
};

inline double pbar_autocorr(const PbarParams& p, int lag) {
  p.validate();
  if (lag < 0) throw numeric_error("pbar_autocorr: negative lag");
  return std::pow(p.rho * p.b / (p.a * (p.a + p.b - p.rho)), lag);
}

inline PbarStep pbar_step(SeededRng& rng, double mu_prev, const PbarParams& p) {
  p.validate();
  if (!(mu_prev > 0.0) || !(mu_prev < 1.0)) throw numeric_error("pbar_step: mu_prev outside (0,1)");
  PbarStep s;
  s.v = clamp_unit(draw_beta(rng, p.b, p.a - p.rho));
  s.u = clamp_unit(draw_beta(rng, p.rho, p.a - p.rho));
  s.mu = clamp_unit(s.v * s.u * mu_prev + (1.0 - s.v));
  return s;
}

// Conditional log density of mu_k given (mu_{k-1}, v_k) in the uniform-
// marginal case a = b = 1: the map u = (mu_k + v - 1) / (v mu_{k-1})
// carries u ~ Beta(rho, 1-rho) onto the bounded support
// (1 - v, min{1, 1 - v + v mu_{k-1}}); outside it the density is zero.
inline double pbar_transition_logpdf(double mu_next, double mu_prev, double v, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw numeric_error("pbar_transition_logpdf: rho outside (0,1)");
  if (!(v > 0.0) || !(v < 1.0)) return neg_inf();
  if (!(mu_prev > 0.0) || !(mu_prev < 1.0)) return neg_inf();
  const double u = (mu_next + v - 1.0) / (v * mu_prev);
  if (!(u > 0.0) || !(u < 1.0)) return neg_inf();
  return beta_logpdf(u, rho, 1.0 - rho) - std::log(v * mu_prev);
}

// Draw from the one-step transition given the previous value and a fresh
// latent pair (the latents are integrated out by simulation).
inline double pbar_transition_draw(SeededRng& rng, double mu_prev, const PbarParams& p) {
  return pbar_step(rng, mu_prev, p).mu;
}

// Transition draw at a fixed latent v: mu_next = v u mu_prev + (1 - v) with
// only u refreshed. Used as the proposal inside atom updates.
inline double pbar_transition_draw_given_v(SeededRng& rng, double mu_prev, double v, double rho) {
  const double u = clamp_unit(draw_beta(rng, rho, 1.0 - rho));
  return clamp_unit(v * u * mu_prev + (1.0 - v));
}

inline double pbar_stationary_draw(SeededRng& rng, const PbarParams& p) {
  p.validate();
  return clamp_unit(draw_beta(rng, p.a, p.b));
}

// Iterate the step K times from mu_0, recording each (mu, v, u).
inline std::vector<PbarStep> pbar_simulate_path(SeededRng& rng, double mu0, const PbarParams& p,
                                                std::size_t num_steps) {
  p.validate();
  std::vector<PbarStep> path;
  path.reserve(num_steps);
  double mu = clamp_unit(mu0);
  for (std::size_t k = 0; k < num_steps; ++k) {
    path.push_back(pbar_step(rng, mu, p));
    mu = path.back().mu;
  }
  return path;
}

}  // namespace smpp
