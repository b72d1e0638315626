#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/kernels.hpp"
#include "smpp/rng.hpp"
#include "smpp/special.hpp"

namespace smpp {

// Conjugate gamma state-space chain for per-period total intensities.
// Counts n_k ~ Poisson(gamma_k); the states evolve by the discount
// construction that keeps every filtering distribution Gamma:
//   a_k = omega a_{k-1} + n_k,   b_k = omega b_{k-1} + 1.
// A single discount factor omega in (0,1] controls how fast information
// ages (omega = 1 recovers static Poisson-Gamma conjugacy). Smoothing,
// forecasting, and transition laws below are exact consequences of that
// construction.
inline constexpr double kGammaChainDefaultA0 = 0.1;
inline constexpr double kGammaChainDefaultB0 = 0.1;

struct GammaChainFilter {
  // a[k], b[k] hold the Gamma(a_k, b_k) filtered law of gamma_k given
  // counts 1..k; index 0 stores the prior (a0, b0).
  std::vector<double> a;
  std::vector<double> b;
  double omega = 0.0;

  std::size_t num_periods() const { return a.empty() ? 0 : a.size() - 1; }
};

inline GammaChainFilter gamma_chain_filter(std::span<const long> counts, double omega,
                                           double a0 = kGammaChainDefaultA0,
                                           double b0 = kGammaChainDefaultB0) {
  if (!(omega > 0.0) || !(omega <= 1.0)) throw numeric_error("gamma_chain_filter: omega outside (0,1]");
  if (!(a0 > 0.0) || !(b0 > 0.0)) throw numeric_error("gamma_chain_filter: invalid prior");
  GammaChainFilter f;
  f.omega = omega;
  f.a.reserve(counts.size() + 1);
  f.b.reserve(counts.size() + 1);
  f.a.push_back(a0);
  f.b.push_back(b0);
  for (long n : counts) {
    if (n < 0) throw numeric_error("gamma_chain_filter: negative count");
    f.a.push_back(omega * f.a.back() + static_cast<double>(n));
    f.b.push_back(omega * f.b.back() + 1.0);
  }
  return f;
}

// Joint smoothing draw of (gamma_1, ..., gamma_K) given all counts:
// gamma_K from its filtered law, then backwards
//   gamma_k = omega gamma_{k+1} + eps_k,  eps_k ~ Gamma((1-omega) a_k, b_k),
// so every path satisfies gamma_k > omega gamma_{k+1}. At omega = 1 the
// innovation degenerates to zero and the path is constant.
inline std::vector<double> gamma_chain_backward_sample(SeededRng& rng,
                                                       const GammaChainFilter& f) {
  const std::size_t K = f.num_periods();
  if (K == 0) throw numeric_error("gamma_chain_backward_sample: empty filter");
  std::vector<double> gamma(K);
  gamma[K - 1] = draw_gamma(rng, f.a[K], f.b[K]);
  for (std::size_t k = K - 1; k-- > 0;) {
    const double shape = (1.0 - f.omega) * f.a[k + 1];
    const double eps = shape > 0.0 ? draw_gamma(rng, shape, f.b[k + 1]) : 0.0;
    gamma[k] = f.omega * gamma[k + 1] + eps;
  }
  return gamma;
}

namespace detail {

inline double neg_binomial_logpmf(long n, double size, double prob) {
  // P(N = n) with success probability prob and mean size (1-prob)/prob.
  return std::lgamma(static_cast<double>(n) + size) - std::lgamma(size) -
         std::lgamma(static_cast<double>(n) + 1.0) + size * std::log(prob) +
         static_cast<double>(n) * std::log1p(-prob);
}

}  // namespace detail

// One-step-ahead predictive log likelihood of the count series: each n_k is
// negative binomial under the evolved prior Gamma(omega a_{k-1}, omega b_{k-1}).
inline double gamma_chain_predictive_loglik(std::span<const long> counts, double omega,
                                            double a0 = kGammaChainDefaultA0,
                                            double b0 = kGammaChainDefaultB0) {
  if (!(omega > 0.0) || !(omega <= 1.0)) throw numeric_error("gamma_chain_predictive_loglik: omega outside (0,1]");
  double a = a0;
  double b = b0;
  double loglik = 0.0;
  for (long n : counts) {
    if (n < 0) throw numeric_error("gamma_chain_predictive_loglik: negative count");
    const double size = omega * a;
    const double prob = omega * b / (omega * b + 1.0);
    loglik += detail::neg_binomial_logpmf(n, size, prob);
    a = omega * a + static_cast<double>(n);
    b = omega * b + 1.0;
  }
  return loglik;
}

struct OmegaEstimate {
  double omega = 0.0;
  double loglik = neg_inf();
};

inline std::vector<double> default_omega_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

// Empirical-Bayes choice of the discount factor: argmax of the predictive
// log likelihood over the grid; ties resolve to the smallest omega.
inline OmegaEstimate estimate_omega(std::span<const long> counts,
                                    double a0 = kGammaChainDefaultA0,
                                    double b0 = kGammaChainDefaultB0,
                                    std::span<const double> grid = {}) {
  std::vector<double> fallback;
  if (grid.empty()) {
    fallback = default_omega_grid();
    grid = fallback;
  }
  OmegaEstimate best;
  for (double omega : grid) {
    const double ll = gamma_chain_predictive_loglik(counts, omega, a0, b0);
    if (ll > best.loglik || (ll == best.loglik && omega < best.omega)) {
      best.omega = omega;
      best.loglik = ll;
    }
  }
  return best;
}

// Forward transition: given gamma_k, the next state is
// gamma_{k+1} = (gamma_k / omega) X with X ~ Beta(omega a_k, (1-omega) a_k),
// a martingale evolution (E[gamma_{k+1} | gamma_k] = gamma_k).
inline double gamma_chain_transition_logpdf(double gamma_next, double gamma_prev, double a_k,
                                            double omega) {
  if (!(gamma_prev > 0.0)) return neg_inf();
  const double x = omega * gamma_next / gamma_prev;
  if (!(x > 0.0) || !(x < 1.0)) return neg_inf();
  return beta_logpdf(x, omega * a_k, (1.0 - omega) * a_k) + std::log(omega / gamma_prev);
}

inline double gamma_chain_transition_draw(SeededRng& rng, double gamma_prev, double a_k,
                                          double omega) {
  if (!(gamma_prev > 0.0)) throw numeric_error("gamma_chain_transition_draw: nonpositive state");
  return gamma_prev / omega * draw_beta(rng, omega * a_k, (1.0 - omega) * a_k);
}

// One-step forecast gamma_{K+1} | counts ~ Gamma(omega a_K, omega b_K):
// mean-preserving, variance-inflating discounted evolution of the last
// filtered posterior.
inline double forecast_gamma(SeededRng& rng, const GammaChainFilter& f) {
  const std::size_t K = f.num_periods();
  if (K == 0) throw numeric_error("forecast_gamma: empty filter");
  return draw_gamma(rng, f.omega * f.a[K], f.omega * f.b[K]);
}

// Parameters of the h-step-ahead marginal gamma_{K+h} | counts, which stays
// Gamma with discounted shape/rate (omega^h a_K, omega^h b_K).
struct GammaMarginal {
  double shape = 0.0;
  double rate = 0.0;
};

inline GammaMarginal gamma_chain_forecast_marginal(const GammaChainFilter& f, int horizon = 1) {
  if (horizon < 1) throw numeric_error("gamma_chain_forecast_marginal: horizon must be >= 1");
  const std::size_t K = f.num_periods();
  if (K == 0) throw numeric_error("gamma_chain_forecast_marginal: empty filter");
  const double w = std::pow(f.omega, horizon);
  return GammaMarginal{w * f.a[K], w * f.b[K]};
}

// Sequential draw of (gamma_{K+1}, ..., gamma_{K+H}) continuing the chain
// past the data: first step from the evolved filtered law, later steps via
// the forward transition with shapes decaying as omega^h a_K.
inline std::vector<double> gamma_chain_forecast_path(SeededRng& rng, const GammaChainFilter& f,
                                                     int horizon) {
  if (horizon < 1) throw numeric_error("gamma_chain_forecast_path: horizon must be >= 1");
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(horizon));
  path.push_back(forecast_gamma(rng, f));
  double a = f.omega * f.a[f.num_periods()];
  for (int h = 1; h < horizon; ++h) {
    path.push_back(gamma_chain_transition_draw(rng, path.back(), a, f.omega));
    a *= f.omega;
  }
  return path;
}

// Full chain state as carried inside posterior draws: the estimated
// discount factor, prior, filtered parameters, and one sampled path.
struct GammaChainState {
  double omega = 0.0;
  double a0 = kGammaChainDefaultA0;
  double b0 = kGammaChainDefaultB0;
  std::vector<double> filtered_a;  // a_k, k = 1..K
  std::vector<double> filtered_b;  // b_k, k = 1..K
  std::vector<double> gammas;      // sampled gamma_1..gamma_K
};

}  // namespace smpp
