#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/kernels.hpp"
#include "smpp/pbar.hpp"
#include "smpp/rng.hpp"

namespace smpp {

// Which kernels the mixture carries besides event time.
enum class ModelArity { TimeOnly, TimeWind, TimeWindDamage };

// Hyperprior constants: alpha ~ Gamma(shape, rate); rho uniform on (0,1);
// the four variances are inverse-gamma with a common shape; AR coefficients
// uniform on (-1,1).
struct Hyperpriors {
  double alpha_shape = 2.0;
  double alpha_rate = 1.0;
  double ig_shape = 3.0;
  double sigma2_rate = 2.0;     // wind kernel variance sigma^2
  double zeta2_rate = 10.0;     // damage kernel variance zeta^2
  double sigma1_2_rate = 2.0;   // wind AR innovation variance sigma_1^2
  double sigma2_2_rate = 10.0;  // damage AR innovation variance sigma_2^2
};

// Rate of an IG(3, rate) prior whose mean equals half the squared quarter
// range of the data: E = 0.5 (R/4)^2 and rate = 2 E = (R/4)^2.
inline double ig_rate_from_range(double range) {
  if (!(range > 0.0)) throw numeric_error("ig_rate_from_range: range must be positive");
  return (range / 4.0) * (range / 4.0);
}

inline double draw_inv_gamma(SeededRng& rng, double shape, double rate) {
  return 1.0 / draw_gamma(rng, shape, rate);
}

inline double inv_gamma_logpdf(double x, double shape, double rate) {
  if (x <= 0.0) return neg_inf();
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

// Truncated stick-breaking mixture state shared across periods: one weight
// vector, per-period atoms evolving over k, allocation variables, and the
// scalar hyperparameters. Matrices are components (rows, j = 0..N-1) by
// periods (columns, k = 0..K-1).
struct DdpState {
  int N = 50;                   // truncation level
  std::vector<double> z;        // stick variables, length N-1
  std::vector<double> w;        // weights, length N
  Matrix mu;                    // time atoms in (0,1)
  Matrix v;                     // PBAR latents; column 0 is a placeholder (no transition into k=1)
  Matrix nu;                    // wind-mark atoms
  Matrix eta;                   // damage-mark atoms
  double alpha = 1.0;           // DP precision
  double rho = 0.5;             // PBAR dependence
  double tau = 575.0;           // Beta kernel scale (fixed)
  double sigma2 = 1.0;          // wind kernel variance
  double zeta2 = 1.0;           // damage kernel variance
  double beta_ar = 0.0;         // wind AR coefficient
  double phi_ar = 0.0;          // damage AR coefficient
  double sigma1_2 = 1.0;        // wind AR innovation variance
  double sigma2_2 = 1.0;        // damage AR innovation variance
  ModelArity arity = ModelArity::TimeWindDamage;
  std::vector<std::vector<int>> L;           // allocations per period, 0-based component index
  std::vector<std::vector<double>> imputed_z;  // damage marks with missing entries imputed

  std::size_t num_periods() const { return mu.cols(); }

  BetaKernel time_kernel(std::size_t j, std::size_t k) const {
    return BetaKernel{mu(j, k), tau};
  }
  GaussKernel wind_kernel(std::size_t j, std::size_t k) const {
    return GaussKernel{nu(j, k), sigma2};
  }
  GaussKernel damage_kernel(std::size_t j, std::size_t k) const {
    return GaussKernel{eta(j, k), zeta2};
  }
};

// w_j = z_j prod_{r<j} (1 - z_r) for j < N, closed by w_N = 1 - sum_{j<N} w_j
// so the weights are an exact simplex at any truncation level.
inline std::vector<double> stick_break(std::span<const double> z) {
  std::vector<double> w(z.size() + 1);
  double remaining = 1.0;
  double used = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!(z[j] > 0.0) || !(z[j] < 1.0)) throw numeric_error("stick_break: stick outside (0,1)");
    w[j] = z[j] * remaining;
    used += w[j];
    remaining *= 1.0 - z[j];
  }
  w[z.size()] = std::max(0.0, 1.0 - used);
  return w;
}

// Expected weight mass retained by an N-component truncation given the DP
// precision: E(sum_{j<=N} w_j | alpha) = 1 - {alpha/(alpha+1)}^N.
inline double truncation_mass(double alpha, int N) {
  if (!(alpha > 0.0)) throw numeric_error("truncation_mass: alpha must be positive");
  if (N < 1) throw numeric_error("truncation_mass: N must be >= 1");
  return 1.0 - std::pow(alpha / (alpha + 1.0), N);
}

struct PriorConfig {
  int truncation = 50;
  double tau = 575.0;
  ModelArity arity = ModelArity::TimeWindDamage;
  Hyperpriors hyper{};
  // Pin any hyperparameter instead of drawing it (simulation truths, tests).
  std::optional<double> fixed_alpha;
  std::optional<double> fixed_rho;
  std::optional<double> fixed_sigma2;
  std::optional<double> fixed_zeta2;
  std::optional<double> fixed_beta_ar;
  std::optional<double> fixed_phi_ar;
  std::optional<double> fixed_sigma1_2;
  std::optional<double> fixed_sigma2_2;
};

// Exact draw from the prior: sticks from Beta(1, alpha); time atoms start
// uniform and evolve by the Beta autoregression; mark atoms start at their
// stationary normal N(0, s^2/(1-coef^2)) and evolve by AR(1).
inline DdpState sample_prior_state(std::size_t K, const PriorConfig& config, SeededRng& rng) {
  if (K < 1) throw numeric_error("sample_prior_state: K must be >= 1");
  if (config.truncation < 1) throw numeric_error("sample_prior_state: truncation must be >= 1");
  DdpState s;
  s.N = config.truncation;
  s.tau = config.tau;
  s.arity = config.arity;
  const Hyperpriors& h = config.hyper;
  s.alpha = config.fixed_alpha ? *config.fixed_alpha
                               : draw_gamma(rng, h.alpha_shape, h.alpha_rate);
  s.rho = config.fixed_rho ? *config.fixed_rho : rng.uniform();
  s.sigma2 = config.fixed_sigma2 ? *config.fixed_sigma2
                                 : draw_inv_gamma(rng, h.ig_shape, h.sigma2_rate);
  s.zeta2 = config.fixed_zeta2 ? *config.fixed_zeta2
                               : draw_inv_gamma(rng, h.ig_shape, h.zeta2_rate);
  s.sigma1_2 = config.fixed_sigma1_2 ? *config.fixed_sigma1_2
                                     : draw_inv_gamma(rng, h.ig_shape, h.sigma1_2_rate);
  s.sigma2_2 = config.fixed_sigma2_2 ? *config.fixed_sigma2_2
                                     : draw_inv_gamma(rng, h.ig_shape, h.sigma2_2_rate);
  s.beta_ar = config.fixed_beta_ar ? *config.fixed_beta_ar : rng.uniform(-1.0, 1.0);
  s.phi_ar = config.fixed_phi_ar ? *config.fixed_phi_ar : rng.uniform(-1.0, 1.0);

  const std::size_t N = static_cast<std::size_t>(s.N);
  s.z.resize(N - 1);
  for (double& zj : s.z) zj = clamp_unit(draw_beta(rng, 1.0, s.alpha));
  s.w = stick_break(s.z);

  s.mu = Matrix(N, K);
  s.v = Matrix(N, K, 1.0);
  s.nu = Matrix(N, K);
  s.eta = Matrix(N, K);
  const PbarParams pbar{1.0, 1.0, s.rho};
  const double nu1_sd = std::sqrt(s.sigma1_2 / (1.0 - s.beta_ar * s.beta_ar));
  const double eta1_sd = std::sqrt(s.sigma2_2 / (1.0 - s.phi_ar * s.phi_ar));
  for (std::size_t j = 0; j < N; ++j) {
    s.mu(j, 0) = clamp_unit(rng.uniform());
    s.nu(j, 0) = draw_normal(rng, 0.0, nu1_sd);
    s.eta(j, 0) = draw_normal(rng, 0.0, eta1_sd);
    for (std::size_t k = 1; k < K; ++k) {
      const PbarStep step = pbar_step(rng, s.mu(j, k - 1), pbar);
      s.mu(j, k) = step.mu;
      s.v(j, k) = step.v;
      s.nu(j, k) = draw_normal(rng, s.beta_ar * s.nu(j, k - 1), std::sqrt(s.sigma1_2));
      s.eta(j, k) = draw_normal(rng, s.phi_ar * s.eta(j, k - 1), std::sqrt(s.sigma2_2));
    }
  }
  return s;
}

// Log joint mixture density at (t [, y [, z]]) for period k (0-based):
// log sum_j w_j Beta(t | mu_{j,k} tau, (1-mu_{j,k}) tau) [N(y | nu_{j,k}, sigma^2)]
// [N(z | eta_{j,k}, zeta^2)], evaluated by log-sum-exp.
inline double mixture_logdensity(const DdpState& s, std::size_t k, double t,
                                 std::optional<double> y = std::nullopt,
                                 std::optional<double> z = std::nullopt) {
  if (!(t > 0.0) || !(t < 1.0)) throw std::domain_error("mixture_logdensity: t outside (0,1)");
  if (z.has_value() && !y.has_value()) {
    throw std::domain_error("mixture_logdensity: damage mark without wind mark");
  }
  const std::size_t N = static_cast<std::size_t>(s.N);
  std::vector<double> terms(N, neg_inf());
  for (std::size_t j = 0; j < N; ++j) {
    if (s.w[j] <= 0.0) continue;
    double lp = std::log(s.w[j]) + s.time_kernel(j, k).logpdf(t);
    if (y.has_value()) lp += s.wind_kernel(j, k).logpdf(*y);
    if (z.has_value()) lp += s.damage_kernel(j, k).logpdf(*z);
    terms[j] = lp;
  }
  return log_sum_exp(terms);
}

// Seasonal density f_k(t) of event times in period k (0-based).
inline double seasonal_density(const DdpState& s, std::size_t k, double t) {
  return std::exp(mixture_logdensity(s, k, t));
}

// CDF of the seasonal density: sum_j w_j BetaCdf(t); exact via the
// regularized incomplete beta, no quadrature.
inline double seasonal_cdf(const DdpState& s, std::size_t k, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(s.N); ++j) {
    if (s.w[j] <= 0.0) continue;
    acc += s.w[j] * s.time_kernel(j, k).cdf(t);
  }
  return acc;
}

}  // namespace smpp
