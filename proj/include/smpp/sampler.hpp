#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/ddp.hpp"
#include "smpp/gamma_chain.hpp"
#include "smpp/ingest.hpp"
#include "smpp/kernels.hpp"
#include "smpp/pbar.hpp"
#include "smpp/rng.hpp"
#include "smpp/special.hpp"

namespace smpp {

struct McmcConfig {
  std::size_t n_iter = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  int chains = 1;
  ModelArity arity = ModelArity::TimeWindDamage;
  int truncation = 50;
  double tau = 575.0;
  Hyperpriors hyper{};
  // Discount factor for the intensity chain: estimated from the annual
  // counts unless pinned here.
  std::optional<double> fixed_omega;
  double gamma_a0 = kGammaChainDefaultA0;
  double gamma_b0 = kGammaChainDefaultB0;
  // Random-walk adaptation for the dependence parameter: acceptance is
  // reviewed every adapt_interval sweeps during burn-in, then frozen.
  std::size_t adapt_interval = 50;

  void validate() const {
    if (n_iter == 0 || burn_in >= n_iter) throw numeric_error("McmcConfig: need burn_in < n_iter");
    if (thin == 0) throw numeric_error("McmcConfig: thin must be >= 1");
    if (chains < 1) throw numeric_error("McmcConfig: chains must be >= 1");
    if (truncation < 1) throw numeric_error("McmcConfig: truncation must be >= 1");
    if (!(tau > 0.0)) throw numeric_error("McmcConfig: tau must be positive");
    if (fixed_omega && (!(*fixed_omega > 0.0) || !(*fixed_omega <= 1.0))) {
      throw numeric_error("McmcConfig: fixed omega outside (0,1]");
    }
  }

  PriorConfig prior_config() const {
    PriorConfig pc;
    pc.truncation = truncation;
    pc.tau = tau;
    pc.arity = arity;
    pc.hyper = hyper;
    return pc;
  }
};

struct AcceptanceStats {
  long proposals = 0;
  long accepts = 0;
  double rate() const { return proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0; }
};

struct Snapshot {
  DdpState state;
  GammaChainState gamma;
  std::size_t iteration = 0;
};

struct PosteriorDraws {
  std::vector<Snapshot> snapshots;
  McmcConfig config;
  std::uint64_t chain_id = 0;
  double omega = 0.0;
  std::map<std::string, AcceptanceStats> acceptance;
};

namespace detail {

inline bool mh_accept(SeededRng& rng, double log_ratio, AcceptanceStats& acc) {
  ++acc.proposals;
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
    ++acc.accepts;
    return true;
  }
  return false;
}

// Truncated N(mean, sd^2) on (lo, hi) by inverse-CDF; degenerate windows
// (both bounds in the same extreme tail) are a numeric failure.
inline double draw_truncated_normal(SeededRng& rng, double mean, double sd, double lo, double hi) {
  const double p_lo = normal_cdf(lo, mean, sd);
  const double p_hi = normal_cdf(hi, mean, sd);
  if (!(p_hi - p_lo > 1e-300)) throw numeric_error("draw_truncated_normal: degenerate window");
  const double u = p_lo + (p_hi - p_lo) * rng.uniform();
  const double clamped = std::min(1.0 - 1e-16, std::max(1e-300, u));
  return mean + sd * normal_quantile(clamped);
}

// Log likelihood of a time atom value for the component's allocated times,
// from the sufficient statistics (count, sum log t, sum log(1-t)).
inline double time_atom_loglik(double mu, double tau, double n, double sum_log_t,
                               double sum_log_1mt) {
  if (n == 0.0) return 0.0;
  const double a = mu * tau;
  const double b = (1.0 - mu) * tau;
  return (a - 1.0) * sum_log_t + (b - 1.0) * sum_log_1mt - n * lbeta(a, b);
}

// Full conditional terms of the dependence parameter rho: every Beta
// autoregression transition plus the Beta(1, 1-rho) law of each latent v.
inline double rho_log_target(const DdpState& s, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0)) return neg_inf();
  const std::size_t K = s.num_periods();
  double lp = 0.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(s.N); ++j) {
    for (std::size_t k = 1; k < K; ++k) {
      lp += pbar_transition_logpdf(s.mu(j, k), s.mu(j, k - 1), s.v(j, k), rho);
      lp += beta_logpdf(s.v(j, k), 1.0, 1.0 - rho);
    }
  }
  return lp;
}

// Sufficient statistics of rho's full conditional. With
// u_{j,k} = (mu_{j,k} + v_{j,k} - 1) / (v_{j,k} mu_{j,k-1}) the target is
//   (rho-1) S_logu - rho (S_log1mu + S_log1mv)
//     - C lbeta(rho, 1-rho) + C log(1-rho) + const,
// so each candidate evaluation costs O(1) instead of O(N K).
struct RhoStats {
  double sum_log_u = 0.0;
  double sum_log_1mu = 0.0;
  double sum_log_1mv = 0.0;
  double count = 0.0;

  double log_target(double rho) const {
    if (!(rho > 0.0) || !(rho < 1.0)) return neg_inf();
    return (rho - 1.0) * sum_log_u - rho * (sum_log_1mu + sum_log_1mv) -
           count * lbeta(rho, 1.0 - rho) + count * std::log1p(-rho);
  }
};

inline RhoStats rho_stats(const DdpState& s) {
  RhoStats st;
  const std::size_t K = s.num_periods();
  for (std::size_t j = 0; j < static_cast<std::size_t>(s.N); ++j) {
    for (std::size_t k = 1; k < K; ++k) {
      const double u = clamp_unit((s.mu(j, k) + s.v(j, k) - 1.0) / (s.v(j, k) * s.mu(j, k - 1)));
      st.sum_log_u += std::log(u);
      st.sum_log_1mu += std::log1p(-u);
      st.sum_log_1mv += std::log1p(-s.v(j, k));
      st.count += 1.0;
    }
  }
  return st;
}

// Per-period cache of allocation log probabilities,
//   log w_j + log Beta(t | mu_{j,k} tau, ...) [+ log N(y | nu_{j,k}, sigma^2)]
//   [+ log N(z | eta_{j,k}, zeta^2)],
// with the component constants (kernel shapes, normalizers) computed once so
// each observation costs O(N) with no special-function calls.
class AllocationTable {
 public:
  AllocationTable(const DdpState& s, std::size_t k)
      : state_(&s),
        k_(k),
        size_(static_cast<std::size_t>(s.N)),
        log_w_(size_),
        shape_a_(size_),
        shape_b_(size_),
        lnorm_(size_),
        use_wind_(s.arity != ModelArity::TimeOnly),
        use_damage_(s.arity == ModelArity::TimeWindDamage),
        wind_prec_(0.5 / s.sigma2),
        wind_lnorm_(-0.5 * std::log(2.0 * std::numbers::pi * s.sigma2)),
        dmg_prec_(0.5 / s.zeta2),
        dmg_lnorm_(-0.5 * std::log(2.0 * std::numbers::pi * s.zeta2)) {
    for (std::size_t j = 0; j < size_; ++j) {
      log_w_[j] = s.w[j] > 0.0 ? std::log(s.w[j]) : neg_inf();
      shape_a_[j] = s.mu(j, k) * s.tau;
      shape_b_[j] = (1.0 - s.mu(j, k)) * s.tau;
      lnorm_[j] = -lbeta(shape_a_[j], shape_b_[j]);
    }
  }

  std::size_t size() const { return size_; }
  bool uses_wind() const { return use_wind_; }
  bool uses_damage() const { return use_damage_; }

  // Unnormalized allocation log probabilities for one observation; marks
  // are ignored when the model arity does not carry them.
  void log_probs(double t, double y, double z, std::span<double> out) const {
    const double log_t = std::log(t);
    const double log_1mt = std::log1p(-t);
    for (std::size_t j = 0; j < size_; ++j) {
      double l = log_w_[j] + (shape_a_[j] - 1.0) * log_t + (shape_b_[j] - 1.0) * log_1mt + lnorm_[j];
      if (use_wind_) {
        const double dy = y - state_->nu(j, k_);
        l += wind_lnorm_ - wind_prec_ * dy * dy;
      }
      if (use_damage_) {
        const double dz = z - state_->eta(j, k_);
        l += dmg_lnorm_ - dmg_prec_ * dz * dz;
      }
      out[j] = l;
    }
  }

 private:
  const DdpState* state_;
  std::size_t k_;
  std::size_t size_;
  std::vector<double> log_w_;
  std::vector<double> shape_a_;
  std::vector<double> shape_b_;
  std::vector<double> lnorm_;
  bool use_wind_;
  bool use_damage_;
  double wind_prec_;
  double wind_lnorm_;
  double dmg_prec_;
  double dmg_lnorm_;
};

}  // namespace detail

// Reallocate every observation to a mixture component with probability
// proportional to w_j times the product of kernel densities at the
// observation (marks included per model arity; missing damage uses the
// current imputation).
inline void update_allocations(DdpState& s, const Corpus& corpus, SeededRng& rng) {
  const std::size_t N = static_cast<std::size_t>(s.N);
  const std::size_t K = s.num_periods();
  std::vector<double> lp(N);
  std::vector<double> prob(N);
  for (std::size_t k = 0; k < K; ++k) {
    const SeasonPattern& pat = corpus.patterns[k];
    if (pat.count() == 0) continue;
    const detail::AllocationTable table(s, k);
    for (std::size_t i = 0; i < pat.count(); ++i) {
      const double y = table.uses_wind() ? pat.wind_marks[i] : 0.0;
      const double z = table.uses_damage() ? s.imputed_z[k][i] : 0.0;
      table.log_probs(pat.times[i], y, z, lp);
      const double m = *std::max_element(lp.begin(), lp.end());
      if (!std::isfinite(m)) throw numeric_error("update_allocations: all components have zero density");
      for (std::size_t j = 0; j < N; ++j) prob[j] = std::exp(lp[j] - m);
      s.L[k][i] = static_cast<int>(draw_categorical(rng, prob));
    }
  }
}

// Conjugate refresh of the stick variables and DP precision given the
// allocation counts: z_j ~ Beta(1 + M_j, alpha + sum_{r>j} M_r), weights by
// stick-breaking, then alpha ~ Gamma(a + N - 1, b - sum log(1 - z_j)).
inline void update_weights_and_alpha(DdpState& s, const Hyperpriors& hyper, SeededRng& rng) {
  const std::size_t N = static_cast<std::size_t>(s.N);
  std::vector<double> M(N, 0.0);
  for (const auto& period : s.L) {
    for (int j : period) M[static_cast<std::size_t>(j)] += 1.0;
  }
  std::vector<double> tail(N + 1, 0.0);  // tail[j] = sum_{r >= j} M_r
  for (std::size_t j = N; j-- > 0;) tail[j] = tail[j + 1] + M[j];
  double sum_log_1mz = 0.0;
  for (std::size_t j = 0; j + 1 < N; ++j) {
    s.z[j] = clamp_unit(draw_beta(rng, 1.0 + M[j], s.alpha + tail[j + 1]));
    sum_log_1mz += std::log1p(-s.z[j]);
  }
  s.w = stick_break(s.z);
  s.alpha = draw_gamma(rng, hyper.alpha_shape + static_cast<double>(N) - 1.0,
                       hyper.alpha_rate - sum_log_1mz);
}

// Refresh every time atom. Components with no allocated observations
// anywhere are redrawn from the prior path law (uniform start, then the
// autoregression transition at the current latents). Active components get
// a Metropolis step per period with the prior transition as proposal, so
// the acceptance ratio is the likelihood ratio times the forward-neighbor
// transition ratio.
inline void update_time_atoms(DdpState& s, const Corpus& corpus, SeededRng& rng,
                              AcceptanceStats& acc) {
  const std::size_t N = static_cast<std::size_t>(s.N);
  const std::size_t K = s.num_periods();
  Matrix n_alloc(N, K), sum_log_t(N, K), sum_log_1mt(N, K);
  for (std::size_t k = 0; k < K; ++k) {
    const SeasonPattern& pat = corpus.patterns[k];
    for (std::size_t i = 0; i < pat.count(); ++i) {
      const std::size_t j = static_cast<std::size_t>(s.L[k][i]);
      n_alloc(j, k) += 1.0;
      sum_log_t(j, k) += std::log(pat.times[i]);
      sum_log_1mt(j, k) += std::log1p(-pat.times[i]);
    }
  }
  for (std::size_t j = 0; j < N; ++j) {
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += n_alloc(j, k);
    if (total == 0.0) {
      // Inactive: exact draw from the conditional prior path.
      s.mu(j, 0) = clamp_unit(rng.uniform());
      for (std::size_t k = 1; k < K; ++k) {
        s.mu(j, k) = pbar_transition_draw_given_v(rng, s.mu(j, k - 1), s.v(j, k), s.rho);
      }
      continue;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double cur = s.mu(j, k);
      const double cand = (k == 0)
                              ? clamp_unit(rng.uniform())
                              : pbar_transition_draw_given_v(rng, s.mu(j, k - 1), s.v(j, k), s.rho);
      double log_ratio =
          detail::time_atom_loglik(cand, s.tau, n_alloc(j, k), sum_log_t(j, k), sum_log_1mt(j, k)) -
          detail::time_atom_loglik(cur, s.tau, n_alloc(j, k), sum_log_t(j, k), sum_log_1mt(j, k));
      if (k + 1 < K) {
        log_ratio += pbar_transition_logpdf(s.mu(j, k + 1), cand, s.v(j, k + 1), s.rho) -
                     pbar_transition_logpdf(s.mu(j, k + 1), cur, s.v(j, k + 1), s.rho);
      }
      if (detail::mh_accept(rng, log_ratio, acc)) s.mu(j, k) = cand;
    }
  }
}

// Metropolis refresh of the autoregression latents v_{j,k} (k >= 2) with
// their Beta(1, 1-rho) prior as proposal; what remains of the full
// conditional ratio is exactly the transition-density ratio, and proposals
// outside the bounded support reject outright.
inline void update_latents_v(DdpState& s, SeededRng& rng, AcceptanceStats& acc) {
  const std::size_t K = s.num_periods();
  for (std::size_t j = 0; j < static_cast<std::size_t>(s.N); ++j) {
    for (std::size_t k = 1; k < K; ++k) {
      const double cand = clamp_unit(draw_beta(rng, 1.0, 1.0 - s.rho));
      const double log_ratio = pbar_transition_logpdf(s.mu(j, k), s.mu(j, k - 1), cand, s.rho) -
                               pbar_transition_logpdf(s.mu(j, k), s.mu(j, k - 1), s.v(j, k), s.rho);
      if (detail::mh_accept(rng, log_ratio, acc)) s.v(j, k) = cand;
    }
  }
}

// Random-walk Metropolis on logit(rho) against the full conditional
// (transition terms, latent priors, uniform prior; plus the logit
// Jacobian). step is the walk's standard deviation, owned by the caller so
// burn-in adaptation can tune it.
inline void update_rho(DdpState& s, SeededRng& rng, double step, AcceptanceStats& acc) {
  const double logit = std::log(s.rho / (1.0 - s.rho));
  const double cand_logit = logit + step * draw_normal(rng);
  const double cand = 1.0 / (1.0 + std::exp(-cand_logit));
  if (!(cand > 0.0) || !(cand < 1.0)) {  // saturated logistic: reject
    ++acc.proposals;
    return;
  }
  const detail::RhoStats stats = detail::rho_stats(s);
  const double log_ratio = stats.log_target(cand) - stats.log_target(s.rho) +
                           std::log(cand * (1.0 - cand)) - std::log(s.rho * (1.0 - s.rho));
  if (detail::mh_accept(rng, log_ratio, acc)) s.rho = cand;
}

namespace detail {

// One mark family (wind or damage): Gibbs refresh of the atom grid, the
// kernel variance, the AR innovation variance, and the AR coefficient.
// Atoms follow AR(1) across periods with a stationary start, so interior
// full conditionals combine both neighbors with the allocated data.
struct MarkFamily {
  Matrix* atoms = nullptr;        // nu or eta
  double* kernel_var = nullptr;   // sigma2 or zeta2
  double* ar_coef = nullptr;      // beta_ar or phi_ar
  double* innov_var = nullptr;    // sigma1_2 or sigma2_2
  double kernel_var_rate = 0.0;   // IG prior rates
  double innov_var_rate = 0.0;
};

struct NormalParams {
  double mean = 0.0;
  double sd = 1.0;
};

// Complete-the-square parameters of one mark atom's full conditional: the
// likelihood of its allocated marks (n observations summing to sum_mark)
// combined with the AR neighbor terms; a missing prev means the stationary
// start at k = 0, a missing next means the final period.
inline NormalParams mark_atom_conditional(double n, double sum_mark, double kernel_var, double coef,
                                          double innov_var, std::optional<double> prev,
                                          std::optional<double> next) {
  double prec = n / kernel_var;
  double mean_num = sum_mark / kernel_var;
  if (prev.has_value()) {
    prec += 1.0 / innov_var;
    mean_num += coef * *prev / innov_var;
  } else {
    prec += (1.0 - coef * coef) / innov_var;
  }
  if (next.has_value()) {
    prec += coef * coef / innov_var;
    mean_num += coef * *next / innov_var;
  }
  return {mean_num / prec, std::sqrt(1.0 / prec)};
}

template <typename MarkAt>
inline void update_mark_family(DdpState& s, const Corpus& corpus, const Hyperpriors& hyper,
                               SeededRng& rng, const MarkFamily& fam, MarkAt mark_at,
                               AcceptanceStats& coef_acc) {
  const std::size_t N = static_cast<std::size_t>(s.N);
  const std::size_t K = s.num_periods();
  Matrix& atoms = *fam.atoms;
  const double coef = *fam.ar_coef;
  const double ivar = *fam.innov_var;
  const double kvar = *fam.kernel_var;

  Matrix n_alloc(N, K), sum_mark(N, K);
  double n_total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const SeasonPattern& pat = corpus.patterns[k];
    for (std::size_t i = 0; i < pat.count(); ++i) {
      const std::size_t j = static_cast<std::size_t>(s.L[k][i]);
      n_alloc(j, k) += 1.0;
      sum_mark(j, k) += mark_at(k, i);
      n_total += 1.0;
    }
  }

  // Atoms. Components with no allocated observations anywhere are redrawn
  // as an exact AR prior path (stationary start, then transitions); active
  // components get sequential Gibbs in k so neighbor values are current.
  for (std::size_t j = 0; j < N; ++j) {
    double row_total = 0.0;
    for (std::size_t k = 0; k < K; ++k) row_total += n_alloc(j, k);
    if (row_total == 0.0) {
      atoms(j, 0) = draw_normal(rng, 0.0, std::sqrt(ivar / (1.0 - coef * coef)));
      for (std::size_t k = 1; k < K; ++k) {
        atoms(j, k) = draw_normal(rng, coef * atoms(j, k - 1), std::sqrt(ivar));
      }
      continue;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const NormalParams cond = mark_atom_conditional(
          n_alloc(j, k), sum_mark(j, k), kvar, coef, ivar,
          k > 0 ? std::optional<double>(atoms(j, k - 1)) : std::nullopt,
          k + 1 < K ? std::optional<double>(atoms(j, k + 1)) : std::nullopt);
      atoms(j, k) = draw_normal(rng, cond.mean, cond.sd);
    }
  }

  // Kernel variance: conjugate inverse gamma over allocated residuals.
  double ssr = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const SeasonPattern& pat = corpus.patterns[k];
    for (std::size_t i = 0; i < pat.count(); ++i) {
      const double d = mark_at(k, i) - atoms(static_cast<std::size_t>(s.L[k][i]), k);
      ssr += d * d;
    }
  }
  *fam.kernel_var = draw_inv_gamma(rng, hyper.ig_shape + 0.5 * n_total,
                                   fam.kernel_var_rate + 0.5 * ssr);

  // Innovation variance: conjugate inverse gamma over the stationary start
  // terms and the AR transitions.
  double ss_innov = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    ss_innov += (1.0 - coef * coef) * atoms(j, 0) * atoms(j, 0);
    for (std::size_t k = 1; k < K; ++k) {
      const double d = atoms(j, k) - coef * atoms(j, k - 1);
      ss_innov += d * d;
    }
  }
  *fam.innov_var = draw_inv_gamma(rng, hyper.ig_shape + 0.5 * static_cast<double>(N * K),
                                  fam.innov_var_rate + 0.5 * ss_innov);

  // AR coefficient on (-1,1): the transition terms give a truncated-normal
  // proposal; the stationary-start factor (1-coef^2)^{N/2} exp(coef^2 S0 /
  // (2 innov_var)) enters through a Metropolis correction, keeping the
  // update exact.
  const double ivar_new = *fam.innov_var;
  double s_xx = 0.0;
  double s_xy = 0.0;
  double s0 = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    s0 += atoms(j, 0) * atoms(j, 0);
    for (std::size_t k = 1; k < K; ++k) {
      s_xx += atoms(j, k - 1) * atoms(j, k - 1);
      s_xy += atoms(j, k) * atoms(j, k - 1);
    }
  }
  double cand;
  if (s_xx > 0.0) {
    cand = draw_truncated_normal(rng, s_xy / s_xx, std::sqrt(ivar_new / s_xx), -1.0, 1.0);
  } else {
    cand = rng.uniform(-1.0, 1.0);
  }
  const auto start_factor = [&](double c) {
    return 0.5 * static_cast<double>(N) * std::log1p(-c * c) + c * c * s0 / (2.0 * ivar_new);
  };
  if (detail::mh_accept(rng, start_factor(cand) - start_factor(coef), coef_acc)) {
    *fam.ar_coef = cand;
  }
}

}  // namespace detail

// Closed-form refreshes for everything attached to marks: atom grids, the
// kernel variances, the AR innovation variances, and (with a Metropolis
// correction for the stationary start) the AR coefficients.
inline void update_mark_atoms_and_hypers(DdpState& s, const Corpus& corpus,
                                         const Hyperpriors& hyper, SeededRng& rng,
                                         AcceptanceStats& wind_coef_acc,
                                         AcceptanceStats& damage_coef_acc) {
  if (s.arity == ModelArity::TimeOnly) return;
  {
    detail::MarkFamily wind;
    wind.atoms = &s.nu;
    wind.kernel_var = &s.sigma2;
    wind.ar_coef = &s.beta_ar;
    wind.innov_var = &s.sigma1_2;
    wind.kernel_var_rate = hyper.sigma2_rate;
    wind.innov_var_rate = hyper.sigma1_2_rate;
    detail::update_mark_family(
        s, corpus, hyper, rng, wind,
        [&](std::size_t k, std::size_t i) { return corpus.patterns[k].wind_marks[i]; },
        wind_coef_acc);
  }
  if (s.arity == ModelArity::TimeWindDamage) {
    detail::MarkFamily damage;
    damage.atoms = &s.eta;
    damage.kernel_var = &s.zeta2;
    damage.ar_coef = &s.phi_ar;
    damage.innov_var = &s.sigma2_2;
    damage.kernel_var_rate = hyper.zeta2_rate;
    damage.innov_var_rate = hyper.sigma2_2_rate;
    detail::update_mark_family(
        s, corpus, hyper, rng, damage,
        [&](std::size_t k, std::size_t i) { return s.imputed_z[k][i]; }, damage_coef_acc);
  }
}

// Redraw each missing damage mark from its allocated component's kernel;
// observed marks stay fixed to the data.
inline void impute_missing_marks(DdpState& s, const Corpus& corpus, SeededRng& rng) {
  if (s.arity != ModelArity::TimeWindDamage) return;
  const double sd = std::sqrt(s.zeta2);
  for (std::size_t k = 0; k < s.num_periods(); ++k) {
    const SeasonPattern& pat = corpus.patterns[k];
    for (std::size_t i = 0; i < pat.count(); ++i) {
      if (!pat.damage_marks[i].has_value()) {
        s.imputed_z[k][i] = draw_normal(rng, s.eta(static_cast<std::size_t>(s.L[k][i]), k), sd);
      }
    }
  }
}

namespace detail {

// Sum sampled yearly intensities into per-period totals.
inline std::vector<double> aggregate_gammas(const std::vector<double>& annual,
                                            int years_per_period, std::size_t num_periods) {
  std::vector<double> out(num_periods, 0.0);
  for (std::size_t yr = 0; yr < annual.size(); ++yr) {
    const std::size_t k = yr / static_cast<std::size_t>(years_per_period);
    out[std::min(k, num_periods - 1)] += annual[yr];
  }
  return out;
}

}  // namespace detail

// One full MCMC chain. Deterministic given (config.seed, chain_id): the
// chain owns rng substream chain_id of the root seed. The discount factor
// is fixed up front (estimated from annual counts unless pinned); the
// intensity path is conditionally independent of the mixture given the
// counts, so it is drawn once per retained snapshot. The optional observer
// sees the state after every sweep (used by tests to trace scalars without
// storing snapshots).
inline PosteriorDraws run_chain(
    const Corpus& corpus, const McmcConfig& config, std::uint64_t chain_id = 0,
    const std::function<void(std::size_t, const DdpState&)>& observer = {}) {
  config.validate();
  const std::size_t K = corpus.num_periods();
  if (K == 0) throw numeric_error("run_chain: corpus has no periods");
  if (corpus.annual_counts.empty()) throw numeric_error("run_chain: corpus has no annual counts");
  const int ypp = corpus.aggregation.years_per_period;
  if (ypp <= 0) throw numeric_error("run_chain: years_per_period must be positive");
  if ((corpus.annual_counts.size() + static_cast<std::size_t>(ypp) - 1) /
          static_cast<std::size_t>(ypp) !=
      K) {
    throw numeric_error("run_chain: annual counts inconsistent with period count");
  }

  SeededRng rng(config.seed, chain_id);
  PosteriorDraws draws;
  draws.config = config;
  draws.chain_id = chain_id;

  const double omega =
      config.fixed_omega
          ? *config.fixed_omega
          : estimate_omega(corpus.annual_counts, config.gamma_a0, config.gamma_b0).omega;
  draws.omega = omega;
  const GammaChainFilter annual_filter =
      gamma_chain_filter(corpus.annual_counts, omega, config.gamma_a0, config.gamma_b0);

  DdpState state = sample_prior_state(K, config.prior_config(), rng);
  state.L.assign(K, {});
  state.imputed_z.assign(K, {});
  for (std::size_t k = 0; k < K; ++k) {
    const SeasonPattern& pat = corpus.patterns[k];
    state.L[k].resize(pat.count());
    for (std::size_t i = 0; i < pat.count(); ++i) {
      state.L[k][i] = static_cast<int>(draw_categorical(rng, state.w));
    }
    state.imputed_z[k].resize(pat.count(), 0.0);
    for (std::size_t i = 0; i < pat.count(); ++i) {
      if (pat.damage_marks[i].has_value()) {
        state.imputed_z[k][i] = *pat.damage_marks[i];
      } else {
        state.imputed_z[k][i] =
            draw_normal(rng, state.eta(static_cast<std::size_t>(state.L[k][i]), k),
                        std::sqrt(state.zeta2));
      }
    }
  }

  auto& acc = draws.acceptance;
  acc["time_atoms"];
  acc["v_latents"];
  acc["rho"];
  acc["wind_ar_coef"];
  acc["damage_ar_coef"];

  double rho_step = 1.0;
  long rho_window_props = 0;
  long rho_window_accepts = 0;

  const std::size_t expected =
      (config.n_iter - config.burn_in) / config.thin;
  draws.snapshots.reserve(expected);

  for (std::size_t iter = 1; iter <= config.n_iter; ++iter) {
    const auto stage = [&](const char* name, auto&& body) {
      try {
        body();
      } catch (const std::exception& e) {
        throw numeric_error("sweep " + std::to_string(iter) + ", update " + name + ": " +
                            e.what());
      }
    };
    stage("allocations", [&] { update_allocations(state, corpus, rng); });
    stage("weights_and_alpha", [&] { update_weights_and_alpha(state, config.hyper, rng); });
    stage("time_atoms", [&] { update_time_atoms(state, corpus, rng, acc["time_atoms"]); });
    stage("v_latents", [&] { update_latents_v(state, rng, acc["v_latents"]); });
    stage("rho", [&] {
      const long before_a = acc["rho"].accepts;
      update_rho(state, rng, rho_step, acc["rho"]);
      rho_window_props += 1;
      rho_window_accepts += acc["rho"].accepts - before_a;
    });
    stage("mark_atoms_and_hypers", [&] {
      update_mark_atoms_and_hypers(state, corpus, config.hyper, rng, acc["wind_ar_coef"],
                                   acc["damage_ar_coef"]);
    });
    stage("impute_missing_marks", [&] { impute_missing_marks(state, corpus, rng); });

    if (iter <= config.burn_in && config.adapt_interval > 0 &&
        iter % config.adapt_interval == 0 && rho_window_props > 0) {
      const double rate = static_cast<double>(rho_window_accepts) / rho_window_props;
      if (rate > 0.4) rho_step = std::min(rho_step * 1.4, 20.0);
      if (rate < 0.2) rho_step = std::max(rho_step / 1.4, 1e-3);
      rho_window_props = 0;
      rho_window_accepts = 0;
    }

    if (observer) observer(iter, state);

    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      Snapshot snap;
      snap.iteration = iter;
      snap.state = state;
      snap.gamma.omega = omega;
      snap.gamma.a0 = config.gamma_a0;
      snap.gamma.b0 = config.gamma_b0;
      snap.gamma.filtered_a.assign(annual_filter.a.begin() + 1, annual_filter.a.end());
      snap.gamma.filtered_b.assign(annual_filter.b.begin() + 1, annual_filter.b.end());
      const std::vector<double> annual = gamma_chain_backward_sample(rng, annual_filter);
      snap.gamma.gammas =
          detail::aggregate_gammas(annual, corpus.aggregation.years_per_period, K);
      draws.snapshots.push_back(std::move(snap));
    }
  }
  return draws;
}

}  // namespace smpp
