#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/ddp.hpp"
#include "smpp/gamma_chain.hpp"
#include "smpp/ingest.hpp"
#include "smpp/kernels.hpp"
#include "smpp/sampler.hpp"
#include "smpp/stats.hpp"

namespace smpp {

// ---------------------------------------------------------------------------
// Intensities and event-count probabilities
// ---------------------------------------------------------------------------

// lambda_k(t) = gamma_k f_k(t); gamma_k is the period's total intensity and
// f_k integrates to 1, so the curve integrates to gamma_k.
inline double intensity(const DdpState& s, double gamma_k, std::size_t k, double t) {
  if (gamma_k < 0.0) throw std::domain_error("intensity: negative total intensity");
  if (gamma_k == 0.0) return 0.0;
  return gamma_k * seasonal_density(s, k, t);
}

// Expected event count in (t1, t2]: gamma_k sum_j w_j (interval Beta mass).
inline double cumulative_intensity(const DdpState& s, double gamma_k, std::size_t k, double t1,
                                   double t2) {
  if (!(t1 >= 0.0) || !(t2 <= 1.0) || !(t1 < t2)) {
    throw std::domain_error("cumulative_intensity: need 0 <= t1 < t2 <= 1");
  }
  return gamma_k * (seasonal_cdf(s, k, t2) - seasonal_cdf(s, k, t1));
}

// Poisson event-count probabilities driven by the interval's cumulative
// intensity.
inline double prob_count(double cumulative, long x) {
  if (cumulative < 0.0) throw std::domain_error("prob_count: negative cumulative intensity");
  if (x < 0) throw std::domain_error("prob_count: negative count");
  if (cumulative == 0.0) return x == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(x) * std::log(cumulative) - cumulative -
                  std::lgamma(static_cast<double>(x) + 1.0));
}

inline double prob_at_least_one(double cumulative) {
  if (cumulative < 0.0) throw std::domain_error("prob_at_least_one: negative cumulative intensity");
  return -std::expm1(-cumulative);
}

// ---------------------------------------------------------------------------
// Conditional mark mixtures
// ---------------------------------------------------------------------------

enum class MarkTarget { Wind, Damage };

// Normalized component probabilities given an exact event time:
// w*_j(t) proportional to w_j Beta(t | mu_{j,k} tau, (1-mu_{j,k}) tau).
inline std::vector<double> conditional_time_weights(const DdpState& s, std::size_t k, double t) {
  if (!(t > 0.0) || !(t < 1.0)) throw std::domain_error("conditional_time_weights: t outside (0,1)");
  const std::size_t N = static_cast<std::size_t>(s.N);
  std::vector<double> lp(N, neg_inf());
  for (std::size_t j = 0; j < N; ++j) {
    if (s.w[j] <= 0.0) continue;
    lp[j] = std::log(s.w[j]) + s.time_kernel(j, k).logpdf(t);
  }
  const double norm = log_sum_exp(lp);
  if (!std::isfinite(norm)) throw numeric_error("conditional_time_weights: zero time marginal");
  std::vector<double> out(N);
  for (std::size_t j = 0; j < N; ++j) out[j] = std::isfinite(lp[j]) ? std::exp(lp[j] - norm) : 0.0;
  return out;
}

// Normalized component probabilities given an event-time window:
// h*_j proportional to w_j * (Beta mass of (t1, t2)).
inline std::vector<double> interval_time_weights(const DdpState& s, std::size_t k, double t1,
                                                 double t2) {
  if (!(t1 >= 0.0) || !(t2 <= 1.0) || !(t1 < t2)) {
    throw std::domain_error("interval_time_weights: need 0 <= t1 < t2 <= 1");
  }
  const std::size_t N = static_cast<std::size_t>(s.N);
  std::vector<double> raw(N, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    if (s.w[j] <= 0.0) continue;
    raw[j] = s.w[j] * s.time_kernel(j, k).interval_prob(t1, t2);
    total += raw[j];
  }
  if (!(total > 0.0)) throw numeric_error("interval_time_weights: window carries no mass");
  for (double& x : raw) x /= total;
  return raw;
}

// Restrict the mark that is NOT the target to an interval, in centered log
// units; used for cross-mark and category conditioning.
struct MarkCondition {
  double lo = neg_inf();
  double hi = std::numeric_limits<double>::infinity();
};

// Equal-variance Gaussian mixture over one mark; the conditional laws of
// either mark given times/windows/the other mark all take this form.
struct GaussianMixture {
  std::vector<double> weights;  // simplex
  std::vector<double> means;
  double variance = 1.0;

  double pdf(double x) const {
    const double sd = std::sqrt(variance);
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] <= 0.0) continue;
      acc += weights[j] * std::exp(normal_logpdf(x, means[j], sd));
    }
    return acc;
  }

  double cdf(double x) const {
    const double sd = std::sqrt(variance);
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] <= 0.0) continue;
      acc += weights[j] * normal_cdf(x, means[j], sd);
    }
    return acc;
  }

  // Monotone bisection of the cdf; tolerance is in probability.
  double quantile(double q, double tol = 1e-10) const {
    if (!(q > 0.0) || !(q < 1.0)) throw std::domain_error("GaussianMixture::quantile: q outside (0,1)");
    const double sd = std::sqrt(variance);
    double lo = means.front();
    double hi = means.front();
    for (std::size_t j = 0; j < means.size(); ++j) {
      if (weights[j] <= 0.0) continue;
      lo = std::min(lo, means[j]);
      hi = std::max(hi, means[j]);
    }
    lo -= 10.0 * sd;
    hi += 10.0 * sd;
    while (cdf(lo) > q) lo -= 10.0 * sd;
    while (cdf(hi) < q) hi += 10.0 * sd;
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double F = cdf(mid);
      if (std::abs(F - q) < tol) return mid;
      if (F < q) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo < 1e-15 * (1.0 + std::abs(mid))) return mid;
    }
    throw numeric_error("GaussianMixture::quantile: bisection did not converge");
  }
};

// Build the conditional mixture of one mark from base component weights
// (produced by conditional_time_weights or interval_time_weights),
// optionally reweighting components by the other mark's interval mass.
inline GaussianMixture conditional_mark_mixture(const DdpState& s, std::size_t k,
                                                std::span<const double> base_weights,
                                                MarkTarget target,
                                                std::optional<MarkCondition> other_mark = {}) {
  if (s.arity == ModelArity::TimeOnly) {
    throw std::domain_error("conditional_mark_mixture: model carries no marks");
  }
  if ((target == MarkTarget::Damage || other_mark.has_value()) &&
      s.arity != ModelArity::TimeWindDamage) {
    throw std::domain_error("conditional_mark_mixture: model carries no damage mark");
  }
  const std::size_t N = static_cast<std::size_t>(s.N);
  GaussianMixture mix;
  mix.weights.assign(N, 0.0);
  mix.means.resize(N);
  mix.variance = target == MarkTarget::Wind ? s.sigma2 : s.zeta2;
  const Matrix& atoms = target == MarkTarget::Wind ? s.nu : s.eta;
  const Matrix& other_atoms = target == MarkTarget::Wind ? s.eta : s.nu;
  const double other_var = target == MarkTarget::Wind ? s.zeta2 : s.sigma2;
  double total = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    mix.means[j] = atoms(j, k);
    double wj = base_weights[j];
    if (other_mark.has_value() && wj > 0.0) {
      const GaussKernel other{other_atoms(j, k), other_var};
      wj *= other.cdf(other_mark->hi) - other.cdf(other_mark->lo);
    }
    mix.weights[j] = wj;
    total += wj;
  }
  if (!(total > 0.0)) throw numeric_error("conditional_mark_mixture: conditioning event has zero mass");
  for (double& wj : mix.weights) wj /= total;
  return mix;
}

// Density of the target mark given an exact event time (plus an optional
// interval condition on the other mark), as a mixture object.
inline GaussianMixture conditional_mark_density(const DdpState& s, std::size_t k, double t,
                                                MarkTarget target,
                                                std::optional<MarkCondition> other_mark = {}) {
  return conditional_mark_mixture(s, k, conditional_time_weights(s, k, t), target, other_mark);
}

// Density of the target mark given the event time falls in (t1, t2).
inline GaussianMixture conditional_mark_density_interval(
    const DdpState& s, std::size_t k, double t1, double t2, MarkTarget target,
    std::optional<MarkCondition> other_mark = {}) {
  return conditional_mark_mixture(s, k, interval_time_weights(s, k, t1, t2), target, other_mark);
}

// Map a Saffir-Simpson category to its wind band in centered log units, so
// it can serve as a MarkCondition on the wind mark.
inline MarkCondition category_condition(Category c, double wind_log_mean) {
  const auto [lo, hi] = category_wind_band(c);
  MarkCondition cond;
  cond.lo = lo > 0.0 ? std::log(lo) - wind_log_mean : neg_inf();
  cond.hi = std::isfinite(hi) ? std::log(hi) - wind_log_mean : std::numeric_limits<double>::infinity();
  return cond;
}

// Quantile of a conditional mark mixture mapped back to natural units
// (mph for wind, standardized-damage units for damage): centered log scale
// quantile q, then exp(q + stored log-mean).
inline double conditional_mark_quantile(const GaussianMixture& mix, double q,
                                        double log_mean_center) {
  return std::exp(mix.quantile(q) + log_mean_center);
}

// ---------------------------------------------------------------------------
// Season calendar windows
// ---------------------------------------------------------------------------

struct MonthWindow {
  unsigned month = 0;
  double t1 = 0.0;
  double t2 = 0.0;
};

// A calendar month's span on the rescaled season axis: day boundaries over
// season length. Months outside the window clip to empty; the reference
// year matters only if the window includes February.
inline MonthWindow month_window(const SeasonWindow& season, unsigned month, int year = 2001) {
  using std::chrono::sys_days;
  using std::chrono::year_month_day;
  using std::chrono::year_month_day_last;
  if (month < 1 || month > 12) throw std::domain_error("month_window: month outside 1..12");
  const double D = static_cast<double>(season.length_days(year));
  const year_month_day first{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{1}};
  const year_month_day last{year_month_day_last{std::chrono::year{year},
                                                std::chrono::month_day_last{std::chrono::month{month}}}};
  const auto season_start = sys_days(season.start_of(year));
  const double d1 = static_cast<double>((sys_days(first) - season_start).count());
  const double d2 = static_cast<double>((sys_days(last) - season_start).count()) + 1.0;
  MonthWindow w;
  w.month = month;
  w.t1 = std::clamp(d1 / D, 0.0, 1.0);
  w.t2 = std::clamp(d2 / D, 0.0, 1.0);
  return w;
}

// The documented month-to-unit-interval mapping for a season window.
inline std::vector<MonthWindow> season_month_table(const SeasonWindow& season, int year = 2001) {
  std::vector<MonthWindow> table;
  for (unsigned m = 1; m <= 12; ++m) {
    const MonthWindow w = month_window(season, m, year);
    if (w.t2 > w.t1) table.push_back(w);
  }
  return table;
}

// ---------------------------------------------------------------------------
// One-step-ahead prediction
// ---------------------------------------------------------------------------

struct ForecastDraw {
  DdpState state;      // original draw extended with a predictive period K+1
  double gamma_next = 0.0;  // total intensity of the predictive period
};

// Extend one posterior draw a period ahead: every time atom advances by a
// fresh autoregression step, mark atoms by their AR(1) transitions, and
// the total intensity by the discounted gamma evolution (summed over the
// period's years). The returned state's last column is the forecast.
inline ForecastDraw forecast_next_period(const DdpState& s, const GammaChainState& gamma,
                                         int years_per_period, SeededRng& rng) {
  const std::size_t K = s.num_periods();
  if (K == 0) throw numeric_error("forecast_next_period: draw has no periods");
  if (years_per_period < 1) throw numeric_error("forecast_next_period: years_per_period must be >= 1");
  ForecastDraw out;
  out.state = s;
  const std::size_t N = static_cast<std::size_t>(s.N);
  Matrix mu(N, K + 1), v(N, K + 1, 1.0), nu(N, K + 1), eta(N, K + 1);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      mu(j, k) = s.mu(j, k);
      v(j, k) = s.v(j, k);
      nu(j, k) = s.nu(j, k);
      eta(j, k) = s.eta(j, k);
    }
    const PbarStep step = pbar_step(rng, s.mu(j, K - 1), PbarParams{1.0, 1.0, s.rho});
    mu(j, K) = step.mu;
    v(j, K) = step.v;
    nu(j, K) = draw_normal(rng, s.beta_ar * s.nu(j, K - 1), std::sqrt(s.sigma1_2));
    eta(j, K) = draw_normal(rng, s.phi_ar * s.eta(j, K - 1), std::sqrt(s.sigma2_2));
  }
  out.state.mu = std::move(mu);
  out.state.v = std::move(v);
  out.state.nu = std::move(nu);
  out.state.eta = std::move(eta);

  GammaChainFilter filter;
  filter.omega = gamma.omega;
  filter.a.reserve(gamma.filtered_a.size() + 1);
  filter.b.reserve(gamma.filtered_b.size() + 1);
  filter.a.push_back(gamma.a0);
  filter.b.push_back(gamma.b0);
  filter.a.insert(filter.a.end(), gamma.filtered_a.begin(), gamma.filtered_a.end());
  filter.b.insert(filter.b.end(), gamma.filtered_b.begin(), gamma.filtered_b.end());
  const std::vector<double> path = gamma_chain_forecast_path(rng, filter, years_per_period);
  out.gamma_next = 0.0;
  for (double g : path) out.gamma_next += g;
  return out;
}

// ---------------------------------------------------------------------------
// Draw summaries
// ---------------------------------------------------------------------------

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

inline SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.mean = mean(values);
  s.median = quantile(values, 0.5);
  s.lo95 = quantile(values, 0.025);
  s.hi95 = quantile(values, 0.975);
  return s;
}

// A scalar functional tracked across posterior draws.
struct FunctionalEstimate {
  std::string name;
  std::vector<double> values;  // one per draw
  SummaryStats summary;
};

inline FunctionalEstimate make_estimate(std::string name, std::vector<double> values) {
  FunctionalEstimate est;
  est.name = std::move(name);
  est.values = std::move(values);
  est.summary = summarize(est.values);
  return est;
}

// A curve functional: pointwise summaries over a fixed grid.
struct CurveSummary {
  std::string name;
  std::vector<double> grid;
  std::vector<SummaryStats> points;
};

inline std::vector<double> make_grid(double lo, double hi, std::size_t n = 512) {
  if (n < 2 || !(hi > lo)) throw numeric_error("make_grid: need hi > lo and n >= 2");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

// Pointwise mean / median / central 95% band of per-draw curves evaluated
// on a shared grid. curves[d][g] is draw d at grid point g.
inline CurveSummary summarize_curves(std::string name, std::vector<double> grid,
                                     const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) throw numeric_error("summarize_curves: no draws");
  CurveSummary cs;
  cs.name = std::move(name);
  cs.grid = std::move(grid);
  cs.points.resize(cs.grid.size());
  std::vector<double> column(curves.size());
  for (std::size_t g = 0; g < cs.grid.size(); ++g) {
    for (std::size_t d = 0; d < curves.size(); ++d) column[d] = curves[d][g];
    cs.points[g] = summarize(column);
  }
  return cs;
}

}  // namespace smpp
