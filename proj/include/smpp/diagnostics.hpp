#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/ddp.hpp"
#include "smpp/functionals.hpp"
#include "smpp/ingest.hpp"
#include "smpp/sampler.hpp"
#include "smpp/stats.hpp"

namespace smpp {

// Rescaled-gap transforms of one period's event times under one draw:
//   u_i = 1 - exp(-gamma_k INT_{t_{i-1}}^{t_i} f_k),  t_0 = 0,
// i.i.d. Uniform(0,1) when the intensity is correct. The first gap runs
// from season start; the final (censored) gap to season end is excluded.
// The uniform law is a per-pattern statement: gaps that fit inside a finite
// window are mildly size-biased (cdf excess about x e^{-x} / gamma_k), which
// is negligible at realistic per-period counts but shows up if values are
// pooled across many sparse windows and tested jointly.
// Tied times produce u = 0 for the later event; callers exclude those from
// uniformity tests.
inline std::vector<double> time_rescaling_uniforms(const DdpState& s, double gamma_k,
                                                   std::size_t k, std::span<const double> times) {
  std::vector<double> u;
  u.reserve(times.size());
  double prev_cdf = 0.0;
  for (double t : times) {
    const double cur_cdf = seasonal_cdf(s, k, t);
    if (cur_cdf < prev_cdf) throw numeric_error("time_rescaling_uniforms: times not sorted");
    u.push_back(-std::expm1(-gamma_k * (cur_cdf - prev_cdf)));
    prev_cdf = cur_cdf;
  }
  return u;
}

// KS-vs-uniform with degenerate (tied-gap) values excluded and counted.
struct TiedKsResult {
  KsResult ks;
  std::size_t ties_excluded = 0;
};

inline TiedKsResult ks_test_uniform_excluding_ties(std::span<const double> u) {
  std::vector<double> kept;
  kept.reserve(u.size());
  std::size_t ties = 0;
  for (double x : u) {
    if (x <= 0.0) {
      ++ties;
    } else {
      kept.push_back(x);
    }
  }
  TiedKsResult r;
  r.ties_excluded = ties;
  if (!kept.empty()) r.ks = ks_test_uniform(kept);
  return r;
}

// Probability integral transforms of one period's observed marks under one
// draw: F_k(mark_i | t_i) via the conditional mixture at the event's time.
// For the damage mark, events with missing damage are skipped.
inline std::vector<double> mark_pit(const DdpState& s, std::size_t k, const SeasonPattern& pattern,
                                    MarkTarget target) {
  std::vector<double> pit;
  pit.reserve(pattern.count());
  for (std::size_t i = 0; i < pattern.count(); ++i) {
    double mark;
    if (target == MarkTarget::Wind) {
      mark = pattern.wind_marks[i];
    } else {
      if (!pattern.damage_marks[i].has_value()) continue;
      mark = *pattern.damage_marks[i];
    }
    const GaussianMixture mix = conditional_mark_density(s, k, pattern.times[i], target);
    pit.push_back(mix.cdf(mark));
  }
  return pit;
}

// Posterior Q-Q summary: per theoretical probability p, the empirical
// p-quantile of each draw's u/PIT collection, summarized across draws by
// mean and central 95% band.
struct QqSummary {
  std::vector<double> probs;
  std::vector<SummaryStats> empirical;
};

inline std::vector<double> default_qq_probs() {
  std::vector<double> p;
  p.reserve(99);
  for (int i = 1; i <= 99; ++i) p.push_back(static_cast<double>(i) / 100.0);
  return p;
}

inline QqSummary qq_summary(const std::vector<std::vector<double>>& per_draw_values,
                            std::vector<double> probs = default_qq_probs()) {
  if (per_draw_values.empty()) throw numeric_error("qq_summary: no draws");
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (!(probs[i] > probs[i - 1])) throw numeric_error("qq_summary: probs must be strictly increasing");
  }
  QqSummary out;
  out.probs = std::move(probs);
  out.empirical.resize(out.probs.size());
  std::vector<double> column(per_draw_values.size());
  for (std::size_t g = 0; g < out.probs.size(); ++g) {
    for (std::size_t d = 0; d < per_draw_values.size(); ++d) {
      column[d] = quantile(per_draw_values[d], out.probs[g]);
    }
    out.empirical[g] = summarize(column);
  }
  return out;
}

// Holdout check: fit on periods 1..split-1, carry the model one period
// ahead, and compare the held-out period's event times with the averaged
// predictive law (PIT + KS), alongside the predictive density curve and
// total-intensity draws.
struct HoldoutResult {
  std::size_t split = 0;  // 1-based index of the held-out period
  std::vector<double> holdout_times;
  std::vector<double> time_pit;         // averaged predictive CDF at each held-out time
  CurveSummary predictive_time_density; // predictive f_{K+1} on a grid
  FunctionalEstimate predictive_gamma;  // per-draw total intensity of the held-out period
  TiedKsResult time_ks;
};

inline HoldoutResult holdout_predictive(const Corpus& corpus, std::size_t split,
                                        const McmcConfig& config, std::uint64_t chain_id = 0,
                                        std::size_t density_grid_points = 101) {
  const std::size_t K = corpus.num_periods();
  if (split < 2 || split > K) throw numeric_error("holdout_predictive: split must be in [2, K]");

  Corpus train = corpus;
  train.patterns.resize(split - 1);
  const std::size_t train_years = std::min(
      corpus.annual_counts.size(),
      (split - 1) * static_cast<std::size_t>(corpus.aggregation.years_per_period));
  train.annual_counts.assign(corpus.annual_counts.begin(),
                             corpus.annual_counts.begin() + static_cast<std::ptrdiff_t>(train_years));

  const PosteriorDraws draws = run_chain(train, config, chain_id);
  if (draws.snapshots.empty()) throw numeric_error("holdout_predictive: no posterior draws");

  // Forecast stream is separate from the chain's stream but still a pure
  // function of (seed, chain_id).
  SeededRng forecast_rng(config.seed, chain_id + 0x666f7263u);

  HoldoutResult out;
  out.split = split;
  out.holdout_times = corpus.patterns[split - 1].times;

  const std::vector<double> grid = make_grid(1e-4, 1.0 - 1e-4, density_grid_points);
  std::vector<std::vector<double>> density_curves;
  density_curves.reserve(draws.snapshots.size());
  std::vector<double> gamma_draws;
  gamma_draws.reserve(draws.snapshots.size());
  std::vector<double> cdf_sums(out.holdout_times.size(), 0.0);

  for (const Snapshot& snap : draws.snapshots) {
    const ForecastDraw fc = forecast_next_period(
        snap.state, snap.gamma, corpus.aggregation.years_per_period, forecast_rng);
    const std::size_t kf = fc.state.num_periods() - 1;
    std::vector<double> curve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      curve[g] = seasonal_density(fc.state, kf, grid[g]);
    }
    density_curves.push_back(std::move(curve));
    gamma_draws.push_back(fc.gamma_next);
    for (std::size_t i = 0; i < out.holdout_times.size(); ++i) {
      cdf_sums[i] += seasonal_cdf(fc.state, kf, out.holdout_times[i]);
    }
  }

  out.time_pit.resize(out.holdout_times.size());
  for (std::size_t i = 0; i < out.holdout_times.size(); ++i) {
    out.time_pit[i] = cdf_sums[i] / static_cast<double>(draws.snapshots.size());
  }
  out.predictive_time_density = summarize_curves("predictive_time_density", grid, density_curves);
  out.predictive_gamma = make_estimate("predictive_gamma", std::move(gamma_draws));
  if (!out.time_pit.empty()) out.time_ks = ks_test_uniform_excluding_ties(out.time_pit);
  return out;
}

}  // namespace smpp
