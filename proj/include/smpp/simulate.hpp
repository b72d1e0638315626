#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "smpp/common.hpp"
#include "smpp/ddp.hpp"
#include "smpp/ingest.hpp"
#include "smpp/rng.hpp"

namespace smpp {

// Ground truth for synthetic data: a full mixture state over K periods, a
// per-period total intensity path, and the bookkeeping needed to express
// events in the ingest schema (calendar dates, natural units).
struct TruthConfig {
  DdpState state;
  std::vector<double> gammas;  // one per period
  double wind_log_mean = 4.3;  // log-mph center used to un-center marks
  double damage_log_mean = 0.0;
  SeasonWindow season{};
  int years_per_period = 10;
  int first_year = 1901;
  double missing_damage_prob = 0.0;

  void validate() const {
    if (gammas.size() != state.num_periods()) {
      throw numeric_error("TruthConfig: gamma path length differs from state periods");
    }
    for (double g : gammas) {
      if (g < 0.0 || !std::isfinite(g)) throw numeric_error("TruthConfig: invalid total intensity");
    }
    if (years_per_period < 1) throw numeric_error("TruthConfig: years_per_period must be >= 1");
    if (missing_damage_prob < 0.0 || missing_damage_prob > 1.0) {
      throw numeric_error("TruthConfig: missing_damage_prob outside [0,1]");
    }
  }
};

struct SimulatedEvent {
  double t = 0.0;  // unit-season time
  double y = 0.0;  // centered log wind
  double z = 0.0;  // centered log standardized damage
  int component = 0;
  int year = 0;  // calendar year
  bool damage_missing = false;
};

struct SimulatedData {
  std::vector<std::vector<SimulatedEvent>> periods;  // sorted by t within period
  std::vector<double> gammas;                        // echo of the truth path
};

// Exact draw from the marked process: per period, a Poisson count at the
// period's total intensity, times i.i.d. from the mixture, marks from the
// allocated component's kernels. Years within a period are assigned
// uniformly, which splits the Poisson count into independent yearly
// Poissons.
inline SimulatedData simulate_events(const TruthConfig& cfg, SeededRng& rng) {
  cfg.validate();
  const DdpState& s = cfg.state;
  const std::size_t K = s.num_periods();
  SimulatedData data;
  data.gammas = cfg.gammas;
  data.periods.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const long n = draw_poisson(rng, cfg.gammas[k]);
    auto& period = data.periods[k];
    period.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      SimulatedEvent e;
      e.component = static_cast<int>(draw_categorical(rng, s.w));
      const std::size_t j = static_cast<std::size_t>(e.component);
      const BetaKernel tk = s.time_kernel(j, k);
      e.t = clamp_unit(draw_beta(rng, tk.shape_a(), tk.shape_b()));
      e.y = draw_normal(rng, s.nu(j, k), std::sqrt(s.sigma2));
      e.z = draw_normal(rng, s.eta(j, k), std::sqrt(s.zeta2));
      e.damage_missing = cfg.missing_damage_prob > 0.0 && rng.uniform() < cfg.missing_damage_prob;
      const int offset = std::min<int>(cfg.years_per_period - 1,
                                       static_cast<int>(rng.uniform() * cfg.years_per_period));
      e.year = cfg.first_year + static_cast<int>(k) * cfg.years_per_period + offset;
      period.push_back(e);
    }
    std::stable_sort(period.begin(), period.end(),
                     [](const SimulatedEvent& a, const SimulatedEvent& b) { return a.t < b.t; });
  }
  return data;
}

// In-memory corpus carrying the exact simulated times and centered marks
// (no calendar quantization); centering constants come from the truth.
inline Corpus corpus_from_simulation(const SimulatedData& data, const TruthConfig& cfg) {
  Corpus corpus;
  corpus.aggregation.years_per_period = cfg.years_per_period;
  corpus.aggregation.season = cfg.season;
  corpus.wind_log_mean = cfg.wind_log_mean;
  corpus.damage_log_mean = cfg.damage_log_mean;
  corpus.first_year = cfg.first_year;
  const std::size_t K = data.periods.size();
  corpus.annual_counts.assign(K * static_cast<std::size_t>(cfg.years_per_period), 0);
  corpus.patterns.resize(K);
  std::size_t damage_seen = 0;
  for (std::size_t k = 0; k < K; ++k) {
    SeasonPattern& pat = corpus.patterns[k];
    pat.period_index = static_cast<int>(k) + 1;
    for (const SimulatedEvent& e : data.periods[k]) {
      pat.times.push_back(e.t);
      pat.wind_marks.push_back(e.y);
      if (e.damage_missing) {
        pat.damage_marks.emplace_back();
      } else {
        pat.damage_marks.emplace_back(e.z);
        ++damage_seen;
      }
      corpus.annual_counts[static_cast<std::size_t>(e.year - cfg.first_year)] += 1;
    }
  }
  corpus.damage_observed = damage_seen;
  return corpus;
}

// Write events in the ingest schema: ISO dates recovered from unit times
// (day = floor(t D), so re-ingestion lands on the same day's midpoint),
// natural-unit winds and damages, and unit normalization factors. Events
// with missing damage leave the damage and factor columns empty.
inline void write_event_csv(const SimulatedData& data, const TruthConfig& cfg, std::ostream& os) {
  os << "date,max_wind_mph,base_damage,inflation,wealth_per_capita,population\n";
  struct Row {
    int year;
    double t;
    std::string text;
  };
  std::vector<Row> rows;
  os << std::setprecision(17);
  for (const auto& period : data.periods) {
    for (const SimulatedEvent& e : period) {
      using std::chrono::sys_days;
      const int D = cfg.season.length_days(e.year);
      const int day = std::min(D - 1, static_cast<int>(std::floor(e.t * D)));
      const std::chrono::year_month_day date{sys_days(cfg.season.start_of(e.year)) +
                                             std::chrono::days{day}};
      std::ostringstream row;
      row << std::setprecision(17);
      row << static_cast<int>(date.year()) << '-' << std::setw(2) << std::setfill('0')
          << static_cast<unsigned>(date.month()) << '-' << std::setw(2) << std::setfill('0')
          << static_cast<unsigned>(date.day());
      row << ',' << std::exp(e.y + cfg.wind_log_mean);
      if (e.damage_missing) {
        row << ",,,,";
      } else {
        row << ',' << std::exp(e.z + cfg.damage_log_mean) << ",1,1,1";
      }
      rows.push_back({e.year, e.t, row.str()});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.year != b.year ? a.year < b.year : a.t < b.t;
  });
  for (const Row& r : rows) os << r.text << '\n';
}

}  // namespace smpp
