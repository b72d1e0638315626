// Command-line surface for the seasonal marked point process toolkit:
// simulate ground-truth data, fit the model, summarize posterior
// functionals, forecast the next period, and run goodness-of-fit
// diagnostics. Every command reads one structured config document and
// writes plot-ready tables plus a manifest of its outputs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smpp/config.hpp"
#include "smpp/diagnostics.hpp"
#include "smpp/functionals.hpp"
#include "smpp/sampler.hpp"
#include "smpp/serialize.hpp"
#include "smpp/simulate.hpp"

namespace fs = std::filesystem;

namespace {

using smpp::json;

constexpr std::uint64_t kSimulateStream = 0x73696d;  // distinct from chain ids
constexpr std::uint64_t kForecastStream = 0x666f7263;

class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message) {}
};

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Collects everything written to the output directory so the manifest can
// list each file with its content hash. No timestamps anywhere.
class RunDir {
 public:
  explicit RunDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, std::string_view content) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw StageError("io", "cannot open output file '" + name + "'");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw StageError("io", "failed writing output file '" + name + "'");
    json entry;
    entry["path"] = name;
    entry["hash"] = smpp::content_hash(content);
    entry["bytes"] = content.size();
    outputs_.push_back(std::move(entry));
  }

  void write_manifest(const std::string& command, std::uint64_t seed, int chains,
                      const std::string& config_hash) {
    json doc;
    doc["schema"] = smpp::kManifestSchema;
    doc["version"] = smpp::kLibraryVersion;
    doc["command"] = command;
    doc["seed"] = seed;
    doc["chains"] = chains;
    doc["config_hash"] = config_hash;
    doc["outputs"] = outputs_;
    const std::string text = doc.dump(2) + "\n";
    std::ofstream os(dir_ / (command + "_manifest.json"), std::ios::binary);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
  }

  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  json outputs_ = json::array();
};

struct LoadedConfig {
  smpp::RunConfig run;
  std::string hash;
  fs::path base_dir;  // relative data paths resolve against the config file
};

LoadedConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_flag,
                         std::optional<int> chains_flag) {
  return stage("config", [&] {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << is.rdbuf();
    const std::string text = buffer.str();
    LoadedConfig out;
    out.hash = smpp::content_hash(text);
    out.base_dir = fs::path(path).parent_path();
    json doc;
    try {
      doc = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
    }
    out.run = smpp::run_config_from_json(doc);
    if (seed_flag) out.run.mcmc.seed = *seed_flag;
    if (chains_flag) out.run.mcmc.chains = *chains_flag;
    return out;
  });
}

smpp::Corpus load_corpus(const LoadedConfig& cfg) {
  return stage("ingest", [&] {
    if (cfg.run.data.events.empty()) {
      throw std::runtime_error("config.data.events is required for this command");
    }
    fs::path events = cfg.run.data.events;
    if (events.is_relative()) events = cfg.base_dir / events;
    std::ifstream is(events, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open event file '" + events.string() + "'");
    const auto records = smpp::parse_events(is, cfg.run.data.columns, cfg.run.data.season);
    smpp::AggregationConfig agg;
    agg.years_per_period = cfg.run.data.years_per_period;
    agg.season = cfg.run.data.season;
    return smpp::build_corpus(records, agg);
  });
}

std::vector<smpp::PosteriorDraws> load_draws(const RunDir& run_dir, int chains) {
  return stage("io", [&] {
    std::vector<smpp::PosteriorDraws> all;
    for (int c = 1; c <= chains; ++c) {
      const fs::path file = run_dir.path() / ("draws_chain_" + std::to_string(c) + ".json");
      std::ifstream is(file, std::ios::binary);
      if (!is) {
        throw std::runtime_error("missing draws file '" + file.string() +
                                 "' (run the fit command into this output directory first)");
      }
      json doc;
      try {
        doc = json::parse(is);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("draws file '" + file.string() + "' is not valid JSON: " +
                                 e.what());
      }
      all.push_back(smpp::draws_from_json(doc));
    }
    return all;
  });
}

std::vector<const smpp::Snapshot*> pool_snapshots(const std::vector<smpp::PosteriorDraws>& all) {
  std::vector<const smpp::Snapshot*> snaps;
  for (const auto& d : all) {
    for (const auto& s : d.snapshots) snaps.push_back(&s);
  }
  return snaps;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void run_simulate(const LoadedConfig& cfg, RunDir& run_dir) {
  const auto data = stage("simulate", [&] {
    if (!cfg.run.truth) throw std::runtime_error("config.truth is required for simulate");
    smpp::SeededRng rng(cfg.run.mcmc.seed, kSimulateStream);
    return smpp::simulate_events(*cfg.run.truth, rng);
  });
  std::ostringstream events;
  smpp::write_event_csv(data, *cfg.run.truth, events);
  run_dir.write("events.csv", events.str());
  run_dir.write("truth.json", smpp::truth_to_json(*cfg.run.truth).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

void run_fit(const LoadedConfig& cfg, RunDir& run_dir) {
  const smpp::Corpus corpus = load_corpus(cfg);
  run_dir.write("corpus.json", smpp::corpus_to_json(corpus).dump() + "\n");
  const int chains = cfg.run.mcmc.chains;
  std::vector<std::future<smpp::PosteriorDraws>> futures;
  futures.reserve(static_cast<std::size_t>(chains));
  for (int c = 0; c < chains; ++c) {
    futures.push_back(std::async(std::launch::async, [&, c] {
      return smpp::run_chain(corpus, cfg.run.mcmc, static_cast<std::uint64_t>(c));
    }));
  }
  for (int c = 0; c < chains; ++c) {
    const smpp::PosteriorDraws draws = stage("sampler", [&] { return futures[
        static_cast<std::size_t>(c)].get(); });
    run_dir.write("draws_chain_" + std::to_string(c + 1) + ".json",
                  smpp::draws_to_json(draws).dump() + "\n");
  }
}

// ---------------------------------------------------------------------------
// summarize
// ---------------------------------------------------------------------------

struct ResolvedWindow {
  double t1 = 0.0;
  double t2 = 1.0;
  std::string label = "season";
};

ResolvedWindow resolve_window(const smpp::FunctionalRequest& req,
                              const smpp::SeasonWindow& season) {
  ResolvedWindow w;
  if (req.window) {
    w.t1 = (*req.window)[0];
    w.t2 = (*req.window)[1];
    w.label = smpp::format_double(w.t1) + ".." + smpp::format_double(w.t2);
  } else if (req.month) {
    const smpp::MonthWindow mw = smpp::month_window(season, *req.month);
    if (!(mw.t2 > mw.t1)) {
      throw std::runtime_error("functional '" + req.type + "': month " +
                               std::to_string(*req.month) + " lies outside the season window");
    }
    w.t1 = mw.t1;
    w.t2 = mw.t2;
    static const char* kNames[12] = {"January", "February", "March",     "April",
                                     "May",     "June",     "July",      "August",
                                     "September", "October", "November", "December"};
    w.label = kNames[*req.month - 1];
  }
  if (!(w.t1 >= 0.0) || !(w.t2 <= 1.0) || !(w.t1 < w.t2)) {
    throw std::runtime_error("functional '" + req.type + "': window must satisfy 0 <= t1 < t2 <= 1");
  }
  return w;
}

std::vector<std::size_t> periods_for(const smpp::FunctionalRequest& req, std::size_t K) {
  std::vector<std::size_t> ks;
  if (req.period == 0) {
    for (std::size_t k = 0; k < K; ++k) ks.push_back(k);
  } else {
    if (req.period < 1 || static_cast<std::size_t>(req.period) > K) {
      throw std::runtime_error("functional '" + req.type + "': period outside 1.." +
                               std::to_string(K));
    }
    ks.push_back(static_cast<std::size_t>(req.period) - 1);
  }
  return ks;
}

std::optional<smpp::MarkCondition> damage_condition(const smpp::FunctionalRequest& req,
                                                    const smpp::Corpus& corpus) {
  if (req.category) {
    return smpp::category_condition(*req.category, corpus.wind_log_mean);
  }
  if (req.wind_range) {
    const double lo = (*req.wind_range)[0];
    const double hi = (*req.wind_range)[1];
    if (!(lo > 0.0) || !(hi > lo)) {
      throw std::runtime_error("functional '" + req.type + "': wind range must satisfy 0 < lo < hi");
    }
    smpp::MarkCondition cond;
    cond.lo = std::log(lo) - corpus.wind_log_mean;
    cond.hi = std::log(hi) - corpus.wind_log_mean;
    return cond;
  }
  return std::nullopt;
}

// Mark-density grids span the observed marks plus four posterior-mean
// kernel standard deviations on each side.
std::vector<double> mark_grid(const smpp::Corpus& corpus,
                              const std::vector<const smpp::Snapshot*>& snaps,
                              smpp::MarkTarget target, std::size_t points) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& pat : corpus.patterns) {
    if (target == smpp::MarkTarget::Wind) {
      for (double y : pat.wind_marks) {
        lo = any ? std::min(lo, y) : y;
        hi = any ? std::max(hi, y) : y;
        any = true;
      }
    } else {
      for (const auto& z : pat.damage_marks) {
        if (!z) continue;
        lo = any ? std::min(lo, *z) : *z;
        hi = any ? std::max(hi, *z) : *z;
        any = true;
      }
    }
  }
  if (!any) throw std::runtime_error("mark density requested but the corpus has no such marks");
  double mean_var = 0.0;
  for (const auto* s : snaps) {
    mean_var += target == smpp::MarkTarget::Wind ? s->state.sigma2 : s->state.zeta2;
  }
  mean_var /= static_cast<double>(snaps.size());
  const double pad = 4.0 * std::sqrt(mean_var);
  return smpp::make_grid(lo - pad, hi + pad, points);
}

void append_curve_rows(smpp::TidyTable& table, const std::string& name, std::size_t k,
                       const std::string& window_label, const smpp::CurveSummary& cs,
                       const std::vector<double>& natural_x) {
  for (std::size_t i = 0; i < cs.grid.size(); ++i) {
    const smpp::SummaryStats& p = cs.points[i];
    table.add_row({name, std::to_string(k + 1), window_label, smpp::format_double(cs.grid[i]),
                   smpp::format_double(natural_x[i]), smpp::format_double(p.mean),
                   smpp::format_double(p.median), smpp::format_double(p.lo95),
                   smpp::format_double(p.hi95)});
  }
}

void append_scalar_row(smpp::TidyTable& table, const std::string& name, std::size_t k,
                       const std::string& window_label, const std::string& x,
                       const std::string& natural_x, const smpp::SummaryStats& s) {
  table.add_row({name, std::to_string(k + 1), window_label, x, natural_x,
                 smpp::format_double(s.mean), smpp::format_double(s.median),
                 smpp::format_double(s.lo95), smpp::format_double(s.hi95)});
}

void evaluate_functional(const smpp::FunctionalRequest& req, const smpp::Corpus& corpus,
                         const std::vector<const smpp::Snapshot*>& snaps,
                         smpp::TidyTable& table) {
  const std::size_t K = corpus.num_periods();
  const double season_days = corpus.aggregation.season.length_days(2001);
  const ResolvedWindow win = resolve_window(req, corpus.aggregation.season);
  const std::size_t n_draws = snaps.size();

  for (std::size_t k : periods_for(req, K)) {
    if (req.type == "seasonal_density" || req.type == "intensity") {
      const std::vector<double> grid = smpp::make_grid(5e-4, 1.0 - 5e-4, req.grid_points);
      std::vector<std::vector<double>> curves(n_draws, std::vector<double>(grid.size()));
      for (std::size_t d = 0; d < n_draws; ++d) {
        const auto& snap = *snaps[d];
        for (std::size_t i = 0; i < grid.size(); ++i) {
          curves[d][i] = req.type == "intensity"
                             ? smpp::intensity(snap.state, snap.gamma.gammas[k], k, grid[i])
                             : smpp::seasonal_density(snap.state, k, grid[i]);
        }
      }
      smpp::CurveSummary cs = smpp::summarize_curves(req.type, grid, curves);
      std::vector<double> days(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) days[i] = grid[i] * season_days;
      append_curve_rows(table, req.type, k, win.label, cs, days);
    } else if (req.type == "cumulative_intensity" || req.type == "prob_at_least_one" ||
               req.type == "prob_count") {
      std::vector<double> values(n_draws);
      for (std::size_t d = 0; d < n_draws; ++d) {
        const auto& snap = *snaps[d];
        const double cum =
            smpp::cumulative_intensity(snap.state, snap.gamma.gammas[k], k, win.t1, win.t2);
        if (req.type == "cumulative_intensity") {
          values[d] = cum;
        } else if (req.type == "prob_at_least_one") {
          values[d] = smpp::prob_at_least_one(cum);
        } else {
          values[d] = smpp::prob_count(cum, req.count);
        }
      }
      const std::string name =
          req.type == "prob_count" ? "prob_count_" + std::to_string(req.count) : req.type;
      append_scalar_row(table, name, k, win.label, "", "", smpp::summarize(values));
    } else if (req.type == "wind_density" || req.type == "damage_density" ||
               req.type == "wind_quantiles" || req.type == "damage_quantiles") {
      const bool wind = req.type == "wind_density" || req.type == "wind_quantiles";
      const smpp::MarkTarget target = wind ? smpp::MarkTarget::Wind : smpp::MarkTarget::Damage;
      const double center = wind ? corpus.wind_log_mean : corpus.damage_log_mean;
      const std::optional<smpp::MarkCondition> cond =
          wind ? std::nullopt : damage_condition(req, corpus);
      std::string name = req.type;
      if (req.category) name += "[" + std::string(smpp::to_string(*req.category)) + "]";
      if (req.wind_range) {
        name += "[" + smpp::format_double((*req.wind_range)[0]) + ".." +
                smpp::format_double((*req.wind_range)[1]) + "mph]";
      }
      std::vector<smpp::GaussianMixture> mixes;
      mixes.reserve(n_draws);
      for (std::size_t d = 0; d < n_draws; ++d) {
        const auto& snap = *snaps[d];
        mixes.push_back(smpp::conditional_mark_mixture(
            snap.state, k, smpp::interval_time_weights(snap.state, k, win.t1, win.t2), target,
            cond));
      }
      if (req.type == "wind_density" || req.type == "damage_density") {
        const std::vector<double> grid = mark_grid(corpus, snaps, target, req.grid_points);
        std::vector<std::vector<double>> curves(n_draws, std::vector<double>(grid.size()));
        for (std::size_t d = 0; d < n_draws; ++d) {
          for (std::size_t i = 0; i < grid.size(); ++i) curves[d][i] = mixes[d].pdf(grid[i]);
        }
        smpp::CurveSummary cs = smpp::summarize_curves(name, grid, curves);
        std::vector<double> natural(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) natural[i] = std::exp(grid[i] + center);
        append_curve_rows(table, name, k, win.label, cs, natural);
      } else {
        const std::vector<double> qs =
            req.quantiles.empty() ? std::vector<double>{0.05, 0.5, 0.95} : req.quantiles;
        for (double q : qs) {
          std::vector<double> values(n_draws);
          for (std::size_t d = 0; d < n_draws; ++d) {
            values[d] = smpp::conditional_mark_quantile(mixes[d], q, center);
          }
          append_scalar_row(table, name, k, win.label, smpp::format_double(q), "",
                            smpp::summarize(values));
        }
      }
    } else {
      throw std::runtime_error("unknown functional type '" + req.type + "'");
    }
  }
}

smpp::TidyTable functional_table() {
  smpp::TidyTable t;
  t.columns = {"functional", "period", "window", "x", "natural_x",
               "mean",       "median", "lo95",   "hi95"};
  return t;
}

void run_summarize(const LoadedConfig& cfg, RunDir& run_dir) {
  const smpp::Corpus corpus = load_corpus(cfg);
  const auto all = load_draws(run_dir, cfg.run.mcmc.chains);
  const auto snaps = pool_snapshots(all);
  stage("functionals", [&] {
    if (snaps.empty()) throw std::runtime_error("empty draws: no posterior snapshots to summarize");
    std::vector<smpp::FunctionalRequest> requests = cfg.run.functionals;
    if (requests.empty()) {
      for (const char* type : {"seasonal_density", "cumulative_intensity", "prob_at_least_one"}) {
        smpp::FunctionalRequest r;
        r.type = type;
        requests.push_back(std::move(r));
      }
    }
    smpp::TidyTable table = functional_table();
    for (const auto& req : requests) evaluate_functional(req, corpus, snaps, table);
    std::ostringstream os;
    table.write_delimited(os);
    run_dir.write("functionals.csv", os.str());

    smpp::TidyTable months;
    months.columns = {"month", "t1", "t2"};
    for (const smpp::MonthWindow& mw : smpp::season_month_table(corpus.aggregation.season)) {
      months.add_row({std::to_string(mw.month), smpp::format_double(mw.t1),
                      smpp::format_double(mw.t2)});
    }
    std::ostringstream mos;
    months.write_delimited(mos);
    run_dir.write("month_windows.csv", mos.str());
    return 0;
  });
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

void run_forecast(const LoadedConfig& cfg, RunDir& run_dir) {
  const smpp::Corpus corpus = load_corpus(cfg);
  const auto all = load_draws(run_dir, cfg.run.mcmc.chains);
  const auto snaps = pool_snapshots(all);
  stage("forecast", [&] {
    if (snaps.empty()) throw std::runtime_error("empty draws: nothing to forecast from");
    const std::size_t K = corpus.num_periods();
    smpp::SeededRng rng(cfg.run.mcmc.seed, kForecastStream);
    const std::vector<double> grid = smpp::make_grid(5e-4, 1.0 - 5e-4, cfg.run.forecast.grid_points);
    std::vector<double> gamma_draws(snaps.size());
    std::vector<double> p_any(snaps.size());
    std::vector<std::vector<double>> density(snaps.size(), std::vector<double>(grid.size()));
    for (std::size_t d = 0; d < snaps.size(); ++d) {
      const smpp::ForecastDraw fd = smpp::forecast_next_period(
          snaps[d]->state, snaps[d]->gamma, corpus.aggregation.years_per_period, rng);
      gamma_draws[d] = fd.gamma_next;
      p_any[d] = smpp::prob_at_least_one(fd.gamma_next);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        density[d][i] = smpp::seasonal_density(fd.state, K, grid[i]);
      }
    }
    smpp::TidyTable table = functional_table();
    append_scalar_row(table, "forecast_gamma", K, "season", "", "",
                      smpp::summarize(gamma_draws));
    append_scalar_row(table, "forecast_prob_at_least_one", K, "season", "", "",
                      smpp::summarize(p_any));
    std::ostringstream os;
    table.write_delimited(os);
    run_dir.write("forecast.csv", os.str());

    const double season_days = corpus.aggregation.season.length_days(2001);
    smpp::CurveSummary cs = smpp::summarize_curves("forecast_density", grid, density);
    smpp::TidyTable curve = functional_table();
    std::vector<double> days(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) days[i] = grid[i] * season_days;
    append_curve_rows(curve, "forecast_density", K, "season", cs, days);
    std::ostringstream cos;
    curve.write_delimited(cos);
    run_dir.write("forecast_density.csv", cos.str());
    return 0;
  });
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

void run_diagnose(const LoadedConfig& cfg, RunDir& run_dir) {
  const smpp::Corpus corpus = load_corpus(cfg);
  const auto all = load_draws(run_dir, cfg.run.mcmc.chains);
  const auto snaps = pool_snapshots(all);
  stage("diagnostics", [&] {
    if (snaps.empty()) throw std::runtime_error("empty draws: nothing to diagnose");
    const std::size_t K = corpus.num_periods();
    smpp::TidyTable table;
    table.columns = {"period", "draw", "statistic", "value"};
    const auto add = [&](std::size_t k, std::size_t d, const char* stat, double value) {
      table.add_row({std::to_string(k + 1), std::to_string(d + 1), stat,
                     smpp::format_double(value)});
    };
    for (std::size_t k = 0; k < K; ++k) {
      const smpp::SeasonPattern& pattern = corpus.patterns[k];
      std::vector<std::vector<double>> period_uniforms(snaps.size());
      for (std::size_t d = 0; d < snaps.size(); ++d) {
        const auto& snap = *snaps[d];
        const std::vector<double> u = smpp::time_rescaling_uniforms(
            snap.state, snap.gamma.gammas[k], k, pattern.times);
        const smpp::TiedKsResult tks = smpp::ks_test_uniform_excluding_ties(u);
        add(k, d, "time_ks_stat", tks.ks.statistic);
        add(k, d, "time_ks_p", tks.ks.p_value);
        add(k, d, "time_ties_excluded", static_cast<double>(tks.ties_excluded));
        period_uniforms[d] = u;
        if (snap.state.arity != smpp::ModelArity::TimeOnly) {
          const auto pit = smpp::mark_pit(snap.state, k, pattern, smpp::MarkTarget::Wind);
          if (!pit.empty()) {
            const smpp::KsResult ks = smpp::ks_test_uniform(pit);
            add(k, d, "wind_pit_ks_stat", ks.statistic);
            add(k, d, "wind_pit_ks_p", ks.p_value);
          }
        }
        if (snap.state.arity == smpp::ModelArity::TimeWindDamage) {
          const auto pit = smpp::mark_pit(snap.state, k, pattern, smpp::MarkTarget::Damage);
          if (!pit.empty()) {
            const smpp::KsResult ks = smpp::ks_test_uniform(pit);
            add(k, d, "damage_pit_ks_stat", ks.statistic);
            add(k, d, "damage_pit_ks_p", ks.p_value);
          }
        }
      }
      // One rescaled-gap Q-Q table per period, pointwise bands across draws.
      smpp::TidyTable qq;
      qq.columns = {"prob", "mean", "median", "lo95", "hi95"};
      if (!pattern.times.empty()) {
        const smpp::QqSummary qs = smpp::qq_summary(period_uniforms);
        for (std::size_t g = 0; g < qs.probs.size(); ++g) {
          qq.add_row({smpp::format_double(qs.probs[g]), smpp::format_double(qs.empirical[g].mean),
                      smpp::format_double(qs.empirical[g].median),
                      smpp::format_double(qs.empirical[g].lo95),
                      smpp::format_double(qs.empirical[g].hi95)});
        }
      }
      std::ostringstream qos;
      qq.write_delimited(qos);
      run_dir.write("qq_time_period_" + std::to_string(k + 1) + ".csv", qos.str());
    }
    std::ostringstream os;
    table.write_delimited(os);
    run_dir.write("diagnostics.csv", os.str());

    if (cfg.run.diagnostics.holdout_split) {
      const smpp::HoldoutResult hr = smpp::holdout_predictive(
          corpus, static_cast<std::size_t>(*cfg.run.diagnostics.holdout_split), cfg.run.mcmc, 0,
          cfg.run.diagnostics.density_grid_points);
      smpp::TidyTable ho;
      ho.columns = {"statistic", "value"};
      ho.add_row({"split", std::to_string(hr.split)});
      ho.add_row({"events", std::to_string(hr.holdout_times.size())});
      ho.add_row({"time_ks_stat", smpp::format_double(hr.time_ks.ks.statistic)});
      ho.add_row({"time_ks_p", smpp::format_double(hr.time_ks.ks.p_value)});
      ho.add_row({"time_ties_excluded", std::to_string(hr.time_ks.ties_excluded)});
      ho.add_row({"gamma_mean", smpp::format_double(hr.predictive_gamma.summary.mean)});
      ho.add_row({"gamma_median", smpp::format_double(hr.predictive_gamma.summary.median)});
      ho.add_row({"gamma_lo95", smpp::format_double(hr.predictive_gamma.summary.lo95)});
      ho.add_row({"gamma_hi95", smpp::format_double(hr.predictive_gamma.summary.hi95)});
      for (std::size_t i = 0; i < hr.holdout_times.size(); ++i) {
        ho.add_row({"pit_" + std::to_string(i + 1), smpp::format_double(hr.time_pit[i])});
      }
      std::ostringstream hos;
      ho.write_delimited(hos);
      run_dir.write("holdout.csv", hos.str());

      const double season_days = corpus.aggregation.season.length_days(2001);
      smpp::TidyTable curve = functional_table();
      std::vector<double> days(hr.predictive_time_density.grid.size());
      for (std::size_t i = 0; i < days.size(); ++i) {
        days[i] = hr.predictive_time_density.grid[i] * season_days;
      }
      append_curve_rows(curve, "holdout_predictive_density", hr.split - 1, "season",
                        hr.predictive_time_density, days);
      std::ostringstream cos;
      curve.write_delimited(cos);
      run_dir.write("holdout_density.csv", cos.str());
    }
    return 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian seasonal marked point process toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> chains_flag;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Path to the run config document")->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed_flag, "Override the config seed");
    sub->add_option("--chains", chains_flag, "Override the number of chains");
  };

  CLI::App* cmd_simulate = app.add_subcommand("simulate", "Draw synthetic data from a known truth");
  CLI::App* cmd_fit = app.add_subcommand("fit", "Run the posterior sampler");
  CLI::App* cmd_summarize = app.add_subcommand("summarize", "Posterior functional tables");
  CLI::App* cmd_forecast = app.add_subcommand("forecast", "One-period-ahead prediction");
  CLI::App* cmd_diagnose = app.add_subcommand("diagnose", "Goodness-of-fit diagnostics");
  for (CLI::App* sub : {cmd_simulate, cmd_fit, cmd_summarize, cmd_forecast, cmd_diagnose}) {
    add_common(sub);
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const LoadedConfig cfg = load_config(config_path, seed_flag, chains_flag);
    RunDir run_dir{fs::path(out_dir)};
    if (command == "simulate") {
      run_simulate(cfg, run_dir);
    } else if (command == "fit") {
      run_fit(cfg, run_dir);
    } else if (command == "summarize") {
      run_summarize(cfg, run_dir);
    } else if (command == "forecast") {
      run_forecast(cfg, run_dir);
    } else {
      run_diagnose(cfg, run_dir);
    }
    run_dir.write_manifest(command, cfg.run.mcmc.seed, cfg.run.mcmc.chains, cfg.hash);
  } catch (const std::exception& e) {
    std::cerr << "smpp " << command << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
