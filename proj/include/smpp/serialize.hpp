#pragma once

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smpp/common.hpp"
#include "smpp/ddp.hpp"
#include "smpp/gamma_chain.hpp"
#include "smpp/ingest.hpp"
#include "smpp/sampler.hpp"
#include "smpp/simulate.hpp"

namespace smpp {

using json = nlohmann::ordered_json;

inline constexpr const char* kLibraryVersion = "1.0.0";
inline constexpr const char* kStateSchema = "smpp.state/1";
inline constexpr const char* kDrawsSchema = "smpp.draws/1";
inline constexpr const char* kCorpusSchema = "smpp.corpus/1";
inline constexpr const char* kTruthSchema = "smpp.truth/1";
inline constexpr const char* kManifestSchema = "smpp.manifest/1";

class serialize_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_schema(const json& doc, const char* schema) {
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != schema) {
    throw serialize_error(std::string("expected schema '") + schema + "'");
  }
}

inline void check_keys(const json& obj, const std::string& context,
                       std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw serialize_error(context + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw serialize_error(context + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
T get_field(const json& obj, const std::string& context, const char* key) {
  if (!obj.contains(key)) throw serialize_error(context + ": missing key '" + key + "'");
  try {
    return obj[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw serialize_error(context + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_field_or(const json& obj, const std::string& context, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get_field<T>(obj, context, key);
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& rows, const std::string& context) {
  if (!rows.is_array()) throw serialize_error(context + ": expected an array of rows");
  const std::size_t r = rows.size();
  if (r == 0) return Matrix(0, 0);
  const std::size_t c = rows[0].is_array() ? rows[0].size() : 0;
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (!rows[i].is_array() || rows[i].size() != c) {
      throw serialize_error(context + ": ragged matrix rows");
    }
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace detail

inline std::string to_string(ModelArity arity) {
  switch (arity) {
    case ModelArity::TimeOnly: return "time";
    case ModelArity::TimeWind: return "time_wind";
    case ModelArity::TimeWindDamage: return "time_wind_damage";
  }
  throw serialize_error("unknown model arity");
}

inline ModelArity arity_from_string(std::string_view text) {
  if (text == "time") return ModelArity::TimeOnly;
  if (text == "time_wind") return ModelArity::TimeWind;
  if (text == "time_wind_damage") return ModelArity::TimeWindDamage;
  throw serialize_error("unknown model arity '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// DdpState: allocations are 1-based externally, matching the type contract.
// ---------------------------------------------------------------------------

inline json state_to_json(const DdpState& s) {
  json doc;
  doc["schema"] = kStateSchema;
  doc["N"] = s.N;
  doc["z"] = s.z;
  doc["w"] = s.w;
  doc["mu"] = detail::matrix_to_json(s.mu);
  doc["v"] = detail::matrix_to_json(s.v);
  doc["nu"] = detail::matrix_to_json(s.nu);
  doc["eta"] = detail::matrix_to_json(s.eta);
  doc["alpha"] = s.alpha;
  doc["rho"] = s.rho;
  doc["tau"] = s.tau;
  doc["sigma2"] = s.sigma2;
  doc["zeta2"] = s.zeta2;
  doc["beta_ar"] = s.beta_ar;
  doc["phi_ar"] = s.phi_ar;
  doc["sigma1_2"] = s.sigma1_2;
  doc["sigma2_2"] = s.sigma2_2;
  doc["arity"] = to_string(s.arity);
  json alloc = json::array();
  for (const auto& period : s.L) {
    json row = json::array();
    for (int l : period) row.push_back(l + 1);
    alloc.push_back(std::move(row));
  }
  doc["L"] = std::move(alloc);
  doc["imputed_z"] = s.imputed_z;
  return doc;
}

inline DdpState state_from_json(const json& doc) {
  detail::require_schema(doc, kStateSchema);
  const std::string ctx = "state";
  detail::check_keys(doc, ctx,
                     {"schema", "N", "z", "w", "mu", "v", "nu", "eta", "alpha", "rho", "tau",
                      "sigma2", "zeta2", "beta_ar", "phi_ar", "sigma1_2", "sigma2_2", "arity",
                      "L", "imputed_z"});
  DdpState s;
  s.N = detail::get_field<int>(doc, ctx, "N");
  s.z = detail::get_field<std::vector<double>>(doc, ctx, "z");
  s.w = detail::get_field<std::vector<double>>(doc, ctx, "w");
  s.mu = detail::matrix_from_json(doc["mu"], ctx + ".mu");
  s.v = detail::matrix_from_json(doc["v"], ctx + ".v");
  s.nu = detail::matrix_from_json(doc["nu"], ctx + ".nu");
  s.eta = detail::matrix_from_json(doc["eta"], ctx + ".eta");
  s.alpha = detail::get_field<double>(doc, ctx, "alpha");
  s.rho = detail::get_field<double>(doc, ctx, "rho");
  s.tau = detail::get_field<double>(doc, ctx, "tau");
  s.sigma2 = detail::get_field<double>(doc, ctx, "sigma2");
  s.zeta2 = detail::get_field<double>(doc, ctx, "zeta2");
  s.beta_ar = detail::get_field<double>(doc, ctx, "beta_ar");
  s.phi_ar = detail::get_field<double>(doc, ctx, "phi_ar");
  s.sigma1_2 = detail::get_field<double>(doc, ctx, "sigma1_2");
  s.sigma2_2 = detail::get_field<double>(doc, ctx, "sigma2_2");
  s.arity = arity_from_string(detail::get_field<std::string>(doc, ctx, "arity"));
  const json& alloc = doc.contains("L") ? doc["L"] : json::array();
  for (const auto& row : alloc) {
    std::vector<int> period;
    for (const auto& l : row) {
      const int one_based = l.get<int>();
      if (one_based < 1 || one_based > s.N) {
        throw serialize_error("state.L: allocation outside 1..N");
      }
      period.push_back(one_based - 1);
    }
    s.L.push_back(std::move(period));
  }
  s.imputed_z =
      detail::get_field_or<std::vector<std::vector<double>>>(doc, ctx, "imputed_z", {});
  if (s.z.size() + 1 != s.w.size() || s.w.size() != static_cast<std::size_t>(s.N)) {
    throw serialize_error("state: stick/weight lengths inconsistent with N");
  }
  const std::size_t K = s.mu.cols();
  if (s.mu.rows() != static_cast<std::size_t>(s.N) || s.v.rows() != s.mu.rows() ||
      s.v.cols() != K || s.nu.rows() != s.mu.rows() || s.nu.cols() != K ||
      s.eta.rows() != s.mu.rows() || s.eta.cols() != K) {
    throw serialize_error("state: atom matrix dimensions inconsistent");
  }
  return s;
}

inline json gamma_state_to_json(const GammaChainState& g) {
  json doc;
  doc["omega"] = g.omega;
  doc["a0"] = g.a0;
  doc["b0"] = g.b0;
  doc["filtered_a"] = g.filtered_a;
  doc["filtered_b"] = g.filtered_b;
  doc["gammas"] = g.gammas;
  return doc;
}

inline GammaChainState gamma_state_from_json(const json& doc) {
  const std::string ctx = "gamma";
  detail::check_keys(doc, ctx, {"omega", "a0", "b0", "filtered_a", "filtered_b", "gammas"});
  GammaChainState g;
  g.omega = detail::get_field<double>(doc, ctx, "omega");
  g.a0 = detail::get_field<double>(doc, ctx, "a0");
  g.b0 = detail::get_field<double>(doc, ctx, "b0");
  g.filtered_a = detail::get_field<std::vector<double>>(doc, ctx, "filtered_a");
  g.filtered_b = detail::get_field<std::vector<double>>(doc, ctx, "filtered_b");
  g.gammas = detail::get_field<std::vector<double>>(doc, ctx, "gammas");
  return g;
}

// ---------------------------------------------------------------------------
// MCMC configuration
// ---------------------------------------------------------------------------

inline json hyperpriors_to_json(const Hyperpriors& h) {
  json doc;
  doc["alpha_shape"] = h.alpha_shape;
  doc["alpha_rate"] = h.alpha_rate;
  doc["ig_shape"] = h.ig_shape;
  doc["sigma2_rate"] = h.sigma2_rate;
  doc["zeta2_rate"] = h.zeta2_rate;
  doc["sigma1_2_rate"] = h.sigma1_2_rate;
  doc["sigma2_2_rate"] = h.sigma2_2_rate;
  return doc;
}

inline Hyperpriors hyperpriors_from_json(const json& doc) {
  const std::string ctx = "hyperpriors";
  detail::check_keys(doc, ctx,
                     {"alpha_shape", "alpha_rate", "ig_shape", "sigma2_rate", "zeta2_rate",
                      "sigma1_2_rate", "sigma2_2_rate"});
  Hyperpriors h;
  h.alpha_shape = detail::get_field_or(doc, ctx, "alpha_shape", h.alpha_shape);
  h.alpha_rate = detail::get_field_or(doc, ctx, "alpha_rate", h.alpha_rate);
  h.ig_shape = detail::get_field_or(doc, ctx, "ig_shape", h.ig_shape);
  h.sigma2_rate = detail::get_field_or(doc, ctx, "sigma2_rate", h.sigma2_rate);
  h.zeta2_rate = detail::get_field_or(doc, ctx, "zeta2_rate", h.zeta2_rate);
  h.sigma1_2_rate = detail::get_field_or(doc, ctx, "sigma1_2_rate", h.sigma1_2_rate);
  h.sigma2_2_rate = detail::get_field_or(doc, ctx, "sigma2_2_rate", h.sigma2_2_rate);
  return h;
}

inline json mcmc_config_to_json(const McmcConfig& c) {
  json doc;
  doc["n_iter"] = c.n_iter;
  doc["burn_in"] = c.burn_in;
  doc["thin"] = c.thin;
  doc["seed"] = c.seed;
  doc["chains"] = c.chains;
  doc["arity"] = to_string(c.arity);
  doc["truncation"] = c.truncation;
  doc["tau"] = c.tau;
  doc["hyperpriors"] = hyperpriors_to_json(c.hyper);
  if (c.fixed_omega) doc["fixed_omega"] = *c.fixed_omega;
  doc["gamma_a0"] = c.gamma_a0;
  doc["gamma_b0"] = c.gamma_b0;
  doc["adapt_interval"] = c.adapt_interval;
  return doc;
}

inline McmcConfig mcmc_config_from_json(const json& doc) {
  const std::string ctx = "mcmc";
  detail::check_keys(doc, ctx,
                     {"n_iter", "burn_in", "thin", "seed", "chains", "arity", "truncation",
                      "tau", "hyperpriors", "fixed_omega", "gamma_a0", "gamma_b0",
                      "adapt_interval"});
  McmcConfig c;
  c.n_iter = detail::get_field_or(doc, ctx, "n_iter", c.n_iter);
  c.burn_in = detail::get_field_or(doc, ctx, "burn_in", c.burn_in);
  c.thin = detail::get_field_or(doc, ctx, "thin", c.thin);
  c.seed = detail::get_field_or(doc, ctx, "seed", c.seed);
  c.chains = detail::get_field_or(doc, ctx, "chains", c.chains);
  if (doc.contains("arity")) {
    c.arity = arity_from_string(detail::get_field<std::string>(doc, ctx, "arity"));
  }
  c.truncation = detail::get_field_or(doc, ctx, "truncation", c.truncation);
  c.tau = detail::get_field_or(doc, ctx, "tau", c.tau);
  if (doc.contains("hyperpriors")) c.hyper = hyperpriors_from_json(doc["hyperpriors"]);
  if (doc.contains("fixed_omega")) {
    c.fixed_omega = detail::get_field<double>(doc, ctx, "fixed_omega");
  }
  c.gamma_a0 = detail::get_field_or(doc, ctx, "gamma_a0", c.gamma_a0);
  c.gamma_b0 = detail::get_field_or(doc, ctx, "gamma_b0", c.gamma_b0);
  c.adapt_interval = detail::get_field_or(doc, ctx, "adapt_interval", c.adapt_interval);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Posterior draws file: config echo, seed, acceptance ledger, snapshots.
// ---------------------------------------------------------------------------

inline json draws_to_json(const PosteriorDraws& d) {
  json doc;
  doc["schema"] = kDrawsSchema;
  doc["version"] = kLibraryVersion;
  doc["chain_id"] = d.chain_id;
  doc["seed"] = d.config.seed;
  doc["omega"] = d.omega;
  doc["config"] = mcmc_config_to_json(d.config);
  json acc;
  for (const auto& [name, stats] : d.acceptance) {
    json entry;
    entry["proposals"] = stats.proposals;
    entry["accepts"] = stats.accepts;
    acc[name] = std::move(entry);
  }
  doc["acceptance"] = std::move(acc);
  json snaps = json::array();
  for (const Snapshot& snap : d.snapshots) {
    json s;
    s["iteration"] = snap.iteration;
    s["state"] = state_to_json(snap.state);
    s["gamma"] = gamma_state_to_json(snap.gamma);
    snaps.push_back(std::move(s));
  }
  doc["snapshots"] = std::move(snaps);
  return doc;
}

inline PosteriorDraws draws_from_json(const json& doc) {
  detail::require_schema(doc, kDrawsSchema);
  const std::string ctx = "draws";
  detail::check_keys(doc, ctx, {"schema", "version", "chain_id", "seed", "omega", "config",
                                "acceptance", "snapshots"});
  PosteriorDraws d;
  d.chain_id = detail::get_field<std::uint64_t>(doc, ctx, "chain_id");
  d.omega = detail::get_field<double>(doc, ctx, "omega");
  d.config = mcmc_config_from_json(doc.contains("config") ? doc["config"] : json::object());
  if (doc.contains("acceptance")) {
    for (const auto& item : doc["acceptance"].items()) {
      AcceptanceStats stats;
      stats.proposals = detail::get_field<long>(item.value(), ctx + ".acceptance", "proposals");
      stats.accepts = detail::get_field<long>(item.value(), ctx + ".acceptance", "accepts");
      d.acceptance[item.key()] = stats;
    }
  }
  if (doc.contains("snapshots")) {
    for (const auto& snap : doc["snapshots"]) {
      detail::check_keys(snap, ctx + ".snapshot", {"iteration", "state", "gamma"});
      Snapshot s;
      s.iteration = detail::get_field<std::size_t>(snap, ctx + ".snapshot", "iteration");
      s.state = state_from_json(snap["state"]);
      s.gamma = gamma_state_from_json(snap["gamma"]);
      d.snapshots.push_back(std::move(s));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

inline json season_to_json(const SeasonWindow& s) {
  json doc;
  doc["start_month"] = s.start_month;
  doc["start_day"] = s.start_day;
  doc["end_month"] = s.end_month;
  doc["end_day"] = s.end_day;
  return doc;
}

inline SeasonWindow season_from_json(const json& doc) {
  const std::string ctx = "season";
  detail::check_keys(doc, ctx, {"start_month", "start_day", "end_month", "end_day"});
  SeasonWindow s;
  s.start_month = detail::get_field_or(doc, ctx, "start_month", s.start_month);
  s.start_day = detail::get_field_or(doc, ctx, "start_day", s.start_day);
  s.end_month = detail::get_field_or(doc, ctx, "end_month", s.end_month);
  s.end_day = detail::get_field_or(doc, ctx, "end_day", s.end_day);
  return s;
}

inline json corpus_to_json(const Corpus& c) {
  json doc;
  doc["schema"] = kCorpusSchema;
  json agg;
  agg["years_per_period"] = c.aggregation.years_per_period;
  agg["season"] = season_to_json(c.aggregation.season);
  doc["aggregation"] = std::move(agg);
  doc["wind_log_mean"] = c.wind_log_mean;
  doc["damage_log_mean"] = c.damage_log_mean;
  doc["damage_observed"] = c.damage_observed;
  doc["first_year"] = c.first_year;
  doc["annual_counts"] = c.annual_counts;
  json patterns = json::array();
  for (const SeasonPattern& p : c.patterns) {
    json pat;
    pat["period_index"] = p.period_index;
    pat["times"] = p.times;
    pat["wind_marks"] = p.wind_marks;
    json damage = json::array();
    for (const auto& z : p.damage_marks) {
      if (z.has_value()) {
        damage.push_back(*z);
      } else {
        damage.push_back(nullptr);
      }
    }
    pat["damage_marks"] = std::move(damage);
    patterns.push_back(std::move(pat));
  }
  doc["patterns"] = std::move(patterns);
  return doc;
}

inline Corpus corpus_from_json(const json& doc) {
  detail::require_schema(doc, kCorpusSchema);
  const std::string ctx = "corpus";
  detail::check_keys(doc, ctx,
                     {"schema", "aggregation", "wind_log_mean", "damage_log_mean",
                      "damage_observed", "first_year", "annual_counts", "patterns"});
  Corpus c;
  if (doc.contains("aggregation")) {
    const json& agg = doc["aggregation"];
    detail::check_keys(agg, ctx + ".aggregation", {"years_per_period", "season"});
    c.aggregation.years_per_period =
        detail::get_field_or(agg, ctx, "years_per_period", c.aggregation.years_per_period);
    if (agg.contains("season")) c.aggregation.season = season_from_json(agg["season"]);
  }
  c.wind_log_mean = detail::get_field<double>(doc, ctx, "wind_log_mean");
  c.damage_log_mean = detail::get_field<double>(doc, ctx, "damage_log_mean");
  c.damage_observed = detail::get_field<std::size_t>(doc, ctx, "damage_observed");
  c.first_year = detail::get_field<int>(doc, ctx, "first_year");
  c.annual_counts = detail::get_field<std::vector<long>>(doc, ctx, "annual_counts");
  for (const auto& pat : doc["patterns"]) {
    detail::check_keys(pat, ctx + ".pattern",
                       {"period_index", "times", "wind_marks", "damage_marks"});
    SeasonPattern p;
    p.period_index = detail::get_field<int>(pat, ctx, "period_index");
    p.times = detail::get_field<std::vector<double>>(pat, ctx, "times");
    p.wind_marks = detail::get_field<std::vector<double>>(pat, ctx, "wind_marks");
    for (const auto& z : pat["damage_marks"]) {
      if (z.is_null()) {
        p.damage_marks.emplace_back();
      } else {
        p.damage_marks.emplace_back(z.get<double>());
      }
    }
    c.patterns.push_back(std::move(p));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Simulation truth
// ---------------------------------------------------------------------------

inline json truth_to_json(const TruthConfig& t) {
  json doc;
  doc["schema"] = kTruthSchema;
  doc["state"] = state_to_json(t.state);
  doc["gammas"] = t.gammas;
  doc["wind_log_mean"] = t.wind_log_mean;
  doc["damage_log_mean"] = t.damage_log_mean;
  doc["season"] = season_to_json(t.season);
  doc["years_per_period"] = t.years_per_period;
  doc["first_year"] = t.first_year;
  doc["missing_damage_prob"] = t.missing_damage_prob;
  return doc;
}

inline TruthConfig truth_from_json(const json& doc) {
  detail::require_schema(doc, kTruthSchema);
  const std::string ctx = "truth";
  detail::check_keys(doc, ctx,
                     {"schema", "state", "gammas", "wind_log_mean", "damage_log_mean", "season",
                      "years_per_period", "first_year", "missing_damage_prob"});
  TruthConfig t;
  if (!doc.contains("state")) throw serialize_error("truth: missing state");
  t.state = state_from_json(doc["state"]);
  t.gammas = detail::get_field<std::vector<double>>(doc, ctx, "gammas");
  t.wind_log_mean = detail::get_field_or(doc, ctx, "wind_log_mean", t.wind_log_mean);
  t.damage_log_mean = detail::get_field_or(doc, ctx, "damage_log_mean", t.damage_log_mean);
  if (doc.contains("season")) t.season = season_from_json(doc["season"]);
  t.years_per_period = detail::get_field_or(doc, ctx, "years_per_period", t.years_per_period);
  t.first_year = detail::get_field_or(doc, ctx, "first_year", t.first_year);
  t.missing_damage_prob =
      detail::get_field_or(doc, ctx, "missing_damage_prob", t.missing_damage_prob);
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// Tidy tables: one header row plus homogeneous string cells, written as
// delimited text. Doubles format with shortest round-trip digits so output
// is reproducible byte for byte.
// ---------------------------------------------------------------------------

inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

struct TidyTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size()) throw serialize_error("table row width mismatch");
    rows.push_back(std::move(cells));
  }

  void write_delimited(std::ostream& os, char delim = ',') const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) os << delim;
      os << columns[i];
    }
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << delim;
        os << row[i];
      }
      os << '\n';
    }
  }
};

// ---------------------------------------------------------------------------
// Content hashing for the run manifest: FNV-1a (64-bit), rendered as hex.
// ---------------------------------------------------------------------------

inline std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[15 - i] = digits[(h >> (i * 4)) & 0xF];
  }
  return std::string(buf, 16);
}

}  // namespace smpp
