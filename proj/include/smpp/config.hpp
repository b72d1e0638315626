#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smpp/functionals.hpp"
#include "smpp/serialize.hpp"

namespace smpp {

inline constexpr const char* kConfigSchema = "smpp.config/1";

// Where the event file lives and how to read and aggregate it.
struct DataConfig {
  std::string events;
  ColumnSchema columns{};
  SeasonWindow season{};
  int years_per_period = 10;
};

// One requested posterior functional. `period` is 1-based; 0 means every
// period. Windows can be given directly on the unit season axis or as a
// calendar month resolved through the season window.
struct FunctionalRequest {
  std::string type;
  int period = 0;
  std::optional<std::array<double, 2>> window;
  std::optional<unsigned> month;
  std::optional<Category> category;                // damage conditioning: wind band
  std::optional<std::array<double, 2>> wind_range;  // damage conditioning: mph interval
  std::vector<double> quantiles;
  long count = 0;  // event-count functionals
  std::size_t grid_points = 512;
};

struct ForecastConfig {
  std::size_t grid_points = 201;
};

struct DiagnosticsConfig {
  std::optional<int> holdout_split;  // 1-based period started by the holdout
  std::size_t density_grid_points = 101;
};

struct RunConfig {
  DataConfig data;
  McmcConfig mcmc;
  std::vector<FunctionalRequest> functionals;
  ForecastConfig forecast;
  DiagnosticsConfig diagnostics;
  std::optional<TruthConfig> truth;  // simulation command only
};

inline unsigned month_from_name(std::string_view name) {
  static constexpr std::array<std::string_view, 12> kNames = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  for (unsigned m = 0; m < kNames.size(); ++m) {
    if (name == kNames[m]) return m + 1;
  }
  throw serialize_error("unknown month name '" + std::string(name) + "'");
}

namespace detail {

inline ColumnSchema columns_from_json(const json& doc) {
  const std::string ctx = "config.data.columns";
  check_keys(doc, ctx,
             {"date", "max_wind_mph", "base_damage", "inflation", "wealth_per_capita",
              "population", "category", "delimiter"});
  ColumnSchema c;
  c.date = get_field_or(doc, ctx, "date", c.date);
  c.max_wind = get_field_or(doc, ctx, "max_wind_mph", c.max_wind);
  c.base_damage = get_field_or(doc, ctx, "base_damage", c.base_damage);
  c.inflation = get_field_or(doc, ctx, "inflation", c.inflation);
  c.wealth_per_capita = get_field_or(doc, ctx, "wealth_per_capita", c.wealth_per_capita);
  c.population = get_field_or(doc, ctx, "population", c.population);
  c.category = get_field_or(doc, ctx, "category", c.category);
  const std::string delim = get_field_or<std::string>(doc, ctx, "delimiter", ",");
  if (delim.size() != 1) throw serialize_error(ctx + ": delimiter must be one character");
  c.delimiter = delim[0];
  return c;
}

inline std::array<double, 2> window_from_json(const json& value, const std::string& ctx) {
  if (!value.is_array() || value.size() != 2) {
    throw serialize_error(ctx + ": window must be [t1, t2]");
  }
  return {value[0].get<double>(), value[1].get<double>()};
}

inline FunctionalRequest functional_from_json(const json& doc) {
  const std::string ctx = "config.functionals";
  check_keys(doc, ctx,
             {"type", "period", "window", "month", "category", "wind_range", "quantiles",
              "count", "grid_points"});
  FunctionalRequest r;
  r.type = get_field<std::string>(doc, ctx, "type");
  static constexpr std::array<std::string_view, 9> kTypes = {
      "seasonal_density", "intensity",      "cumulative_intensity",
      "prob_at_least_one", "prob_count",    "wind_density",
      "damage_density",    "wind_quantiles", "damage_quantiles"};
  bool known = false;
  for (std::string_view t : kTypes) known = known || r.type == t;
  if (!known) throw serialize_error(ctx + ": unknown functional type '" + r.type + "'");
  r.period = get_field_or(doc, ctx, "period", r.period);
  if (doc.contains("window")) r.window = window_from_json(doc["window"], ctx);
  if (doc.contains("month")) {
    const json& m = doc["month"];
    r.month = m.is_string() ? month_from_name(m.get<std::string>()) : m.get<unsigned>();
    if (*r.month < 1 || *r.month > 12) throw serialize_error(ctx + ": month outside 1..12");
  }
  if (r.window && r.month) throw serialize_error(ctx + ": give a window or a month, not both");
  if (doc.contains("category")) {
    const std::string name = get_field<std::string>(doc, ctx, "category");
    r.category = category_from_string(name);
    if (!r.category) throw serialize_error(ctx + ": unknown category '" + name + "'");
  }
  if (doc.contains("wind_range")) r.wind_range = window_from_json(doc["wind_range"], ctx);
  if (r.category && r.wind_range) {
    throw serialize_error(ctx + ": give a category or a wind range, not both");
  }
  r.quantiles = get_field_or(doc, ctx, "quantiles", r.quantiles);
  for (double q : r.quantiles) {
    if (!(q > 0.0) || !(q < 1.0)) throw serialize_error(ctx + ": quantiles must lie in (0,1)");
  }
  r.count = get_field_or(doc, ctx, "count", r.count);
  if (r.count < 0) throw serialize_error(ctx + ": count must be >= 0");
  r.grid_points = get_field_or(doc, ctx, "grid_points", r.grid_points);
  if (r.grid_points < 2) throw serialize_error(ctx + ": grid_points must be >= 2");
  return r;
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& doc) {
  detail::require_schema(doc, kConfigSchema);
  const std::string ctx = "config";
  detail::check_keys(doc, ctx, {"schema", "data", "mcmc", "functionals", "forecast",
                                "diagnostics", "truth"});
  RunConfig c;
  if (doc.contains("data")) {
    const json& data = doc["data"];
    detail::check_keys(data, ctx + ".data",
                       {"events", "columns", "season", "years_per_period"});
    c.data.events = detail::get_field_or<std::string>(data, ctx, "events", "");
    if (data.contains("columns")) c.data.columns = detail::columns_from_json(data["columns"]);
    if (data.contains("season")) c.data.season = season_from_json(data["season"]);
    c.data.years_per_period =
        detail::get_field_or(data, ctx, "years_per_period", c.data.years_per_period);
    if (c.data.years_per_period < 1) {
      throw serialize_error("config.data: years_per_period must be >= 1");
    }
  }
  if (doc.contains("mcmc")) c.mcmc = mcmc_config_from_json(doc["mcmc"]);
  if (doc.contains("functionals")) {
    if (!doc["functionals"].is_array()) {
      throw serialize_error("config.functionals: expected an array");
    }
    for (const json& f : doc["functionals"]) {
      c.functionals.push_back(detail::functional_from_json(f));
    }
  }
  if (doc.contains("forecast")) {
    const json& f = doc["forecast"];
    detail::check_keys(f, ctx + ".forecast", {"grid_points"});
    c.forecast.grid_points = detail::get_field_or(f, ctx, "grid_points", c.forecast.grid_points);
    if (c.forecast.grid_points < 2) {
      throw serialize_error("config.forecast: grid_points must be >= 2");
    }
  }
  if (doc.contains("diagnostics")) {
    const json& d = doc["diagnostics"];
    detail::check_keys(d, ctx + ".diagnostics", {"holdout_split", "density_grid_points"});
    if (d.contains("holdout_split")) {
      c.diagnostics.holdout_split = detail::get_field<int>(d, ctx, "holdout_split");
    }
    c.diagnostics.density_grid_points =
        detail::get_field_or(d, ctx, "density_grid_points", c.diagnostics.density_grid_points);
  }
  if (doc.contains("truth")) c.truth = truth_from_json(doc["truth"]);
  return c;
}

inline json run_config_to_json(const RunConfig& c) {
  json doc;
  doc["schema"] = kConfigSchema;
  json data;
  data["events"] = c.data.events;
  json columns;
  columns["date"] = c.data.columns.date;
  columns["max_wind_mph"] = c.data.columns.max_wind;
  columns["base_damage"] = c.data.columns.base_damage;
  columns["inflation"] = c.data.columns.inflation;
  columns["wealth_per_capita"] = c.data.columns.wealth_per_capita;
  columns["population"] = c.data.columns.population;
  columns["category"] = c.data.columns.category;
  columns["delimiter"] = std::string(1, c.data.columns.delimiter);
  data["columns"] = std::move(columns);
  data["season"] = season_to_json(c.data.season);
  data["years_per_period"] = c.data.years_per_period;
  doc["data"] = std::move(data);
  doc["mcmc"] = mcmc_config_to_json(c.mcmc);
  json funcs = json::array();
  for (const FunctionalRequest& r : c.functionals) {
    json f;
    f["type"] = r.type;
    f["period"] = r.period;
    if (r.window) f["window"] = {(*r.window)[0], (*r.window)[1]};
    if (r.month) f["month"] = *r.month;
    if (r.category) f["category"] = to_string(*r.category);
    if (r.wind_range) f["wind_range"] = {(*r.wind_range)[0], (*r.wind_range)[1]};
    if (!r.quantiles.empty()) f["quantiles"] = r.quantiles;
    if (r.count > 0) f["count"] = r.count;
    f["grid_points"] = r.grid_points;
    funcs.push_back(std::move(f));
  }
  doc["functionals"] = std::move(funcs);
  json forecast;
  forecast["grid_points"] = c.forecast.grid_points;
  doc["forecast"] = std::move(forecast);
  json diag;
  if (c.diagnostics.holdout_split) diag["holdout_split"] = *c.diagnostics.holdout_split;
  diag["density_grid_points"] = c.diagnostics.density_grid_points;
  doc["diagnostics"] = std::move(diag);
  if (c.truth) doc["truth"] = truth_to_json(*c.truth);
  return doc;
}

}  // namespace smpp
