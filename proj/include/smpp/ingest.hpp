#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "smpp/common.hpp"

namespace smpp {

class ingest_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Saffir-Simpson bands over maximum sustained wind (mph), upper bounds
// inclusive: TD < 39, TS 39-73, then hurricane categories 74-95, 96-110,
// 111-130, 131-155, > 155. Together the bands partition (0, inf).
enum class Category { TD, TS, HC1, HC2, HC3, HC4, HC5 };

inline Category category_from_wind(double mph) {
  if (!(mph > 0.0)) throw std::domain_error("category_from_wind: wind must be positive");
  if (mph < 39.0) return Category::TD;
  if (mph <= 73.0) return Category::TS;
  if (mph <= 95.0) return Category::HC1;
  if (mph <= 110.0) return Category::HC2;
  if (mph <= 130.0) return Category::HC3;
  if (mph <= 155.0) return Category::HC4;
  return Category::HC5;
}

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::TD: return "TD";
    case Category::TS: return "TS";
    case Category::HC1: return "HC1";
    case Category::HC2: return "HC2";
    case Category::HC3: return "HC3";
    case Category::HC4: return "HC4";
    case Category::HC5: return "HC5";
  }
  throw std::domain_error("to_string: invalid category");
}

inline std::optional<Category> category_from_string(std::string_view s) {
  if (s == "TD") return Category::TD;
  if (s == "TS") return Category::TS;
  if (s == "HC1") return Category::HC1;
  if (s == "HC2") return Category::HC2;
  if (s == "HC3") return Category::HC3;
  if (s == "HC4") return Category::HC4;
  if (s == "HC5") return Category::HC5;
  return std::nullopt;
}

// Wind band (mph) occupied by a category, as (lower, upper]; TD's lower
// bound is 0 (open) and HC5's upper bound is +infinity.
inline std::pair<double, double> category_wind_band(Category c) {
  switch (c) {
    case Category::TD: return {0.0, 39.0};
    case Category::TS: return {39.0, 73.0};
    case Category::HC1: return {73.0, 95.0};
    case Category::HC2: return {95.0, 110.0};
    case Category::HC3: return {110.0, 130.0};
    case Category::HC4: return {130.0, 155.0};
    case Category::HC5: return {155.0, std::numeric_limits<double>::infinity()};
  }
  throw std::domain_error("category_wind_band: invalid category");
}

// Calendar window a season occupies within each year; defaults to
// May 1 - November 30.
struct SeasonWindow {
  unsigned start_month = 5;
  unsigned start_day = 1;
  unsigned end_month = 11;
  unsigned end_day = 30;

  std::chrono::year_month_day start_of(int year) const {
    return {std::chrono::year{year}, std::chrono::month{start_month}, std::chrono::day{start_day}};
  }
  std::chrono::year_month_day end_of(int year) const {
    return {std::chrono::year{year}, std::chrono::month{end_month}, std::chrono::day{end_day}};
  }

  // Number of calendar days in the window (inclusive of both endpoints).
  int length_days(int year) const {
    using std::chrono::sys_days;
    return static_cast<int>((sys_days(end_of(year)) - sys_days(start_of(year))).count()) + 1;
  }

  bool contains(std::chrono::year_month_day date) const {
    using std::chrono::sys_days;
    const int y = static_cast<int>(date.year());
    return sys_days(date) >= sys_days(start_of(y)) && sys_days(date) <= sys_days(end_of(y));
  }

  // 0-based day index of a date within its year's window.
  int day_index(std::chrono::year_month_day date) const {
    using std::chrono::sys_days;
    const int y = static_cast<int>(date.year());
    return static_cast<int>((sys_days(date) - sys_days(start_of(y))).count());
  }

  // Unit-interval time of a date: day midpoints map to (d + 0.5) / D so
  // every event lands strictly inside (0,1); same-day events tie.
  double unit_time(std::chrono::year_month_day date) const {
    const int y = static_cast<int>(date.year());
    return clamp_unit((day_index(date) + 0.5) / static_cast<double>(length_days(y)));
  }
};

struct EventRecord {
  std::chrono::year_month_day date{};
  int year = 0;
  double max_wind = 0.0;  // mph
  std::optional<double> base_damage;  // landfall-year currency
  std::optional<double> inflation;
  std::optional<double> wealth_per_capita;
  std::optional<double> population;
  Category category = Category::TD;

  bool has_factors() const {
    return inflation.has_value() && wealth_per_capita.has_value() && population.has_value();
  }
};

// Base damage divided by the landfall year's inflation, wealth-per-capita,
// and population factors, removing secular growth so damages are
// comparable across years.
inline double standardize_damage(double base_damage, double inflation, double wealth_per_capita,
                                 double population) {
  if (!(inflation > 0.0) || !(wealth_per_capita > 0.0) || !(population > 0.0)) {
    throw std::domain_error("standardize_damage: factors must be positive");
  }
  if (base_damage < 0.0) throw std::domain_error("standardize_damage: negative damage");
  return base_damage / (inflation * wealth_per_capita * population);
}

inline std::optional<double> standardized_damage(const EventRecord& e) {
  if (!e.base_damage.has_value() || !e.has_factors()) return std::nullopt;
  return standardize_damage(*e.base_damage, *e.inflation, *e.wealth_per_capita, *e.population);
}

// Column-name mapping for delimited event files. Only date and wind are
// required; damage, normalization factors, and category may be absent as
// columns or left empty per row.
struct ColumnSchema {
  std::string date = "date";
  std::string max_wind = "max_wind_mph";
  std::string base_damage = "base_damage";
  std::string inflation = "inflation";
  std::string wealth_per_capita = "wealth_per_capita";
  std::string population = "population";
  std::string category = "category";
  char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.emplace_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.emplace_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline double parse_double_field(std::string_view s, std::size_t row, const std::string& col) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ingest_error("row " + std::to_string(row) + ", column '" + col +
                       "': cannot parse number from '" + std::string(s) + "'");
  }
  return value;
}

inline std::chrono::year_month_day parse_date_field(std::string_view s, std::size_t row,
                                                    const std::string& col) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  const auto bad = [&]() -> ingest_error {
    return ingest_error("row " + std::to_string(row) + ", column '" + col +
                        "': cannot parse ISO date from '" + std::string(s) + "'");
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw bad();
  auto parse_int = [&](std::string_view part, auto& out) {
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || ptr != part.data() + part.size()) throw bad();
  };
  parse_int(s.substr(0, 4), y);
  parse_int(s.substr(5, 2), m);
  parse_int(s.substr(8, 2), d);
  const std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m},
                                         std::chrono::day{d}};
  if (!date.ok()) throw bad();
  return date;
}

}  // namespace detail

// Parse delimited event text (header row + one event per line) into records
// in file order. Categories are taken from the file when a category column
// holds a value and derived from wind otherwise. Rows failing to parse name
// their row and column; dates outside the season window are collected and
// reported together.
inline std::vector<EventRecord> parse_events(std::istream& source, const ColumnSchema& schema = {},
                                             const SeasonWindow& window = {}) {
  std::string line;
  if (!std::getline(source, line)) return {};
  const std::vector<std::string> header = detail::split_row(line, schema.delimiter);
  const auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t c_date = find_col(schema.date);
  const std::ptrdiff_t c_wind = find_col(schema.max_wind);
  if (c_date < 0) throw ingest_error("header: missing required column '" + schema.date + "'");
  if (c_wind < 0) throw ingest_error("header: missing required column '" + schema.max_wind + "'");
  const std::ptrdiff_t c_damage = find_col(schema.base_damage);
  const std::ptrdiff_t c_inflation = find_col(schema.inflation);
  const std::ptrdiff_t c_wealth = find_col(schema.wealth_per_capita);
  const std::ptrdiff_t c_population = find_col(schema.population);
  const std::ptrdiff_t c_category = find_col(schema.category);

  std::vector<EventRecord> events;
  std::vector<std::string> out_of_window;
  std::size_t row = 0;
  while (std::getline(source, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> fields = detail::split_row(line, schema.delimiter);
    const auto field = [&](std::ptrdiff_t col) -> std::string_view {
      if (col < 0 || static_cast<std::size_t>(col) >= fields.size()) return {};
      return fields[static_cast<std::size_t>(col)];
    };
    if (static_cast<std::size_t>(c_date) >= fields.size() ||
        static_cast<std::size_t>(c_wind) >= fields.size()) {
      throw ingest_error("row " + std::to_string(row) + ": expected at least " +
                         std::to_string(std::max(c_date, c_wind) + 1) + " columns, found " +
                         std::to_string(fields.size()));
    }

    EventRecord e;
    e.date = detail::parse_date_field(field(c_date), row, schema.date);
    e.year = static_cast<int>(e.date.year());
    e.max_wind = detail::parse_double_field(field(c_wind), row, schema.max_wind);
    if (!(e.max_wind > 0.0)) {
      throw ingest_error("row " + std::to_string(row) + ", column '" + schema.max_wind +
                         "': wind must be positive");
    }
    const auto optional_double = [&](std::ptrdiff_t col,
                                     const std::string& name) -> std::optional<double> {
      const std::string_view s = field(col);
      if (s.empty()) return std::nullopt;
      return detail::parse_double_field(s, row, name);
    };
    e.base_damage = optional_double(c_damage, schema.base_damage);
    e.inflation = optional_double(c_inflation, schema.inflation);
    e.wealth_per_capita = optional_double(c_wealth, schema.wealth_per_capita);
    e.population = optional_double(c_population, schema.population);
    const bool any_factor =
        e.inflation.has_value() || e.wealth_per_capita.has_value() || e.population.has_value();
    if (any_factor && !e.has_factors()) {
      throw ingest_error("row " + std::to_string(row) +
                         ": normalization factors must be given as a full "
                         "(inflation, wealth_per_capita, population) triple");
    }
    const std::string_view cat_text = field(c_category);
    if (!cat_text.empty()) {
      const auto cat = category_from_string(cat_text);
      if (!cat.has_value()) {
        throw ingest_error("row " + std::to_string(row) + ", column '" + schema.category +
                           "': unknown category '" + std::string(cat_text) + "'");
      }
      e.category = *cat;
    } else {
      e.category = category_from_wind(e.max_wind);
    }
    if (!window.contains(e.date)) {
      std::ostringstream os;
      os << static_cast<int>(e.date.year()) << '-' << static_cast<unsigned>(e.date.month()) << '-'
         << static_cast<unsigned>(e.date.day());
      out_of_window.push_back(os.str());
    }
    events.push_back(e);
  }
  if (!out_of_window.empty()) {
    std::string msg = "dates outside the season window:";
    for (const std::string& d : out_of_window) msg += ' ' + d;
    throw ingest_error(msg);
  }
  return events;
}

// Events of one analysis period, rescaled to the unit season. Times, wind
// marks, and damage marks are index-aligned; a missing damage mark means
// the record lacked a damage value or its normalization factors.
struct SeasonPattern {
  int period_index = 1;  // 1-based
  std::vector<double> times;
  std::vector<double> wind_marks;
  std::vector<std::optional<double>> damage_marks;

  std::size_t count() const { return times.size(); }
};

struct AggregationConfig {
  int years_per_period = 10;
  SeasonWindow season{};
};

struct Corpus {
  std::vector<SeasonPattern> patterns;
  AggregationConfig aggregation{};
  // Global log-means used to center marks; stored so predictions can be
  // mapped back to natural units.
  double wind_log_mean = 0.0;
  double damage_log_mean = 0.0;
  std::size_t damage_observed = 0;  // how many events contributed to damage_log_mean
  int first_year = 0;
  std::vector<long> annual_counts;  // one entry per calendar year, pre-aggregation

  std::size_t num_periods() const { return patterns.size(); }
  std::size_t total_events() const {
    std::size_t n = 0;
    for (const SeasonPattern& p : patterns) n += p.count();
    return n;
  }
  int last_year() const { return first_year + static_cast<int>(annual_counts.size()) - 1; }
};

// Group events into fixed-width year blocks, rescale dates to (0,1), and
// center log marks by their global means (damage: observed values only).
// K = ceil(total_years / years_per_period); later periods may be shorter in
// years but every event belongs to exactly one period.
inline Corpus build_corpus(std::span<const EventRecord> events, const AggregationConfig& config) {
  if (config.years_per_period <= 0) throw ingest_error("build_corpus: years_per_period must be positive");
  if (events.empty()) throw ingest_error("build_corpus: no events");

  Corpus corpus;
  corpus.aggregation = config;
  int min_year = events.front().year;
  int max_year = events.front().year;
  for (const EventRecord& e : events) {
    min_year = std::min(min_year, e.year);
    max_year = std::max(max_year, e.year);
  }
  corpus.first_year = min_year;
  const int total_years = max_year - min_year + 1;
  corpus.annual_counts.assign(static_cast<std::size_t>(total_years), 0);
  const int K = (total_years + config.years_per_period - 1) / config.years_per_period;
  corpus.patterns.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) corpus.patterns[static_cast<std::size_t>(k)].period_index = k + 1;

  double wind_log_sum = 0.0;
  double damage_log_sum = 0.0;
  std::size_t damage_n = 0;
  for (const EventRecord& e : events) {
    wind_log_sum += std::log(e.max_wind);
    const std::optional<double> sd = standardized_damage(e);
    if (sd.has_value() && *sd > 0.0) {
      damage_log_sum += std::log(*sd);
      ++damage_n;
    }
  }
  corpus.wind_log_mean = wind_log_sum / static_cast<double>(events.size());
  corpus.damage_log_mean = damage_n > 0 ? damage_log_sum / static_cast<double>(damage_n) : 0.0;
  corpus.damage_observed = damage_n;

  struct Item {
    double t;
    double y;
    std::optional<double> z;
  };
  std::vector<std::vector<Item>> buckets(static_cast<std::size_t>(K));
  for (const EventRecord& e : events) {
    const int k = (e.year - min_year) / config.years_per_period;
    corpus.annual_counts[static_cast<std::size_t>(e.year - min_year)] += 1;
    Item item;
    item.t = config.season.unit_time(e.date);
    item.y = std::log(e.max_wind) - corpus.wind_log_mean;
    const std::optional<double> sd = standardized_damage(e);
    if (sd.has_value() && *sd > 0.0) {
      item.z = std::log(*sd) - corpus.damage_log_mean;
    }
    buckets[static_cast<std::size_t>(k)].push_back(item);
  }
  for (int k = 0; k < K; ++k) {
    auto& bucket = buckets[static_cast<std::size_t>(k)];
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const Item& a, const Item& b) { return a.t < b.t; });
    SeasonPattern& pat = corpus.patterns[static_cast<std::size_t>(k)];
    pat.times.reserve(bucket.size());
    pat.wind_marks.reserve(bucket.size());
    pat.damage_marks.reserve(bucket.size());
    for (const Item& item : bucket) {
      pat.times.push_back(item.t);
      pat.wind_marks.push_back(item.y);
      pat.damage_marks.push_back(item.z);
    }
  }
  return corpus;
}

}  // namespace smpp
