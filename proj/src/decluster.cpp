#include "metocean/decluster.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "metocean/error.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

constexpr double kSecondsPerYear = 365.25 * 86400.0;

struct Run {
  std::size_t first = 0;  // position of first exceedance
  std::size_t last = 0;   // position of last exceedance
};

long long grid_index(const MultiSeries& s, std::size_t pos) {
  return (s.times[pos] - s.span_start) / s.step;
}

/// Groups exceeding positions into run-length clusters.
std::vector<Run> runs(const MultiSeries& s, const std::vector<bool>& exceeds, long long separation_steps) {
  std::vector<Run> out;
  bool open = false;
  Run current;
  long long last_grid = 0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (!exceeds[p]) continue;
    const long long g = grid_index(s, p);
    if (open && g - last_grid - 1 <= separation_steps) {
      current.last = p;
    } else {
      if (open) out.push_back(current);
      current = Run{p, p};
      open = true;
    }
    last_grid = g;
  }
  if (open) out.push_back(current);
  return out;
}

double storm_threshold(const std::vector<double>& column, const DeclusterConfig& config) {
  if (config.absolute_threshold) return *config.absolute_threshold;
  std::vector<double> finite;
  finite.reserve(column.size());
  for (double v : column) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) throw Error("no finite values to decluster");
  return stats::quantile_linear(finite, config.storm_threshold_quantile);
}

std::vector<double> componentwise_max(const MultiSeries& s, const Run& r) {
  std::vector<double> out(s.dim(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t v = 0; v < s.dim(); ++v) {
    for (std::size_t p = r.first; p <= r.last; ++p) {
      const double x = s.columns[v][p];
      if (std::isnan(x)) continue;
      if (std::isnan(out[v]) || x > out[v]) out[v] = x;
    }
  }
  return out;
}

ClusterMaxima empty_result(const MultiSeries& s) {
  ClusterMaxima cm;
  cm.variables = s.names;
  cm.years = s.years();
  cm.span_start = s.span_start;
  cm.span_end = s.span_end;
  cm.thresholds.assign(s.dim(), std::numeric_limits<double>::quiet_NaN());
  return cm;
}

}  // namespace

double MultiSeries::years() const {
  const auto steps = (span_end - span_start) / step + 1;
  return static_cast<double>(steps) * static_cast<double>(step.count()) / kSecondsPerYear;
}

std::size_t MultiSeries::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(fmt::format("unknown variable '{}'", name));
  return static_cast<std::size_t>(it - names.begin());
}

void MultiSeries::validate() const {
  if (times.empty()) throw Error("empty series");
  if (step.count() <= 0) throw Error("series time step must be positive");
  if (names.size() != columns.size()) throw Error("series names/columns mismatch");
  for (const auto& c : columns) {
    if (c.size() != times.size()) throw Error("series column length mismatch");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1]) throw Error("non-monotone time axis");
    if ((times[i] - times[i - 1]) % step != std::chrono::seconds{0}) throw Error("irregular time step");
  }
  if (times.front() < span_start || times.back() > span_end) throw Error("series span does not cover its samples");
}

MultiSeries to_series(const Dataset& data, const std::vector<Field>& fields) {
  if (data.empty()) throw Error("empty dataset");
  if (fields.empty()) throw Error("no variables selected");
  MultiSeries s;
  s.times = data.times();
  s.step = data.time_step();
  s.span_start = data.start();
  s.span_end = data.end();
  for (Field f : fields) {
    if (!data.has_field(f)) throw Error(fmt::format("dataset has no '{}' column", field_name(f)));
    s.names.emplace_back(field_name(f));
    s.columns.push_back(data.column(f));
  }
  return s;
}

void DeclusterConfig::validate(std::chrono::seconds step) const {
  if (!absolute_threshold && !(storm_threshold_quantile > 0.0 && storm_threshold_quantile < 1.0)) {
    throw Error("storm threshold quantile must lie in (0, 1)");
  }
  if (separation.count() <= 0 || separation % step != std::chrono::seconds{0}) {
    throw Error("separation must be a positive integer multiple of the time step");
  }
}

std::vector<double> ClusterMaxima::column(std::size_t variable) const {
  std::vector<double> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.values.at(variable));
  return out;
}

std::vector<Timestamp> ClusterMaxima::peak_times() const {
  std::vector<Timestamp> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.peak_time);
  return out;
}

ClusterMaxima decluster(const MultiSeries& series, std::size_t variable, const DeclusterConfig& config) {
  series.validate();
  config.validate(series.step);
  if (variable >= series.dim()) throw Error("decluster: variable index out of range");

  const auto& x = series.columns[variable];
  const double u = storm_threshold(x, config);
  std::vector<bool> exceeds(series.size());
  for (std::size_t p = 0; p < series.size(); ++p) exceeds[p] = x[p] > u;  // NaN compares false

  const auto clusters = runs(series, exceeds, config.separation / series.step);
  if (clusters.empty()) throw Error("no storms found");

  ClusterMaxima cm = empty_result(series);
  cm.thresholds[variable] = u;
  for (const auto& r : clusters) {
    std::size_t peak = r.first;
    for (std::size_t p = r.first; p <= r.last; ++p) {
      if (x[p] > x[peak]) peak = p;  // strict: earliest maximum wins
    }
    ClusterEvent e;
    e.peak_time = series.times[peak];
    if (config.concomitant == ConcomitantRule::AtPeak) {
      for (std::size_t v = 0; v < series.dim(); ++v) e.values.push_back(series.columns[v][peak]);
    } else {
      e.values = componentwise_max(series, r);
      e.values[variable] = x[peak];
    }
    cm.events.push_back(std::move(e));
  }
  return cm;
}

ClusterMaxima decluster(const Dataset& data, Field variable, const DeclusterConfig& config,
                        const std::vector<Field>& carried) {
  std::vector<Field> fields{variable};
  for (Field f : carried) {
    if (f != variable) fields.push_back(f);
  }
  return decluster(to_series(data, fields), 0, config);
}

ClusterMaxima decluster_joint(const MultiSeries& series, const DeclusterConfig& config) {
  series.validate();
  config.validate(series.step);
  const std::size_t d = series.dim();

  ClusterMaxima cm = empty_result(series);
  std::vector<std::vector<double>> sorted(d);
  for (std::size_t v = 0; v < d; ++v) {
    cm.thresholds[v] = storm_threshold(series.columns[v], config);
    for (double x : series.columns[v]) {
      if (std::isfinite(x)) sorted[v].push_back(x);
    }
    std::sort(sorted[v].begin(), sorted[v].end());
  }

  std::vector<bool> exceeds(series.size(), false);
  for (std::size_t p = 0; p < series.size(); ++p) {
    for (std::size_t v = 0; v < d; ++v) {
      if (series.columns[v][p] > cm.thresholds[v]) exceeds[p] = true;
    }
  }
  const auto clusters = runs(series, exceeds, config.separation / series.step);
  if (clusters.empty()) throw Error("no storms found");

  auto score = [&](std::size_t p) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < d; ++v) {
      const double x = series.columns[v][p];
      if (!std::isfinite(x)) return -std::numeric_limits<double>::infinity();
      const auto below = std::upper_bound(sorted[v].begin(), sorted[v].end(), x) - sorted[v].begin();
      best = std::max(best, static_cast<double>(below) / static_cast<double>(sorted[v].size() + 1));
    }
    return best;
  };

  for (const auto& r : clusters) {
    std::size_t peak = r.first;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t p = r.first; p <= r.last; ++p) {
      const double s = score(p);
      if (s > best) {
        best = s;
        peak = p;
      }
    }
    if (!std::isfinite(best)) {
      ++cm.dropped_incomplete;
      continue;
    }
    ClusterEvent e;
    e.peak_time = series.times[peak];
    if (config.concomitant == ConcomitantRule::AtPeak) {
      for (std::size_t v = 0; v < d; ++v) e.values.push_back(series.columns[v][peak]);
    } else {
      e.values = componentwise_max(series, r);
    }
    cm.events.push_back(std::move(e));
  }
  if (cm.events.empty()) throw Error("no storms found");
  return cm;
}

void write_events_csv(const ClusterMaxima& events, std::ostream& out) {
  out << "peak_time";
  for (const auto& v : events.variables) out << ',' << v;
  out << '\n';
  for (const auto& e : events.events) {
    out << format_timestamp(e.peak_time);
    for (double v : e.values) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
}

ClusterMaxima read_events_csv(std::istream& in, double years) {
  ClusterMaxima cm;
  cm.years = years;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty events CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "peak_time") throw Error("events CSV must start with a peak_time column");
    while (std::getline(ss, cell, ',')) cm.variables.push_back(cell);
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    ClusterEvent e;
    e.peak_time = parse_timestamp(cell);
    while (std::getline(ss, cell, ',')) {
      try {
        e.values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(fmt::format("events CSV row {}: cannot parse '{}'", row, cell));
      }
    }
    if (e.values.size() != cm.variables.size()) throw Error(fmt::format("events CSV row {}: wrong cell count", row));
    cm.events.push_back(std::move(e));
  }
  cm.thresholds.assign(cm.variables.size(), std::numeric_limits<double>::quiet_NaN());
  if (!cm.events.empty()) {
    cm.span_start = cm.events.front().peak_time;
    cm.span_end = cm.events.back().peak_time;
  }
  return cm;
}

}  // namespace metocean
