/**
 * @file decluster.hpp
 * @brief Run-length declustering of time series into independent storm peaks.
 *
 * A cluster is a maximal set of exceedances of the storm threshold u_s in
 * which consecutive exceedances are separated by at most d_s of
 * non-exceeding time. Missing values and absent grid steps count as
 * non-exceeding time, so a gap longer than d_s always ends a cluster.
 */
#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metocean/ingest.hpp"

namespace metocean {

/// Several aligned columns on a regular time grid (not necessarily gap-free).
struct MultiSeries {
  std::vector<Timestamp> times;
  std::chrono::seconds step{3600};
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  ///< columns[variable][time]
  Timestamp span_start{};
  Timestamp span_end{};  ///< last grid instant

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return columns.size(); }
  /// Covered duration in years of 365.25 days.
  [[nodiscard]] double years() const;
  [[nodiscard]] std::size_t index_of(const std::string& name) const;
  void validate() const;
};

MultiSeries to_series(const Dataset& data, const std::vector<Field>& fields);

/// How the values of the non-declustered variables are attached to an event.
enum class ConcomitantRule {
  AtPeak,            ///< values at the peak timestamp of the declustered variable
  ComponentwiseMax,  ///< within-cluster maximum of each variable
};

struct DeclusterConfig {
  double storm_threshold_quantile = 0.975;
  std::chrono::seconds separation{48 * 3600};
  /// Overrides the quantile when set.
  std::optional<double> absolute_threshold;
  ConcomitantRule concomitant = ConcomitantRule::AtPeak;

  void validate(std::chrono::seconds step) const;
};

struct ClusterEvent {
  Timestamp peak_time{};
  std::vector<double> values;
};

struct ClusterMaxima {
  std::vector<std::string> variables;
  std::vector<ClusterEvent> events;
  /// Storm threshold per variable (NaN for variables that were not declustered).
  std::vector<double> thresholds;
  double years = 0.0;
  Timestamp span_start{};
  Timestamp span_end{};
  /// Clusters dropped because no time step inside them had complete values.
  std::size_t dropped_incomplete = 0;

  [[nodiscard]] std::size_t n_clusters() const noexcept { return events.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return variables.size(); }
  [[nodiscard]] std::vector<double> column(std::size_t variable) const;
  [[nodiscard]] std::vector<Timestamp> peak_times() const;
  [[nodiscard]] double events_per_year() const { return static_cast<double>(events.size()) / years; }
};

/// Univariate run-length declustering on column `variable`; the other
/// columns are attached per `config.concomitant`.
ClusterMaxima decluster(const MultiSeries& series, std::size_t variable, const DeclusterConfig& config);

ClusterMaxima decluster(const Dataset& data, Field variable, const DeclusterConfig& config,
                        const std::vector<Field>& carried);

/// Joint storms: a step is stormy when any variable exceeds its own storm
/// threshold. The event peak is the step maximizing the largest marginal
/// empirical probability; values follow `config.concomitant`.
ClusterMaxima decluster_joint(const MultiSeries& series, const DeclusterConfig& config);

/// CSV with header `peak_time,<variables...>`.
void write_events_csv(const ClusterMaxima& events, std::ostream& out);
/// Inverse of `write_events_csv`; span metadata must be supplied by the caller.
ClusterMaxima read_events_csv(std::istream& in, double years);

}  // namespace metocean
