#pragma once

// Small synthetic event sets shared by the dependence and contour tests.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "metocean/decluster.hpp"
#include "metocean/margins.hpp"
#include "metocean/random.hpp"

namespace testing {

/// Events at hourly-spaced peak times, one row of `x` per event.
inline metocean::ClusterMaxima events_from_matrix(const Eigen::MatrixXd& x, std::vector<std::string> names,
                                                  double years) {
  metocean::ClusterMaxima cm;
  cm.variables = std::move(names);
  cm.thresholds.assign(cm.variables.size(), 0.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    metocean::ClusterEvent e;
    e.peak_time = hour(static_cast<long>(r) * 100);
    for (Eigen::Index c = 0; c < x.cols(); ++c) e.values.push_back(x(r, c));
    cm.events.push_back(std::move(e));
  }
  cm.span_start = hour(0);
  cm.span_end = hour(static_cast<long>(years * 8766.0));
  cm.years = years;
  return cm;
}

/// Independent standard exponential columns.
inline Eigen::MatrixXd exponential_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  metocean::Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = metocean::standard_exponential(rng);
  return x;
}

/// Margins fitted on `n` independent exponential events per variable with
/// GPD thresholds at the 0.9 event quantile.
inline metocean::MarginalSet exponential_margins(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < d; ++c) names.push_back("x" + std::to_string(c));
  const auto ev = events_from_matrix(exponential_matrix(n, d, seed), names, static_cast<double>(n) / 10.0);
  const auto u = metocean::event_quantile_thresholds(ev, 0.9);
  return metocean::fit_margins(ev, u);
}

}  // namespace testing
