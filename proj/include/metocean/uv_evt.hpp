/**
 * @file uv_evt.hpp
 * @brief Univariate extremes: GPD tails of cluster maxima, return levels,
 *        threshold diagnostics and Gumbel fits of normalized maxima.
 *
 * The GPD shape is treated as exactly zero (exponential branch) whenever
 * |xi| < kShapeZero.
 */
#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "metocean/decluster.hpp"

namespace metocean {

inline constexpr double kShapeZero = 1e-9;

/// Fitted GPD tail of one variable.
struct GpdFit {
  double threshold = 0.0;  ///< u_gpd, physical units
  double scale = 1.0;      ///< sigma > 0
  double shape = 0.0;      ///< xi
  double rate = 1.0;       ///< exceedances per year
  std::size_t n_exceedances = 0;
  double loglik = 0.0;

  void validate() const;
  /// Upper end of the support (infinity for xi >= 0).
  [[nodiscard]] double upper_endpoint() const;
};

void to_json(nlohmann::json& j, const GpdFit& f);
void from_json(const nlohmann::json& j, GpdFit& f);

/// P(X <= x | X > u).
double gpd_cdf(double x, const GpdFit& fit);
/// Inverse of `gpd_cdf` for p in [0, 1).
double gpd_quantile(double p, const GpdFit& fit);
/// log f(y) for the excess y = x - u.
double gpd_log_density(double excess, double scale, double shape);

/// Log-likelihood of excesses; -infinity outside the support.
double gpd_loglik(std::span<const double> excesses, double scale, double shape);
/// Analytic gradient (d/dscale, d/dshape) of `gpd_loglik`.
std::array<double, 2> gpd_loglik_gradient(std::span<const double> excesses, double scale, double shape);

/// Maximum likelihood GPD fit. Needs >= 10 strictly positive excesses.
GpdFit fit_gpd_mle(std::span<const double> excesses, double threshold, double rate);

/// Selects the maxima above `threshold` and fits them, with
/// rate = count / years.
GpdFit fit_pot(std::span<const double> maxima, double threshold, double years);

/// T-year return level u + sigma/xi((lambda T)^xi - 1).
double return_level(const GpdFit& fit, double return_period);

struct BootstrapConfig {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct ReturnLevelPoint {
  double period = 0.0;
  double level = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Return-level curve with percentile-bootstrap intervals obtained by
/// refitting resampled cluster maxima; the rate is re-estimated per resample
/// over the span implied by `fit`.
std::vector<ReturnLevelPoint> return_level_curve(std::span<const double> maxima, const GpdFit& fit,
                                                 std::span<const double> periods, const BootstrapConfig& boot);
nlohmann::json return_level_curve_json(const std::vector<ReturnLevelPoint>& curve);

struct ThresholdDiagnostic {
  double threshold = 0.0;
  bool available = false;
  std::size_t n_exceedances = 0;
  double mean_excess = 0.0;
  /// sigma* = sigma - xi u, constant above a valid threshold.
  double modified_scale = 0.0;
  double shape = 0.0;
  Interval modified_scale_ci{};
  Interval shape_ci{};
  /// Variance / mean of exceedance counts per calendar year.
  double dispersion_index = 0.0;
};

std::vector<ThresholdDiagnostic> threshold_diagnostics(const ClusterMaxima& series, std::size_t variable,
                                                       std::span<const double> thresholds,
                                                       const BootstrapConfig& boot);
nlohmann::json threshold_diagnostics_json(const std::vector<ThresholdDiagnostic>& rows);

/// Gumbel law P(X <= r) = exp(-exp(-(r - mode) / scale)).
struct GumbelFit {
  double mode = 0.0;
  double scale = 1.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const GumbelFit& f);
void from_json(const nlohmann::json& j, GumbelFit& f);

double gumbel_cdf(double x, const GumbelFit& fit);
double gumbel_quantile(const GumbelFit& fit, double p);
/// Maximum likelihood fit; needs >= 10 non-constant values.
GumbelFit fit_gumbel(std::span<const double> sample);

}  // namespace metocean
