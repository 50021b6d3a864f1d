#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>

#include "metocean/ingest.hpp"

namespace metocean {

/// Marginal law of one intensity in the synthetic environment.
struct MarginSpec {
  enum class Family { Weibull, Lognormal, Gamma };
  Family family = Family::Weibull;
  /// Weibull: shape, scale. Lognormal: log-mean, log-sd. Gamma: shape, scale.
  double p1 = 1.0;
  double p2 = 1.0;
  /// Added to every draw.
  double location = 0.0;

  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double quantile(double p) const;
  void validate(const std::string& name) const;
};

struct DirectionSpec {
  double mean_deg = 45.0;
  /// Draws are uniform on [mean - spread, mean + spread].
  double spread_deg = 0.0;
};

enum class SyntheticCopula { Independence, Perfect, Gaussian, Logistic };

/// Synthetic metocean environment for (hs, ws, cs) plus directions.
///
/// Cross-sectional dependence comes from i.i.d. copula vectors whose normal
/// scores are smoothed in time by a unit-variance AR(1) filter, so each
/// margin is exactly its `MarginSpec` at every time step.
struct SynthesisConfig {
  Timestamp start = std::chrono::sys_days{std::chrono::year{1993} / 1 / 1};
  /// Span in 365-day years.
  double years = 10.0;
  std::chrono::seconds time_step{3600};
  MarginSpec hs{MarginSpec::Family::Weibull, 1.4, 2.4, 0.0};
  MarginSpec ws{MarginSpec::Family::Weibull, 2.0, 10.0, 0.0};
  MarginSpec cs{MarginSpec::Family::Weibull, 1.8, 0.35, 0.0};
  DirectionSpec dm{};
  DirectionSpec wdir{};
  DirectionSpec cdir{};
  SyntheticCopula copula = SyntheticCopula::Gaussian;
  /// Gaussian copula correlation, order (hs, ws, cs).
  Eigen::Matrix3d correlation = Eigen::Matrix3d::Identity();
  double logistic_alpha = 0.5;
  /// e-folding time of the AR(1) smoothing; 0 gives i.i.d. records.
  double autocorrelation_hours = 12.0;

  void validate() const;
  [[nodiscard]] std::size_t record_count() const;

  static SynthesisConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

Dataset generate_synthetic_dataset(const SynthesisConfig& config, std::uint64_t seed);

}  // namespace metocean
