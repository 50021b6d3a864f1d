/**
 * @file margins.hpp
 * @brief Semi-parametric marginal laws of joint storm events.
 *
 * Below the GPD threshold u the cdf interpolates the empirical plotting
 * positions k/(n+1) linearly. Above it the tail is
 * F(x) = 1 - zeta (1 + xi (x - u)/sigma)^(-1/xi), with zeta the fraction of
 * events above u. Log-scale entry points keep full precision far in the
 * tail, where F rounds to one.
 */
#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "metocean/decluster.hpp"
#include "metocean/uv_evt.hpp"

namespace metocean {

class Margin {
 public:
  Margin() = default;
  /// `sample` holds the event values of one variable; `threshold` is u.
  Margin(std::string name, std::span<const double> sample, double threshold, double years);
  /// Reassembles a margin from stored parts (used by deserialization).
  Margin(std::string name, GpdFit tail, double zeta, std::vector<double> knot_x, std::vector<double> knot_p);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const GpdFit& tail() const noexcept { return tail_; }
  /// P(X > u) under the event distribution.
  [[nodiscard]] double zeta() const noexcept { return zeta_; }
  [[nodiscard]] const std::vector<double>& knot_x() const noexcept { return knot_x_; }
  [[nodiscard]] const std::vector<double>& knot_p() const noexcept { return knot_p_; }
  [[nodiscard]] double lower_bound() const noexcept { return knot_x_.front(); }
  [[nodiscard]] double upper_bound() const noexcept { return tail_.upper_endpoint(); }

  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double survival(double x) const;
  /// log F(x); -infinity below the support, 0 at or above its upper end.
  [[nodiscard]] double log_cdf(double x) const;
  [[nodiscard]] double quantile(double p) const;
  /// Quantile addressed by log p, for p close to one.
  [[nodiscard]] double quantile_log(double log_p) const;

 private:
  [[nodiscard]] double tail_quantile_from_survival(double s) const;

  std::string name_;
  GpdFit tail_;
  double zeta_ = 0.0;
  std::vector<double> knot_x_;
  std::vector<double> knot_p_;
};

void to_json(nlohmann::json& j, const Margin& m);
void from_json(const nlohmann::json& j, Margin& m);

/// One margin per tracked variable, in a fixed order shared by every model.
struct MarginalSet {
  std::vector<Margin> margins;
  double events_per_year = 0.0;
  std::size_t n_events = 0;

  [[nodiscard]] std::size_t dim() const noexcept { return margins.size(); }
  [[nodiscard]] std::vector<std::string> names() const;
  void validate() const;

  /// Unit-Frechet transform Z = -1 / log F(X). Throws when F is 0 or 1.
  [[nodiscard]] double to_frechet(std::size_t i, double x) const;
  [[nodiscard]] double from_frechet(std::size_t i, double z) const;
  [[nodiscard]] Eigen::VectorXd to_frechet(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd from_frechet(const Eigen::VectorXd& z) const;
  /// Row-wise transform of an n x d matrix.
  [[nodiscard]] Eigen::MatrixXd to_frechet(const Eigen::MatrixXd& x) const;
  /// Standard normal scores Phi^-1(F(x)), row-wise.
  [[nodiscard]] Eigen::MatrixXd to_normal_scores(const Eigen::MatrixXd& x) const;
};

inline constexpr int kMarginsSchemaVersion = 1;

void to_json(nlohmann::json& j, const MarginalSet& m);
void from_json(const nlohmann::json& j, MarginalSet& m);

/// Fits every margin on the joint event sample. `thresholds` are the GPD
/// thresholds in physical units, one per variable.
MarginalSet fit_margins(const ClusterMaxima& events, std::span<const double> thresholds);

/// Thresholds at a probability level of each event column itself.
std::vector<double> event_quantile_thresholds(const ClusterMaxima& events, double probability);

/// n x d matrix of event values.
Eigen::MatrixXd events_matrix(const ClusterMaxima& events);

/// log Phi(y) without cancellation for large y.
double log_normal_cdf(double y);

}  // namespace metocean
