/**
 * @file dependence.hpp
 * @brief Joint-tail models over semi-parametric margins, with fitting and
 *        Monte Carlo simulation of storm-event vectors.
 *
 * Every model works on the unit-Frechet scale Z = -1/log F(X) (or on normal
 * scores for the Gaussian copula) and maps simulated values back through
 * the same `MarginalSet`, so all variants share their marginal laws.
 */
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <variant>
#include <vector>

#include "metocean/decluster.hpp"
#include "metocean/margins.hpp"

namespace metocean {

struct IndependenceModel {};
struct PerfectDependenceModel {};

struct NatafModel {
  Eigen::MatrixXd corr;
  /// Event-scale probability above which conditional correlations were
  /// matched; negative when the per-variable GPD threshold levels were used.
  double tail_quantile = -1.0;
  bool boundary = false;   ///< some pair hit the upper correlation bound
  bool projected = false;  ///< matrix was projected to positive definite
};

struct LogisticModel {
  double alpha = 1.0;
  double censor_probability = 0.0;
  bool near_perfect = false;  ///< optimizer ended at the alpha -> 0 boundary
};

/// Regression of Z_j on Z_i for one target j inside partition i.
struct CeRegression {
  std::size_t target = 0;
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  bool boundary = false;
};

struct CePartition {
  std::size_t conditioning = 0;
  std::vector<CeRegression> regressions;  ///< one per j != i, increasing j
  /// Standardized residual rows, one per conditioning event, columns in the
  /// order of `regressions`.
  std::vector<std::vector<double>> residuals;
  std::size_t n_events = 0;
};

enum class CeConditioning {
  Partition,  ///< Z_i > nu and Z_i is the largest component
  Threshold,  ///< Z_i > nu only
};

enum class CeResiduals { Empirical, Gaussian };

struct ConditionalExtremesModel {
  double nu = 0.0;
  CeConditioning conditioning = CeConditioning::Partition;
  CeResiduals residuals = CeResiduals::Empirical;
  std::vector<CePartition> partitions;  ///< one per conditioning variable
  /// Events whose largest Frechet component is <= nu (Frechet scale).
  std::vector<std::vector<double>> body;
  std::size_t n_events = 0;
};

using DependenceModel = std::variant<std::monostate, IndependenceModel, PerfectDependenceModel, NatafModel,
                                     LogisticModel, ConditionalExtremesModel>;

inline constexpr int kDependenceSchemaVersion = 1;

/// Identifier used in file names and reports.
std::string model_name(const DependenceModel& model);
/// Canonical model identifiers in report order.
const std::vector<std::string>& model_names();

nlohmann::json model_to_json(const DependenceModel& model);
DependenceModel model_from_json(const nlohmann::json& j);

// Analytic pieces of the symmetric logistic model.

/// V(z) = (sum z_i^(-1/alpha))^alpha.
double logistic_v(const Eigen::VectorXd& z, double alpha);
/// log of the (partially differentiated) density exp(-V) with derivatives
/// taken in the components listed in `exceed`.
double logistic_censored_log_term(const Eigen::VectorXd& z, const std::vector<std::size_t>& exceed, double alpha);

// Fitting on transformed scales.

/// Event-scale correlation matching; `levels` are the per-variable normal
/// score thresholds.
NatafModel fit_nataf_scores(const Eigen::MatrixXd& scores, const std::vector<double>& levels);
/// Conditional correlation of a standard bivariate normal with correlation
/// rho, restricted to X > k1 and Y > k2.
double gaussian_tail_correlation(double rho, double k1, double k2);

LogisticModel fit_logistic_frechet(const Eigen::MatrixXd& z, double censor_z);

struct CeOptions {
  CeConditioning conditioning = CeConditioning::Partition;
  CeResiduals residuals = CeResiduals::Empirical;
};
ConditionalExtremesModel fit_conditional_extremes_frechet(const Eigen::MatrixXd& z, double nu,
                                                          const CeOptions& options = {});

// Fitting on physical events.

/// `tail_quantile` < 0 uses the GPD threshold level 1 - zeta_i of each margin.
NatafModel fit_nataf(const ClusterMaxima& events, const MarginalSet& margins, double tail_quantile);
LogisticModel fit_logistic(const ClusterMaxima& events, const MarginalSet& margins, double censor_probability);
ConditionalExtremesModel fit_conditional_extremes(const ClusterMaxima& events, const MarginalSet& margins, double nu,
                                                  const CeOptions& options = {});

struct DependenceSettings {
  double nataf_tail_quantile = -1.0;
  double logistic_censor_probability = 0.7;
  /// Frechet-scale threshold nu = -1/log(p).
  double ce_conditioning_probability = 0.7;
  CeOptions ce{};
};

DependenceModel fit_dependence(const std::string& name, const ClusterMaxima& events, const MarginalSet& margins,
                               const DependenceSettings& settings);

struct SimulatedEvents {
  std::vector<std::string> variables;
  Eigen::MatrixXd values;  ///< n x d, physical units
  double events_per_year = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Draws are generated in fixed blocks, each with its own derived seed, so
/// the output depends only on (model, margins, n, seed).
SimulatedEvents simulate(const DependenceModel& model, const MarginalSet& margins, std::size_t n, std::uint64_t seed);

/// Simulation on the unit-Frechet scale (n x d), for the logistic and
/// independence samplers.
Eigen::MatrixXd simulate_logistic_frechet(double alpha, std::size_t d, std::size_t n, std::uint64_t seed);

void write_simulated_csv(const SimulatedEvents& sim, std::ostream& out);
SimulatedEvents read_simulated_csv(std::istream& in, double events_per_year);

/// Empirical chi(q) = P(U_j > q | U_i > q) from ranks.
double empirical_chi(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double q);

}  // namespace metocean
