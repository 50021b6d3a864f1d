#include "metocean/margins.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "metocean/error.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Margin::Margin(std::string name, std::span<const double> sample, double threshold, double years)
    : name_(std::move(name)) {
  std::vector<double> x;
  for (double v : sample) {
    if (std::isfinite(v)) x.push_back(v);
  }
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  std::vector<double> excesses;
  for (double v : x) {
    if (v > threshold) excesses.push_back(v - threshold);
  }
  if (excesses.size() == n) throw Error(fmt::format("margin {}: no events at or below the GPD threshold", name_));
  try {
    tail_ = fit_gpd_mle(excesses, threshold, static_cast<double>(excesses.size()) / years);
  } catch (const Error& e) {
    throw Error(fmt::format("margin {}: {}", name_, e.what()));
  }
  zeta_ = static_cast<double>(excesses.size()) / static_cast<double>(n);

  const auto denom = static_cast<double>(n + 1);
  std::vector<double> bx, bp;
  for (std::size_t k = 0; k < n && x[k] < threshold; ++k) {
    const double p = static_cast<double>(k + 1) / denom;
    if (!bx.empty() && bx.back() == x[k]) {
      bp.back() = p;  // ties keep the highest plotting position
    } else {
      bx.push_back(x[k]);
      bp.push_back(p);
    }
  }
  const double first = bx.empty() ? threshold : bx.front();
  const double spacing = (threshold - first) / static_cast<double>(std::max<std::size_t>(bx.size(), 1));
  const double lower = first - std::max(spacing, 1e-9 * std::max(1.0, std::abs(threshold)));
  knot_x_.push_back(lower);
  knot_p_.push_back(0.0);
  knot_x_.insert(knot_x_.end(), bx.begin(), bx.end());
  knot_p_.insert(knot_p_.end(), bp.begin(), bp.end());
  knot_x_.push_back(threshold);
  knot_p_.push_back(1.0 - zeta_);
}

Margin::Margin(std::string name, GpdFit tail, double zeta, std::vector<double> knot_x, std::vector<double> knot_p)
    : name_(std::move(name)), tail_(tail), zeta_(zeta), knot_x_(std::move(knot_x)), knot_p_(std::move(knot_p)) {
  tail_.validate();
  if (!(zeta_ > 0.0 && zeta_ < 1.0)) throw Error(fmt::format("margin {}: tail fraction must lie in (0, 1)", name_));
  if (knot_x_.size() < 2 || knot_x_.size() != knot_p_.size()) throw Error(fmt::format("margin {}: bad knot table", name_));
  for (std::size_t k = 1; k < knot_x_.size(); ++k) {
    if (!(knot_x_[k] > knot_x_[k - 1]) || !(knot_p_[k] > knot_p_[k - 1])) {
      throw Error(fmt::format("margin {}: knot table must be strictly increasing", name_));
    }
  }
  if (knot_x_.back() != tail_.threshold) throw Error(fmt::format("margin {}: last knot must be the threshold", name_));
}

double Margin::survival(double x) const {
  if (x > tail_.threshold) {
    const double z = (x - tail_.threshold) / tail_.scale;
    if (std::abs(tail_.shape) < kShapeZero) return zeta_ * std::exp(-z);
    const double t = 1.0 + tail_.shape * z;
    if (t <= 0.0) return 0.0;
    return zeta_ * std::exp(-std::log(t) / tail_.shape);
  }
  return 1.0 - cdf(x);
}

double Margin::cdf(double x) const {
  if (x > tail_.threshold) return 1.0 - survival(x);
  if (x <= knot_x_.front()) return 0.0;
  const auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
  const auto k = static_cast<std::size_t>(it - knot_x_.begin());
  if (k >= knot_x_.size()) return knot_p_.back();
  const double w = (x - knot_x_[k - 1]) / (knot_x_[k] - knot_x_[k - 1]);
  return knot_p_[k - 1] + w * (knot_p_[k] - knot_p_[k - 1]);
}

double Margin::log_cdf(double x) const {
  if (x > tail_.threshold) return std::log1p(-survival(x));
  const double p = cdf(x);
  return p > 0.0 ? std::log(p) : -kInf;
}

double Margin::tail_quantile_from_survival(double s) const {
  const double ls = std::log(s);
  if (std::abs(tail_.shape) < kShapeZero) return tail_.threshold - tail_.scale * ls;
  return tail_.threshold + tail_.scale / tail_.shape * std::expm1(-tail_.shape * ls);
}

double Margin::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(fmt::format("margin {}: probability {} outside [0, 1]", name_, p));
  if (p == 0.0) return knot_x_.front();
  if (p == 1.0) return upper_bound();
  if (p > knot_p_.back()) return tail_quantile_from_survival((1.0 - p) / zeta_);
  const auto it = std::lower_bound(knot_p_.begin(), knot_p_.end(), p);
  const auto k = static_cast<std::size_t>(it - knot_p_.begin());
  if (k == 0) return knot_x_.front();
  const double w = (p - knot_p_[k - 1]) / (knot_p_[k] - knot_p_[k - 1]);
  return knot_x_[k - 1] + w * (knot_x_[k] - knot_x_[k - 1]);
}

double Margin::quantile_log(double log_p) const {
  if (!(log_p <= 0.0)) throw Error(fmt::format("margin {}: log probability must be <= 0", name_));
  if (log_p > std::log(knot_p_.back())) {
    const double s = -std::expm1(log_p) / zeta_;
    if (s <= 0.0) return upper_bound();
    return tail_quantile_from_survival(s);
  }
  return quantile(std::exp(log_p));
}

void to_json(nlohmann::json& j, const Margin& m) {
  j = nlohmann::json{{"name", m.name()},       {"tail", m.tail()},         {"zeta", m.zeta()},
                     {"knots_x", m.knot_x()}, {"knots_p", m.knot_p()}};
}

void from_json(const nlohmann::json& j, Margin& m) {
  m = Margin(j.at("name").get<std::string>(), j.at("tail").get<GpdFit>(), j.at("zeta").get<double>(),
             j.at("knots_x").get<std::vector<double>>(), j.at("knots_p").get<std::vector<double>>());
}

std::vector<std::string> MarginalSet::names() const {
  std::vector<std::string> out;
  for (const auto& m : margins) out.push_back(m.name());
  return out;
}

void MarginalSet::validate() const {
  if (margins.empty()) throw Error("marginal set is empty");
  if (!(events_per_year > 0.0)) throw Error("marginal set needs a positive event rate");
}

double MarginalSet::to_frechet(std::size_t i, double x) const {
  const double lf = margins.at(i).log_cdf(x);
  if (!(lf < 0.0) || !std::isfinite(lf)) {
    throw Error(fmt::format("infinite Frechet transform: F_{}({}) is {}", margins[i].name(), x, lf == 0.0 ? 1 : 0));
  }
  return -1.0 / lf;
}

double MarginalSet::from_frechet(std::size_t i, double z) const {
  if (!(z > 0.0)) throw Error("Frechet value must be positive");
  return margins.at(i).quantile_log(-1.0 / z);
}

Eigen::VectorXd MarginalSet::to_frechet(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) z[i] = to_frechet(static_cast<std::size_t>(i), x[i]);
  return z;
}

Eigen::VectorXd MarginalSet::from_frechet(const Eigen::VectorXd& z) const {
  Eigen::VectorXd x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) x[i] = from_frechet(static_cast<std::size_t>(i), z[i]);
  return x;
}

Eigen::MatrixXd MarginalSet::to_frechet(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != dim()) throw Error("event matrix width does not match the margins");
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) z(r, c) = to_frechet(static_cast<std::size_t>(c), x(r, c));
  return z;
}

Eigen::MatrixXd MarginalSet::to_normal_scores(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != dim()) throw Error("event matrix width does not match the margins");
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto& m = margins[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double p = m.cdf(x(r, c));
      double s;
      if (p <= 0.5) {
        if (p <= 0.0) throw Error(fmt::format("normal score undefined: F_{} is 0", m.name()));
        s = stats::normal_quantile(p);
      } else {
        const double q = m.survival(x(r, c));
        if (q <= 0.0) throw Error(fmt::format("normal score undefined: F_{} is 1", m.name()));
        s = -stats::normal_quantile(q);
      }
      y(r, c) = s;
    }
  }
  return y;
}

void to_json(nlohmann::json& j, const MarginalSet& m) {
  j = nlohmann::json{{"schema_version", kMarginsSchemaVersion},
                     {"events_per_year", m.events_per_year},
                     {"n_events", m.n_events},
                     {"margins", m.margins}};
}

void from_json(const nlohmann::json& j, MarginalSet& m) {
  if (j.value("schema_version", 0) != kMarginsSchemaVersion) throw Error("margins: unsupported schema_version");
  m.events_per_year = j.at("events_per_year").get<double>();
  m.n_events = j.at("n_events").get<std::size_t>();
  m.margins = j.at("margins").get<std::vector<Margin>>();
  m.validate();
}

MarginalSet fit_margins(const ClusterMaxima& events, std::span<const double> thresholds) {
  if (thresholds.size() != events.dim()) throw Error("one GPD threshold per variable is required");
  if (events.events.empty()) throw Error("no events to fit margins on");
  if (!(events.years > 0.0)) throw Error("event span in years must be positive");
  MarginalSet set;
  for (std::size_t v = 0; v < events.dim(); ++v) {
    set.margins.emplace_back(events.variables[v], events.column(v), thresholds[v], events.years);
  }
  set.n_events = events.n_clusters();
  set.events_per_year = events.events_per_year();
  set.validate();
  return set;
}

std::vector<double> event_quantile_thresholds(const ClusterMaxima& events, double probability) {
  std::vector<double> out;
  for (std::size_t v = 0; v < events.dim(); ++v) out.push_back(stats::quantile_linear(events.column(v), probability));
  return out;
}

Eigen::MatrixXd events_matrix(const ClusterMaxima& events) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(events.n_clusters()), static_cast<Eigen::Index>(events.dim()));
  for (std::size_t r = 0; r < events.n_clusters(); ++r)
    for (std::size_t c = 0; c < events.dim(); ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = events.events[r].values[c];
  return x;
}

double log_normal_cdf(double y) {
  if (y > 0.0) return std::log1p(-0.5 * std::erfc(y / std::sqrt(2.0)));
  return std::log(0.5 * std::erfc(-y / std::sqrt(2.0)));
}

}  // namespace metocean
