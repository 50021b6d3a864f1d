#include "metocean/metamodel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <ostream>
#include <string>

#include "metocean/error.hpp"

namespace metocean {

namespace {

double heading_factor(double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  return std::cos(r) + std::sin(r);
}

double signed_square(double v) { return v * std::abs(v); }

/// Least squares with an explicit rank check. Throws naming the regressors
/// that the pivoted QR could not separate.
Eigen::VectorXd solve_stage(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                            const std::string& stage) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank < x.cols()) {
    std::string bad;
    for (Eigen::Index k = rank; k < x.cols(); ++k) {
      if (!bad.empty()) bad += ", ";
      bad += names[static_cast<std::size_t>(qr.colsPermutation().indices()[k])];
    }
    throw Error(fmt::format("rank-deficient design matrix in {} stage: cannot identify {}", stage, bad));
  }
  return qr.solve(y);
}

}  // namespace

void MetaModelParams::validate() const {
  gumbel_lf.validate();
  gumbel_hf.validate();
  if (!(quantile_level > 0.0 && quantile_level < 1.0)) throw Error("quantile_level must lie in (0, 1)");
  for (double v : {pretension, alpha_h, alpha_w, alpha_c, a_lf, b_lf, a_hf, b_hf, c_hf, d_hf}) {
    if (!std::isfinite(v)) throw Error("meta-model coefficients must be finite");
  }
}

MetaModelParams MetaModelParams::synthetic_defaults() {
  MetaModelParams p;
  p.pretension = 2000.0;
  p.alpha_h = 1.25;
  p.alpha_w = 0.26;
  p.alpha_c = 47.0;
  p.a_lf = 0.47;
  p.b_lf = 1e-4;
  p.a_hf = 7.7;
  p.b_hf = 0.023;
  p.c_hf = 4e-5;
  p.d_hf = 9e-4;
  p.gumbel_lf = {2.0, 0.4};
  p.gumbel_hf = {3.1, 0.3};
  p.quantile_level = 0.75;
  return p;
}

void to_json(nlohmann::json& j, const MetaModelParams& p) {
  j = nlohmann::json{
      {"schema_version", kMetaModelSchemaVersion},
      {"pretension", p.pretension},
      {"quasi_static", {{"alpha_h", p.alpha_h}, {"alpha_w", p.alpha_w}, {"alpha_c", p.alpha_c}}},
      {"sigma_lf", {{"a", p.a_lf}, {"b", p.b_lf}}},
      {"sigma_hf", {{"a", p.a_hf}, {"b", p.b_hf}, {"c", p.c_hf}, {"d", p.d_hf}}},
      {"gumbel_lf", p.gumbel_lf},
      {"gumbel_hf", p.gumbel_hf},
      {"quantile_level", p.quantile_level},
  };
}

void from_json(const nlohmann::json& j, MetaModelParams& p) {
  const int version = j.value("schema_version", 0);
  if (version != kMetaModelSchemaVersion) {
    throw Error(fmt::format("meta-model params: unsupported schema_version {} (expected {})", version,
                            kMetaModelSchemaVersion));
  }
  p.pretension = j.at("pretension").get<double>();
  const auto& qs = j.at("quasi_static");
  p.alpha_h = qs.at("alpha_h").get<double>();
  p.alpha_w = qs.at("alpha_w").get<double>();
  p.alpha_c = qs.at("alpha_c").get<double>();
  p.a_lf = j.at("sigma_lf").at("a").get<double>();
  p.b_lf = j.at("sigma_lf").at("b").get<double>();
  const auto& hf = j.at("sigma_hf");
  p.a_hf = hf.at("a").get<double>();
  p.b_hf = hf.at("b").get<double>();
  p.c_hf = hf.at("c").get<double>();
  p.d_hf = hf.at("d").get<double>();
  p.gumbel_lf = j.at("gumbel_lf").get<GumbelFit>();
  p.gumbel_hf = j.at("gumbel_hf").get<GumbelFit>();
  p.quantile_level = j.value("quantile_level", 0.75);
  p.validate();
}

double quasi_static(const MetaModelParams& params, const SeaStateRecord& s) {
  return params.alpha_h * s.hs * s.hs * heading_factor(s.dm) + params.alpha_w * s.ws * s.ws * heading_factor(s.wdir) +
         params.alpha_c * s.cs * s.cs * heading_factor(s.cdir);
}

double sigma_lf(const MetaModelParams& params, double hs, double t_qs, FloorCounter* floors) {
  const double raw = params.a_lf * hs * hs + params.b_lf * signed_square(t_qs);
  if (raw < 0.0) {
    if (floors != nullptr) ++floors->lf;
    return 0.0;
  }
  return raw;
}

double sigma_hf(const MetaModelParams& params, double hs, double t_qs, double sigma_lf, FloorCounter* floors) {
  const double raw = params.a_hf * hs + params.b_hf * hs * hs * hs + params.c_hf * signed_square(t_qs) +
                     params.d_hf * sigma_lf * sigma_lf;
  if (raw < 0.0) {
    if (floors != nullptr) ++floors->hf;
    return 0.0;
  }
  return raw;
}

TensionDecomposition max_tension(const MetaModelParams& params, const SeaStateRecord& state, FloorCounter* floors) {
  TensionDecomposition d;
  d.t_qs = quasi_static(params, state);
  d.sigma_lf = sigma_lf(params, state.hs, d.t_qs, floors);
  d.sigma_hf = sigma_hf(params, state.hs, d.t_qs, d.sigma_lf, floors);
  const double r_lf = gumbel_quantile(params.gumbel_lf, params.quantile_level);
  const double r_hf = gumbel_quantile(params.gumbel_hf, params.quantile_level);
  d.t_max = params.pretension + d.t_qs + r_lf * d.sigma_lf + r_hf * d.sigma_hf;
  return d;
}

MetaModelParams fit_metamodel(std::span<const MetaModelSample> samples, double pretension, double quantile_level) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 20) throw Error(fmt::format("meta-model fit needs at least 20 samples, got {}", samples.size()));

  bool one_heading = true;
  for (const auto& s : samples) {
    const auto& f = samples.front().state;
    if (s.state.dm != f.dm || s.state.wdir != f.wdir || s.state.cdir != f.cdir) one_heading = false;
  }
  if (one_heading) {
    throw Error(
        "rank-deficient design matrix in quasi-static stage: all samples share a single heading, "
        "alpha_h, alpha_w, alpha_c are not identifiable");
  }

  MetaModelParams p;
  p.pretension = pretension;
  p.quantile_level = quantile_level;

  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    x(i, 0) = s.state.hs * s.state.hs * heading_factor(s.state.dm);
    x(i, 1) = s.state.ws * s.state.ws * heading_factor(s.state.wdir);
    x(i, 2) = s.state.cs * s.state.cs * heading_factor(s.state.cdir);
    y(i) = s.t_qs;
  }
  const auto qs = solve_stage(x, y, {"alpha_h", "alpha_w", "alpha_c"}, "quasi-static");
  p.alpha_h = qs(0);
  p.alpha_w = qs(1);
  p.alpha_c = qs(2);

  Eigen::MatrixXd xl(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    xl(i, 0) = s.state.hs * s.state.hs;
    xl(i, 1) = signed_square(s.t_qs);
    y(i) = s.sigma_lf;
  }
  const auto lf = solve_stage(xl, y, {"a_lf", "b_lf"}, "low-frequency");
  p.a_lf = lf(0);
  p.b_lf = lf(1);

  Eigen::MatrixXd xh(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    xh(i, 0) = s.state.hs;
    xh(i, 1) = s.state.hs * s.state.hs * s.state.hs;
    xh(i, 2) = signed_square(s.t_qs);
    xh(i, 3) = s.sigma_lf * s.sigma_lf;
    y(i) = s.sigma_hf;
  }
  const auto hf = solve_stage(xh, y, {"a_hf", "b_hf", "c_hf", "d_hf"}, "high-frequency");
  p.a_hf = hf(0);
  p.b_hf = hf(1);
  p.c_hf = hf(2);
  p.d_hf = hf(3);

  std::vector<double> nl, nh;
  for (const auto& s : samples) {
    nl.push_back(s.normalized_max_lf);
    nh.push_back(s.normalized_max_hf);
  }
  p.gumbel_lf = fit_gumbel(nl);
  p.gumbel_hf = fit_gumbel(nh);
  p.validate();
  return p;
}

std::vector<TensionDecomposition> evaluate_batch(const Dataset& data, const MetaModelParams& params,
                                                 FloorCounter* floors) {
  params.validate();
  std::vector<TensionDecomposition> out;
  out.reserve(data.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : data.records()) {
    const bool complete = std::isfinite(r.hs) && std::isfinite(r.ws) && std::isfinite(r.cs) && std::isfinite(r.dm) &&
                          std::isfinite(r.wdir) && std::isfinite(r.cdir);
    out.push_back(complete ? max_tension(params, r, floors) : TensionDecomposition{nan, nan, nan, nan});
  }
  return out;
}

void write_batch_csv(const Dataset& data, std::span<const TensionDecomposition> rows, std::ostream& out) {
  if (rows.size() != data.size()) throw Error("batch rows do not match the dataset");
  out << "timestamp,t_qs,sigma_lf,sigma_hf,t_max\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string{} : fmt::format("{}", v); };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << format_timestamp(data.records()[i].timestamp) << ',' << cell(rows[i].t_qs) << ',' << cell(rows[i].sigma_lf)
        << ',' << cell(rows[i].sigma_hf) << ',' << cell(rows[i].t_max) << '\n';
  }
}

}  // namespace metocean
