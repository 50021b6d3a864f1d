#include "metocean/synthetic.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/weibull.hpp>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "metocean/error.hpp"
#include "metocean/random.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

template <class F>
auto with_distribution(const MarginSpec& m, F&& f) {
  switch (m.family) {
    case MarginSpec::Family::Weibull: return f(boost::math::weibull_distribution<double>(m.p1, m.p2));
    case MarginSpec::Family::Lognormal: return f(boost::math::lognormal_distribution<double>(m.p1, m.p2));
    case MarginSpec::Family::Gamma: return f(boost::math::gamma_distribution<double>(m.p1, m.p2));
  }
  throw Error("unknown margin family");
}

MarginSpec::Family parse_family(const std::string& s) {
  if (s == "weibull") return MarginSpec::Family::Weibull;
  if (s == "lognormal") return MarginSpec::Family::Lognormal;
  if (s == "gamma") return MarginSpec::Family::Gamma;
  throw Error(fmt::format("unknown margin family '{}'", s));
}

MarginSpec margin_from_json(const nlohmann::json& j) {
  MarginSpec m;
  m.family = parse_family(j.at("family").get<std::string>());
  if (m.family == MarginSpec::Family::Lognormal) {
    m.p1 = j.at("meanlog").get<double>();
    m.p2 = j.at("sdlog").get<double>();
  } else {
    m.p1 = j.at("shape").get<double>();
    m.p2 = j.at("scale").get<double>();
  }
  m.location = j.value("location", 0.0);
  return m;
}

nlohmann::json margin_to_json(const MarginSpec& m) {
  switch (m.family) {
    case MarginSpec::Family::Weibull:
      return {{"family", "weibull"}, {"shape", m.p1}, {"scale", m.p2}, {"location", m.location}};
    case MarginSpec::Family::Lognormal:
      return {{"family", "lognormal"}, {"meanlog", m.p1}, {"sdlog", m.p2}, {"location", m.location}};
    case MarginSpec::Family::Gamma:
      return {{"family", "gamma"}, {"shape", m.p1}, {"scale", m.p2}, {"location", m.location}};
  }
  return {};
}

std::string copula_name(SyntheticCopula c) {
  switch (c) {
    case SyntheticCopula::Independence: return "independence";
    case SyntheticCopula::Perfect: return "perfect";
    case SyntheticCopula::Gaussian: return "gaussian";
    case SyntheticCopula::Logistic: return "logistic";
  }
  return "?";
}

}  // namespace

double MarginSpec::cdf(double x) const {
  if (x <= location) return 0.0;
  return with_distribution(*this, [&](const auto& d) { return boost::math::cdf(d, x - location); });
}

double MarginSpec::quantile(double p) const {
  return location + with_distribution(*this, [&](const auto& d) { return boost::math::quantile(d, p); });
}

void MarginSpec::validate(const std::string& name) const {
  const bool scale_ok = family == Family::Lognormal ? (std::isfinite(p1) && p2 > 0.0) : (p1 > 0.0 && p2 > 0.0);
  if (!scale_ok) throw Error(fmt::format("invalid synthesis margin for {}: non-positive shape or scale", name));
  if (location < 0.0) throw Error(fmt::format("invalid synthesis margin for {}: negative location", name));
}

void SynthesisConfig::validate() const {
  if (!(years > 0.0)) throw Error("synthesis span must be positive");
  if (time_step.count() <= 0) throw Error("synthesis time step must be positive");
  hs.validate("hs");
  ws.validate("ws");
  cs.validate("cs");
  if (autocorrelation_hours < 0.0) throw Error("autocorrelation length must be non-negative");
  if (copula == SyntheticCopula::Logistic && !(logistic_alpha > 0.0 && logistic_alpha <= 1.0)) {
    throw Error("logistic alpha must lie in (0, 1]");
  }
  if (copula == SyntheticCopula::Gaussian) {
    if (!correlation.isApprox(correlation.transpose(), 1e-12)) throw Error("correlation matrix not symmetric");
    for (int i = 0; i < 3; ++i) {
      if (std::abs(correlation(i, i) - 1.0) > 1e-12) throw Error("correlation matrix needs a unit diagonal");
    }
    Eigen::LLT<Eigen::Matrix3d> llt(correlation);
    if (llt.info() != Eigen::Success) throw Error("correlation matrix not positive definite");
  }
}

std::size_t SynthesisConfig::record_count() const {
  const double seconds = years * 365.0 * 86400.0;
  return static_cast<std::size_t>(std::llround(seconds / static_cast<double>(time_step.count())));
}

SynthesisConfig SynthesisConfig::from_json(const nlohmann::json& j) {
  SynthesisConfig c;
  if (j.contains("start")) c.start = parse_timestamp(j.at("start").get<std::string>());
  c.years = j.value("years", c.years);
  if (j.contains("time_step_hours")) {
    c.time_step = std::chrono::seconds{std::llround(j.at("time_step_hours").get<double>() * 3600.0)};
  }
  if (j.contains("margins")) {
    const auto& m = j.at("margins");
    if (m.contains("hs")) c.hs = margin_from_json(m.at("hs"));
    if (m.contains("ws")) c.ws = margin_from_json(m.at("ws"));
    if (m.contains("cs")) c.cs = margin_from_json(m.at("cs"));
  }
  if (j.contains("directions")) {
    const auto& d = j.at("directions");
    auto read = [&](const char* key, DirectionSpec& out) {
      if (!d.contains(key)) return;
      out.mean_deg = d.at(key).value("mean_deg", out.mean_deg);
      out.spread_deg = d.at(key).value("spread_deg", out.spread_deg);
    };
    read("dm", c.dm);
    read("wdir", c.wdir);
    read("cdir", c.cdir);
  }
  if (j.contains("copula")) {
    const auto& cj = j.at("copula");
    const auto type = cj.at("type").get<std::string>();
    if (type == "independence") {
      c.copula = SyntheticCopula::Independence;
    } else if (type == "perfect") {
      c.copula = SyntheticCopula::Perfect;
    } else if (type == "gaussian" || type == "nataf") {
      c.copula = SyntheticCopula::Gaussian;
      const auto rows = cj.at("correlation").get<std::vector<std::vector<double>>>();
      if (rows.size() != 3) throw Error("correlation must be 3x3 (hs, ws, cs)");
      for (int r = 0; r < 3; ++r) {
        if (rows[static_cast<std::size_t>(r)].size() != 3) throw Error("correlation must be 3x3 (hs, ws, cs)");
        for (int k = 0; k < 3; ++k) c.correlation(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
      }
    } else if (type == "logistic") {
      c.copula = SyntheticCopula::Logistic;
      c.logistic_alpha = cj.at("alpha").get<double>();
    } else {
      throw Error(fmt::format("unsupported synthesis copula '{}'", type));
    }
  }
  c.autocorrelation_hours = j.value("autocorrelation_hours", c.autocorrelation_hours);
  c.validate();
  return c;
}

nlohmann::json SynthesisConfig::to_json() const {
  nlohmann::json j;
  j["start"] = format_timestamp(start);
  j["years"] = years;
  j["time_step_hours"] = static_cast<double>(time_step.count()) / 3600.0;
  j["margins"] = {{"hs", margin_to_json(hs)}, {"ws", margin_to_json(ws)}, {"cs", margin_to_json(cs)}};
  auto dir = [](const DirectionSpec& d) { return nlohmann::json{{"mean_deg", d.mean_deg}, {"spread_deg", d.spread_deg}}; };
  j["directions"] = {{"dm", dir(dm)}, {"wdir", dir(wdir)}, {"cdir", dir(cdir)}};
  nlohmann::json cj{{"type", copula_name(copula)}};
  if (copula == SyntheticCopula::Gaussian) {
    std::vector<std::vector<double>> rows(3, std::vector<double>(3));
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] = correlation(r, k);
    cj["correlation"] = rows;
  }
  if (copula == SyntheticCopula::Logistic) cj["alpha"] = logistic_alpha;
  j["copula"] = cj;
  j["autocorrelation_hours"] = autocorrelation_hours;
  return j;
}

Dataset generate_synthetic_dataset(const SynthesisConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.record_count();
  if (n == 0) throw Error("synthesis span shorter than one time step");

  Rng copula_rng(derive_seed(seed, "synthetic/copula"));
  Rng direction_rng(derive_seed(seed, "synthetic/directions"));

  const double step_hours = static_cast<double>(config.time_step.count()) / 3600.0;
  const double phi = config.autocorrelation_hours > 0.0 ? std::exp(-step_hours / config.autocorrelation_hours) : 0.0;
  const double innovation = std::sqrt(1.0 - phi * phi);
  const Eigen::Matrix3d chol = config.copula == SyntheticCopula::Gaussian
                                   ? Eigen::Matrix3d(config.correlation.llt().matrixL())
                                   : Eigen::Matrix3d::Identity();

  auto draw_scores = [&]() -> Eigen::Vector3d {
    Eigen::Vector3d g;
    switch (config.copula) {
      case SyntheticCopula::Independence:
        for (int i = 0; i < 3; ++i) g[i] = standard_normal(copula_rng);
        return g;
      case SyntheticCopula::Perfect:
        g.setConstant(standard_normal(copula_rng));
        return g;
      case SyntheticCopula::Gaussian:
        for (int i = 0; i < 3; ++i) g[i] = standard_normal(copula_rng);
        return chol * g;
      case SyntheticCopula::Logistic: {
        const double s = positive_stable(copula_rng, config.logistic_alpha);
        for (int i = 0; i < 3; ++i) {
          const double z = std::pow(s / standard_exponential(copula_rng), config.logistic_alpha);
          const double u = std::clamp(std::exp(-1.0 / z), 1e-300, 1.0 - 1e-16);
          g[i] = stats::normal_quantile(u);
        }
        return g;
      }
    }
    return g;
  };

  auto draw_direction = [&](const DirectionSpec& d) {
    return normalize_degrees(d.mean_deg + d.spread_deg * (2.0 * uniform01(direction_rng) - 1.0));
  };

  std::vector<SeaStateRecord> records;
  records.reserve(n);
  Eigen::Vector3d state = draw_scores();
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) state = phi * state + innovation * draw_scores();
    SeaStateRecord r;
    r.timestamp = config.start + config.time_step * static_cast<long long>(t);
    auto unit = [](double score) { return std::clamp(stats::normal_cdf(score), 1e-300, 1.0 - 1e-16); };
    r.hs = config.hs.quantile(unit(state[0]));
    r.ws = config.ws.quantile(unit(state[1]));
    r.cs = config.cs.quantile(unit(state[2]));
    r.tp = 3.0 + 4.0 * std::sqrt(r.hs);
    r.dm = draw_direction(config.dm);
    r.dp = r.dm;
    r.wdir = draw_direction(config.wdir);
    r.cdir = draw_direction(config.cdir);
    records.push_back(r);
  }
  return Dataset(std::move(records), config.time_step, {kAllFields.begin(), kAllFields.end()});
}

}  // namespace metocean
