#include "metocean/uv_evt.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <map>

#include "metocean/error.hpp"
#include "metocean/optimize.hpp"
#include "metocean/random.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMinExceedances = 10;

bool is_zero_shape(double xi) { return std::abs(xi) < kShapeZero; }

void check_excesses(std::span<const double> excesses) {
  if (excesses.size() < kMinExceedances) {
    throw Error(fmt::format("GPD fit needs at least {} exceedances, got {}", kMinExceedances, excesses.size()));
  }
  double lo = kInf, hi = -kInf;
  for (double y : excesses) {
    if (!(y > 0.0) || !std::isfinite(y)) throw Error("GPD fit needs strictly positive finite excesses");
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  if (hi - lo <= 1e-12 * hi) throw Error("degenerate likelihood: all excesses identical");
}

double hessian_step(double v) { return 1e-5 * std::max(1e-3, std::abs(v)); }

/// Newton iterations on (scale, shape) using the analytic gradient and a
/// central-difference Hessian. Returns true when the gradient norm drops
/// below `tolerance`.
bool newton_polish(std::span<const double> y, double& scale, double& shape, double tolerance) {
  for (int it = 0; it < 60; ++it) {
    const auto g = gpd_loglik_gradient(y, scale, shape);
    if (std::hypot(g[0], g[1]) < tolerance) return true;
    const double hs = hessian_step(scale);
    const double hx = hessian_step(shape);
    const auto gsp = gpd_loglik_gradient(y, scale + hs, shape);
    const auto gsm = gpd_loglik_gradient(y, scale - hs, shape);
    const auto gxp = gpd_loglik_gradient(y, scale, shape + hx);
    const auto gxm = gpd_loglik_gradient(y, scale, shape - hx);
    const double h00 = (gsp[0] - gsm[0]) / (2 * hs);
    const double h11 = (gxp[1] - gxm[1]) / (2 * hx);
    const double h01 = 0.5 * ((gsp[1] - gsm[1]) / (2 * hs) + (gxp[0] - gxm[0]) / (2 * hx));
    const double det = h00 * h11 - h01 * h01;
    if (!std::isfinite(det) || det <= 0.0 || h00 >= 0.0) return false;  // not locally concave
    double ds = -(h11 * g[0] - h01 * g[1]) / det;
    double dx = -(-h01 * g[0] + h00 * g[1]) / det;
    const double base = gpd_loglik(y, scale, shape);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const double s_new = scale + t * ds;
      const double x_new = shape + t * dx;
      if (s_new <= 0.0 || x_new <= -1.0) continue;
      const double v = gpd_loglik(y, s_new, x_new);
      if (v >= base - 1e-12 * std::abs(base)) {
        scale = s_new;
        shape = x_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  const auto g = gpd_loglik_gradient(y, scale, shape);
  return std::hypot(g[0], g[1]) < tolerance;
}

/// Maximize over log(scale) for a fixed shape.
double profile_scale(std::span<const double> y, double shape, double mean_excess) {
  const double ymax = *std::max_element(y.begin(), y.end());
  double lo = std::log(mean_excess) - 8.0;
  if (shape < 0.0) lo = std::max(lo, std::log(-shape * ymax) + 1e-9);
  const double hi = std::log(mean_excess) + 8.0;
  auto r = optimize::brent_minimize([&](double ls) { return -gpd_loglik(y, std::exp(ls), shape); }, lo, hi);
  return std::exp(r.x[0]);
}

Interval percentile_interval(std::vector<double> values, double level) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double a = 0.5 * (1.0 - level);
  return {stats::quantile_linear(values, a), stats::quantile_linear(values, 1.0 - a)};
}

}  // namespace

void GpdFit::validate() const {
  if (!(scale > 0.0)) throw Error("GPD scale must be positive");
  if (!(rate > 0.0)) throw Error("exceedance rate must be positive");
  if (!std::isfinite(shape) || !std::isfinite(threshold)) throw Error("GPD parameters must be finite");
}

double GpdFit::upper_endpoint() const {
  return (shape < 0.0 && !is_zero_shape(shape)) ? threshold - scale / shape : kInf;
}

void to_json(nlohmann::json& j, const GpdFit& f) {
  j = nlohmann::json{{"threshold", f.threshold}, {"scale", f.scale},
                     {"shape", f.shape},         {"rate", f.rate},
                     {"n_exceedances", f.n_exceedances}, {"loglik", f.loglik}};
}

void from_json(const nlohmann::json& j, GpdFit& f) {
  f.threshold = j.at("threshold").get<double>();
  f.scale = j.at("scale").get<double>();
  f.shape = j.at("shape").get<double>();
  f.rate = j.at("rate").get<double>();
  f.n_exceedances = j.value("n_exceedances", std::size_t{0});
  f.loglik = j.value("loglik", 0.0);
  f.validate();
}

double gpd_cdf(double x, const GpdFit& fit) {
  if (x < fit.threshold) throw Error("gpd_cdf: x below the GPD threshold");
  const double z = (x - fit.threshold) / fit.scale;
  if (is_zero_shape(fit.shape)) return -std::expm1(-z);
  const double arg = fit.shape * z;
  if (arg <= -1.0) return 1.0;
  return -std::expm1(-std::log1p(arg) / fit.shape);
}

double gpd_quantile(double p, const GpdFit& fit) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("gpd_quantile: probability outside [0, 1)");
  const double l = std::log1p(-p);  // log(1 - p)
  if (is_zero_shape(fit.shape)) return fit.threshold - fit.scale * l;
  return fit.threshold + fit.scale / fit.shape * std::expm1(-fit.shape * l);
}

double gpd_log_density(double excess, double scale, double shape) {
  if (excess < 0.0 || scale <= 0.0) return -kInf;
  const double z = excess / scale;
  if (is_zero_shape(shape)) return -std::log(scale) - z;
  const double arg = shape * z;
  if (arg <= -1.0) return -kInf;
  return -std::log(scale) - (1.0 + 1.0 / shape) * std::log1p(arg);
}

double gpd_loglik(std::span<const double> excesses, double scale, double shape) {
  if (!(scale > 0.0)) return -kInf;
  double ll = 0.0;
  for (double y : excesses) {
    const double v = gpd_log_density(y, scale, shape);
    if (!std::isfinite(v)) return -kInf;
    ll += v;
  }
  return ll;
}

std::array<double, 2> gpd_loglik_gradient(std::span<const double> excesses, double scale, double shape) {
  const auto n = static_cast<double>(excesses.size());
  double sum_y_over_t = 0.0;
  double d_shape = 0.0;
  for (double y : excesses) {
    const double z = y / scale;
    const double t = 1.0 + shape * z;
    sum_y_over_t += y / t;
    if (std::abs(shape) < 1e-5) {
      d_shape += 0.5 * z * z - z + shape * (z * z - 2.0 * z * z * z / 3.0);
    } else {
      d_shape += std::log1p(shape * z) / (shape * shape) - (1.0 + 1.0 / shape) * z / t;
    }
  }
  const double d_scale = -n / scale + (1.0 + shape) / (scale * scale) * sum_y_over_t;
  return {d_scale, d_shape};
}

GpdFit fit_gpd_mle(std::span<const double> excesses, double threshold, double rate) {
  check_excesses(excesses);
  if (!(rate > 0.0)) throw Error("GPD fit needs a positive exceedance rate");
  const double mean_excess = stats::mean(excesses);
  const double ymax = *std::max_element(excesses.begin(), excesses.end());

  auto negll = [&](const std::vector<double>& p) {
    const double shape = p[1];
    if (shape <= -1.0) return kInf;
    return -gpd_loglik(excesses, std::exp(p[0]), shape);
  };
  optimize::NelderMeadOptions opts;
  opts.initial_step = {0.2, 0.1};
  opts.f_tolerance = 1e-14;
  opts.x_tolerance = 1e-11;
  const auto nm = optimize::nelder_mead(negll, {std::log(mean_excess), 0.0}, opts);

  double scale = std::exp(nm.x[0]);
  double shape = nm.x[1];
  constexpr double kGradTol = 1e-7;
  bool ok = nm.converged && newton_polish(excesses, scale, shape, kGradTol);
  if (!ok) {
    // Profile fallback over a bounded shape range.
    auto profile = [&](double xi) { return -gpd_loglik(excesses, profile_scale(excesses, xi, mean_excess), xi); };
    const auto r = optimize::brent_minimize(profile, -0.9, 0.9);
    shape = r.x[0];
    scale = profile_scale(excesses, shape, mean_excess);
    ok = newton_polish(excesses, scale, shape, kGradTol);
    if (!ok) {
      const auto g = gpd_loglik_gradient(excesses, scale, shape);
      // Accept a converged profile optimum pinned at the shape bounds.
      if (!(std::abs(g[0]) < 1e-6 * static_cast<double>(excesses.size()) && std::isfinite(g[1]))) {
        throw Error(fmt::format("GPD optimizer did not converge (scale={}, shape={}, grad=({}, {}), n={}, max={})",
                                scale, shape, g[0], g[1], excesses.size(), ymax));
      }
    }
  }

  GpdFit fit;
  fit.threshold = threshold;
  fit.scale = scale;
  fit.shape = shape;
  fit.rate = rate;
  fit.n_exceedances = excesses.size();
  fit.loglik = gpd_loglik(excesses, scale, shape);
  fit.validate();
  return fit;
}

GpdFit fit_pot(std::span<const double> maxima, double threshold, double years) {
  if (!(years > 0.0)) throw Error("fit_pot: span in years must be positive");
  std::vector<double> excesses;
  for (double x : maxima) {
    if (x > threshold) excesses.push_back(x - threshold);
  }
  return fit_gpd_mle(excesses, threshold, static_cast<double>(excesses.size()) / years);
}

double return_level(const GpdFit& fit, double return_period) {
  fit.validate();
  if (!(return_period > 0.0)) throw Error("return period must be positive");
  const double m = fit.rate * return_period;
  if (m <= 1.0) throw Error("return period below threshold rate");
  const double lm = std::log(m);
  if (is_zero_shape(fit.shape)) return fit.threshold + fit.scale * lm;
  return fit.threshold + fit.scale / fit.shape * std::expm1(fit.shape * lm);
}

std::vector<ReturnLevelPoint> return_level_curve(std::span<const double> maxima, const GpdFit& fit,
                                                 std::span<const double> periods, const BootstrapConfig& boot) {
  fit.validate();
  const double years = static_cast<double>(fit.n_exceedances) / fit.rate;
  std::vector<std::vector<double>> levels(periods.size());
  std::vector<double> resample(maxima.size());
  for (std::size_t b = 0; b < boot.resamples; ++b) {
    Rng rng(derive_seed(boot.seed, static_cast<std::uint64_t>(b)));
    for (auto& v : resample) v = maxima[uniform_index(rng, maxima.size())];
    try {
      const auto refit = fit_pot(resample, fit.threshold, years);
      for (std::size_t k = 0; k < periods.size(); ++k) {
        if (refit.rate * periods[k] > 1.0) levels[k].push_back(return_level(refit, periods[k]));
      }
    } catch (const Error&) {
      // Degenerate resample; it simply does not contribute.
    }
  }
  std::vector<ReturnLevelPoint> out;
  for (std::size_t k = 0; k < periods.size(); ++k) {
    const auto ci = percentile_interval(levels[k], boot.level);
    out.push_back({periods[k], return_level(fit, periods[k]), ci.low, ci.high});
  }
  return out;
}

nlohmann::json return_level_curve_json(const std::vector<ReturnLevelPoint>& curve) {
  auto arr = nlohmann::json::array();
  for (const auto& p : curve) {
    arr.push_back({{"T", p.period}, {"level", p.level}, {"ci_low", p.ci_low}, {"ci_high", p.ci_high}});
  }
  return arr;
}

std::vector<ThresholdDiagnostic> threshold_diagnostics(const ClusterMaxima& series, std::size_t variable,
                                                       std::span<const double> thresholds,
                                                       const BootstrapConfig& boot) {
  if (variable >= series.dim()) throw Error("threshold_diagnostics: variable index out of range");
  const auto x = series.column(variable);
  if (x.empty()) throw Error("threshold_diagnostics: no cluster maxima");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const auto times = series.peak_times();

  const auto first_year = static_cast<int>(std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(series.span_start)}.year());
  const auto last_year = static_cast<int>(std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(series.span_end)}.year());

  std::vector<ThresholdDiagnostic> out;
  for (std::size_t g = 0; g < thresholds.size(); ++g) {
    const double u = thresholds[g];
    if (u < *mn || u > *mx) throw Error(fmt::format("threshold {} outside the observed range", u));
    ThresholdDiagnostic row;
    row.threshold = u;
    std::vector<double> excesses;
    std::map<int, double> per_year;
    for (int y = first_year; y <= last_year; ++y) per_year[y] = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] <= u) continue;
      excesses.push_back(x[i] - u);
      const int y = static_cast<int>(std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(times[i])}.year());
      per_year[y] += 1.0;
    }
    row.n_exceedances = excesses.size();
    if (!excesses.empty()) row.mean_excess = stats::mean(excesses);
    std::vector<double> counts;
    for (const auto& [y, c] : per_year) counts.push_back(c);
    if (counts.size() >= 2 && stats::mean(counts) > 0.0) row.dispersion_index = stats::variance(counts) / stats::mean(counts);

    if (excesses.size() >= kMinExceedances) {
      try {
        const auto fit = fit_gpd_mle(excesses, u, static_cast<double>(excesses.size()) / series.years);
        row.available = true;
        row.shape = fit.shape;
        row.modified_scale = fit.scale - fit.shape * u;
        std::vector<double> mscale, shape;
        std::vector<double> resample(excesses.size());
        for (std::size_t b = 0; b < boot.resamples; ++b) {
          Rng rng(derive_seed(derive_seed(boot.seed, static_cast<std::uint64_t>(g)), static_cast<std::uint64_t>(b)));
          for (auto& v : resample) v = excesses[uniform_index(rng, excesses.size())];
          try {
            const auto bf = fit_gpd_mle(resample, u, fit.rate);
            mscale.push_back(bf.scale - bf.shape * u);
            shape.push_back(bf.shape);
          } catch (const Error&) {
          }
        }
        row.modified_scale_ci = percentile_interval(mscale, boot.level);
        row.shape_ci = percentile_interval(shape, boot.level);
      } catch (const Error&) {
        row.available = false;
      }
    }
    out.push_back(row);
  }
  return out;
}

nlohmann::json threshold_diagnostics_json(const std::vector<ThresholdDiagnostic>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"threshold", r.threshold},
                     {"available", r.available},
                     {"n_exceedances", r.n_exceedances},
                     {"mean_excess", r.mean_excess},
                     {"dispersion_index", r.dispersion_index}};
    if (r.available) {
      j["modified_scale"] = r.modified_scale;
      j["modified_scale_ci"] = {r.modified_scale_ci.low, r.modified_scale_ci.high};
      j["shape"] = r.shape;
      j["shape_ci"] = {r.shape_ci.low, r.shape_ci.high};
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

void GumbelFit::validate() const {
  if (!(scale > 0.0)) throw Error("Gumbel scale must be positive");
  if (!std::isfinite(mode)) throw Error("Gumbel mode must be finite");
}

void to_json(nlohmann::json& j, const GumbelFit& f) { j = nlohmann::json{{"mode", f.mode}, {"scale", f.scale}}; }

void from_json(const nlohmann::json& j, GumbelFit& f) {
  f.mode = j.at("mode").get<double>();
  f.scale = j.at("scale").get<double>();
  f.validate();
}

double gumbel_cdf(double x, const GumbelFit& fit) {
  fit.validate();
  return std::exp(-std::exp(-(x - fit.mode) / fit.scale));
}

double gumbel_quantile(const GumbelFit& fit, double p) {
  fit.validate();
  if (!(p > 0.0 && p < 1.0)) throw Error("gumbel_quantile: probability outside (0, 1)");
  return fit.mode - fit.scale * std::log(-std::log(p));
}

GumbelFit fit_gumbel(std::span<const double> sample) {
  if (sample.size() < 10) throw Error("Gumbel fit needs at least 10 values");
  const double lo = *std::min_element(sample.begin(), sample.end());
  const double sd = std::sqrt(stats::variance(sample));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(lo)))) throw Error("Gumbel fit: constant sample");
  const double xbar = stats::mean(sample);

  // Profile score for the scale: beta - xbar + sum(x w) / sum(w), w = exp(-(x - lo)/beta).
  auto score = [&](double beta) {
    double sw = 0.0, sxw = 0.0;
    for (double x : sample) {
      const double w = std::exp(-(x - lo) / beta);
      sw += w;
      sxw += x * w;
    }
    return beta - xbar + sxw / sw;
  };
  double a = 1e-3 * sd;
  double b = 2.0 * sd;
  for (int k = 0; k < 60 && score(b) < 0.0; ++k) b *= 2.0;
  for (int k = 0; k < 60 && score(a) > 0.0; ++k) a *= 0.5;
  if (!(score(a) <= 0.0 && score(b) >= 0.0)) throw Error("Gumbel fit did not converge (no bracket for scale)");
  const double beta = optimize::find_root(score, a, b, 1e-14 * sd);

  double sw = 0.0;
  for (double x : sample) sw += std::exp(-(x - lo) / beta);
  GumbelFit fit{lo - beta * std::log(sw / static_cast<double>(sample.size())), beta};
  fit.validate();
  return fit;
}

}  // namespace metocean
