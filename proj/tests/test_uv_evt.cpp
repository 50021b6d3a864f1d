#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "metocean/error.hpp"
#include "metocean/random.hpp"
#include "metocean/stats.hpp"
#include "metocean/uv_evt.hpp"

using namespace metocean;

namespace {

GpdFit make_fit(double u, double sigma, double xi, double rate = 1.0) {
  GpdFit f;
  f.threshold = u;
  f.scale = sigma;
  f.shape = xi;
  f.rate = rate;
  return f;
}

std::vector<double> gpd_excesses(double sigma, double xi, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto f = make_fit(0.0, sigma, xi);
  std::vector<double> out(n);
  for (auto& x : out) x = gpd_quantile(uniform01(rng), f);
  return out;
}

ClusterMaxima poisson_events(double rate_per_year, double years, std::uint64_t seed,
                             const std::function<double(Rng&)>& draw) {
  using namespace std::chrono;
  Rng rng(seed);
  ClusterMaxima cm;
  cm.variables = {"x"};
  cm.thresholds = {0.0};
  cm.span_start = sys_seconds{sys_days{year{1990} / 1 / 1}};
  const auto span = seconds{static_cast<long long>(years * 365.25 * 86400.0)};
  cm.span_end = cm.span_start + span;
  cm.years = years;
  double t = 0.0;
  while (true) {
    t += standard_exponential(rng) / rate_per_year;
    if (t >= years) break;
    ClusterEvent e;
    e.peak_time = cm.span_start + seconds{static_cast<long long>(t * 365.25 * 86400.0)};
    e.values = {draw(rng)};
    cm.events.push_back(e);
  }
  return cm;
}

}  // namespace

TEST_SUITE("uv_evt") {
  TEST_CASE("GPD cdf closed forms") {
    CHECK(gpd_cdf(3.0, make_fit(3.0, 2.0, 0.3)) == 0.0);
    CHECK(gpd_cdf(1.0, make_fit(0.0, 1.0, 0.0)) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(gpd_cdf(0.5, make_fit(0.0, 1.0, -1.0)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gpd_cdf(5.0, make_fit(0.0, 1.0, -0.5)) == 1.0);
    CHECK_THROWS_AS(gpd_cdf(-0.1, make_fit(0.0, 1.0, 0.1)), Error);
  }

  TEST_CASE("GPD shape below 1e-9 uses the exponential branch continuously") {
    const auto a = make_fit(0.0, 1.3, 5e-10), b = make_fit(0.0, 1.3, 0.0), c = make_fit(0.0, 1.3, 2e-9);
    for (double x : {0.1, 1.0, 5.0}) {
      CHECK(gpd_cdf(x, a) == gpd_cdf(x, b));
      CHECK(gpd_cdf(x, c) == doctest::Approx(gpd_cdf(x, b)).epsilon(1e-8));
    }
  }

  TEST_CASE("cdf is non-decreasing and the quantile inverts it") {
    for (double xi : {-0.4, -0.16, 0.0, 0.2}) {
      const auto f = make_fit(1.0, 1.5, xi);
      double prev = 0.0;
      for (int k = 0; k <= 400; ++k) {
        const double x = 1.0 + 0.02 * k;
        const double p = gpd_cdf(x, f);
        CHECK(p >= prev);
        prev = p;
        if (p > 0.0 && p < 1.0 - 1e-6) CHECK(std::abs(gpd_quantile(p, f) - x) < 1e-10 * std::max(1.0, x));
      }
    }
  }

  TEST_CASE("MLE recovers GPD(1.59, -0.16) from 1e4 draws") {
    const auto y = gpd_excesses(1.59, -0.16, 10000, 99);
    const auto fit = fit_gpd_mle(y, 0.0, 1.0);
    CHECK(std::abs(fit.scale - 1.59) < 0.05);
    CHECK(std::abs(fit.shape + 0.16) < 0.03);
    CHECK(fit.upper_endpoint() > *std::max_element(y.begin(), y.end()));
    // The maximizer can only improve on the simulating parameters.
    CHECK(fit.loglik >= gpd_loglik(y, 1.59, -0.16));
  }

  TEST_CASE("MLE on exponential data gives a shape near zero") {
    Rng rng(5);
    std::vector<double> y(10000);
    for (auto& v : y) v = standard_exponential(rng);
    CHECK(std::abs(fit_gpd_mle(y, 0.0, 1.0).shape) < 0.03);
  }

  TEST_CASE("first-order condition at the optimum and finite-difference gradient") {
    for (double xi : {-0.3, -0.16, 0.0, 0.15}) {
      const auto y = gpd_excesses(2.0, xi, 3000, 17);
      const auto fit = fit_gpd_mle(y, 0.0, 1.0);
      const auto g = gpd_loglik_gradient(y, fit.scale, fit.shape);
      CHECK(std::hypot(g[0], g[1]) < 1e-6);
      // Central differences at a point away from the optimum.
      const double s = fit.scale * 1.1, k = fit.shape + 0.05;
      const auto ga = gpd_loglik_gradient(y, s, k);
      const double hs = 1e-5 * s, hk = 1e-5;
      const double ds = (gpd_loglik(y, s + hs, k) - gpd_loglik(y, s - hs, k)) / (2 * hs);
      const double dk = (gpd_loglik(y, s, k + hk) - gpd_loglik(y, s, k - hk)) / (2 * hk);
      CHECK(std::abs(ga[0] - ds) <= 1e-4 * std::abs(ds));
      CHECK(std::abs(ga[1] - dk) <= 1e-4 * std::abs(dk));
    }
  }

  TEST_CASE("degenerate and small samples are rejected") {
    std::vector<double> same(50, 2.0);
    CHECK_THROWS_WITH_AS(fit_gpd_mle(same, 0.0, 1.0), "degenerate likelihood: all excesses identical", Error);
    std::vector<double> few{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK_THROWS_WITH_AS(fit_gpd_mle(few, 0.0, 1.0), doctest::Contains("at least 10"), Error);
  }

  TEST_CASE("return level closed forms") {
    CHECK(return_level(make_fit(2.0, 1.0, 0.0, 10.0), 100.0) == doctest::Approx(2.0 + std::log(1000.0)).epsilon(1e-12));
    // Hs row anchor with the back-solved rate.
    CHECK(return_level(make_fit(7.13, 1.59, -0.16, 4.66), 100.0) == doctest::Approx(13.35).epsilon(0.0005));
    const auto f = make_fit(3.0, 1.2, 0.1, 4.0);
    CHECK(return_level(f, 0.25 * (1.0 + 1e-9)) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK_THROWS_WITH_AS(return_level(f, 0.25), "return period below threshold rate", Error);
  }

  TEST_CASE("return level is non-decreasing and bounded for negative shape") {
    const auto f = make_fit(1.0, 2.0, -0.25, 3.0);
    double prev = -1e300;
    for (double t = 0.5; t < 1e6; t *= 1.7) {
      const double r = return_level(f, t);
      CHECK(r >= prev);
      CHECK(r <= f.upper_endpoint());
      prev = r;
    }
  }

  TEST_CASE("return-level curve intervals bracket the estimate and are reproducible") {
    const auto y = gpd_excesses(1.0, 0.05, 200, 3);
    std::vector<double> maxima;
    for (double v : y) maxima.push_back(v + 5.0);
    const auto fit = fit_pot(maxima, 5.0, 20.0);
    const std::vector<double> periods{1, 10, 100};
    BootstrapConfig boot{200, 0.95, 42};
    const auto a = return_level_curve(maxima, fit, periods, boot);
    const auto b = return_level_curve(maxima, fit, periods, boot);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].ci_low <= a[i].level);
      CHECK(a[i].level <= a[i].ci_high);
      CHECK(a[i].ci_low == b[i].ci_low);
    }
    const auto j = return_level_curve_json(a);
    CHECK(j[0].contains("T"));
    CHECK(j[0].contains("ci_high"));
  }

  TEST_CASE("mean excess of exponential data is flat near one") {
    const auto cm = poisson_events(50.0, 100.0, 8, [](Rng& r) { return standard_exponential(r); });
    const std::vector<double> grid{0.01, 0.5, 1.0, 1.5, 2.0};
    const auto rows = threshold_diagnostics(cm, 0, grid, {50, 0.95, 1});
    for (const auto& r : rows) {
      REQUIRE(r.available);
      CHECK(r.mean_excess == doctest::Approx(1.0).epsilon(0.1));
    }
  }

  TEST_CASE("mean excess of GPD data is linear with slope xi/(1-xi)") {
    const double xi = 0.2, sigma = 1.0;
    const auto cm = poisson_events(200.0, 100.0, 9, [&](Rng& r) { return gpd_quantile(uniform01(r), make_fit(0, sigma, xi)); });
    std::vector<double> grid;
    for (int k = 0; k <= 6; ++k) grid.push_back(0.01 + 0.25 * k);
    const auto rows = threshold_diagnostics(cm, 0, grid, {20, 0.95, 1});
    std::vector<double> me;
    for (const auto& r : rows) me.push_back(r.mean_excess);
    const double slope = (me.back() - me.front()) / (grid.back() - grid.front());
    CHECK(slope == doctest::Approx(xi / (1.0 - xi)).epsilon(0.2));
    CHECK(me.front() == doctest::Approx((sigma + xi * 0.01) / (1.0 - xi)).epsilon(0.05));
  }

  TEST_CASE("Poisson-timed events have dispersion index near one") {
    const auto cm = poisson_events(30.0, 200.0, 10, [](Rng& r) { return standard_exponential(r); });
    const std::vector<double> grid{0.01};
    const auto rows = threshold_diagnostics(cm, 0, grid, {10, 0.95, 1});
    CHECK(rows[0].dispersion_index == doctest::Approx(1.0).epsilon(0.25));
  }

  TEST_CASE("thin thresholds are unavailable and grids must be in range") {
    const auto cm = poisson_events(5.0, 10.0, 11, [](Rng& r) { return standard_exponential(r); });
    auto x = cm.column(0);
    std::sort(x.begin(), x.end());
    const std::vector<double> grid{x[x.size() - 3]};
    CHECK_FALSE(threshold_diagnostics(cm, 0, grid, {10, 0.95, 1})[0].available);
    const std::vector<double> outside{x.back() + 1.0};
    CHECK_THROWS_AS(threshold_diagnostics(cm, 0, outside, {10, 0.95, 1}), Error);
  }

  TEST_CASE("Gumbel quantile closed forms") {
    CHECK(gumbel_quantile({0.0, 1.0}, std::exp(-1.0)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(gumbel_quantile({0.0, 1.0}, 0.75) == doctest::Approx(1.2459).epsilon(1e-4));
    CHECK_THROWS_AS(gumbel_quantile({0.0, 1.0}, 1.0), Error);
    CHECK_THROWS_AS(GumbelFit({2.0, 0.0}).validate(), Error);
  }

  TEST_CASE("Gumbel maximum likelihood recovery") {
    Rng rng(12);
    std::vector<double> s(10000);
    for (auto& v : s) v = gumbel_quantile({3.0, 0.5}, uniform01(rng));
    const auto g = fit_gumbel(s);
    CHECK(g.mode >= 2.97);
    CHECK(g.mode <= 3.03);
    CHECK(g.scale >= 0.48);
    CHECK(g.scale <= 0.52);
    CHECK(stats::mean(s) == doctest::Approx(g.mode + std::numbers::egamma * g.scale).epsilon(0.005));
    CHECK_THROWS_AS(fit_gumbel(std::vector<double>(20, 1.0)), Error);
  }
}
