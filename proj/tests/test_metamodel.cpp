#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "metocean/error.hpp"
#include "metocean/metamodel.hpp"
#include "metocean/random.hpp"

using namespace metocean;

namespace {

MetaModelParams zero_params() {
  MetaModelParams p;
  p.gumbel_lf = {0.0, 1.0};
  p.gumbel_hf = {0.0, 1.0};
  return p;
}

SeaStateRecord state(double hs, double dm, double ws = 0.0, double wdir = 45.0, double cs = 0.0, double cdir = 45.0) {
  SeaStateRecord s;
  s.hs = hs;
  s.dm = dm;
  s.ws = ws;
  s.wdir = wdir;
  s.cs = cs;
  s.cdir = cdir;
  return s;
}

// Calibration storms generated from known coefficients. Headings lie in the
// first quadrant so every raw standard deviation is positive and no flooring
// interferes with the regression.
std::vector<MetaModelSample> synthetic_samples(const MetaModelParams& p, std::size_t n, double noise,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MetaModelSample> out;
  auto jitter = [&](double v) { return v * (1.0 + noise * standard_normal(rng)); };
  for (std::size_t i = 0; i < n; ++i) {
    MetaModelSample m;
    m.state = state(1.0 + 9.0 * uniform01(rng), 90.0 * uniform01(rng), 2.0 + 28.0 * uniform01(rng),
                    90.0 * uniform01(rng), 0.2 + 1.3 * uniform01(rng), 90.0 * uniform01(rng));
    const auto d = max_tension(p, m.state);
    m.t_qs = jitter(d.t_qs);
    m.sigma_lf = jitter(d.sigma_lf);
    m.sigma_hf = jitter(d.sigma_hf);
    m.normalized_max_lf = gumbel_quantile(p.gumbel_lf, uniform01(rng));
    m.normalized_max_hf = gumbel_quantile(p.gumbel_hf, uniform01(rng));
    out.push_back(m);
  }
  return out;
}

std::vector<double> coefficients(const MetaModelParams& p) {
  return {p.alpha_h, p.alpha_w, p.alpha_c, p.a_lf, p.b_lf, p.a_hf, p.b_hf, p.c_hf, p.d_hf};
}

}  // namespace

TEST_SUITE("metamodel") {
  TEST_CASE("quasi-static tension examples") {
    auto p = zero_params();
    p.alpha_h = 1.0;
    CHECK(quasi_static(p, state(2.0, 45.0)) == doctest::Approx(4.0 * std::numbers::sqrt2).epsilon(1e-12));
    CHECK(quasi_static(p, state(2.0, 225.0)) == doctest::Approx(-4.0 * std::numbers::sqrt2).epsilon(1e-12));
    CHECK(quasi_static(p, state(0.0, 45.0)) == 0.0);
  }

  TEST_CASE("low-frequency standard deviation and its floor") {
    auto p = zero_params();
    p.a_lf = 1.0;
    CHECK(sigma_lf(p, 3.0, 0.0) == 9.0);
    CHECK(sigma_lf(p, 0.0, 0.0) == 0.0);
    auto q = zero_params();
    q.b_lf = 1.0;
    FloorCounter floors;
    CHECK(sigma_lf(q, 0.0, -2.0, &floors) == 0.0);
    CHECK(floors.lf == 1);
    CHECK(floors.hf == 0);
  }

  TEST_CASE("high-frequency standard deviation examples") {
    auto a = zero_params();
    a.a_hf = 2.0;
    CHECK(sigma_hf(a, 1.5, 0.0, 0.0) == doctest::Approx(3.0));
    auto b = zero_params();
    b.b_hf = 1.0;
    CHECK(sigma_hf(b, 2.0, 0.0, 0.0) == doctest::Approx(8.0));
    auto d = zero_params();
    d.d_hf = 1.0;
    CHECK(sigma_hf(d, 0.0, 0.0, 3.0) == doctest::Approx(9.0));
    auto c = zero_params();
    c.c_hf = 1.0;
    FloorCounter floors;
    CHECK(sigma_hf(c, 0.0, -1.0, 0.0, &floors) == 0.0);
    CHECK(floors.hf == 1);
  }

  TEST_CASE("maximum tension examples") {
    auto p = zero_params();
    p.pretension = 2000.0;
    CHECK(max_tension(p, state(5.0, 45.0, 20.0, 45.0, 1.0, 45.0)).t_max == 2000.0);

    // sigma_LF = 10 from a_LF Hs^2 with Hs = sqrt(10), everything else zero.
    auto q = zero_params();
    q.a_lf = 1.0;
    const auto d = max_tension(q, state(std::sqrt(10.0), 45.0));
    CHECK(d.sigma_lf == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(d.sigma_hf == 0.0);
    CHECK(d.t_max == doctest::Approx(12.459).epsilon(1e-4));
  }

  TEST_CASE("tension increases strictly with Hs at 45 degrees") {
    const auto p = MetaModelParams::synthetic_defaults();
    double prev = -1e300;
    for (double hs = 0.0; hs <= 20.0; hs += 0.25) {
      const double t = max_tension(p, state(hs, 45.0, 15.0, 45.0, 0.5, 45.0)).t_max;
      CHECK(t > prev);
      prev = t;
    }
  }

  TEST_CASE("decomposition identity") {
    const auto p = MetaModelParams::synthetic_defaults();
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const auto s = state(15.0 * uniform01(rng), 360.0 * uniform01(rng), 35.0 * uniform01(rng),
                           360.0 * uniform01(rng), 2.0 * uniform01(rng), 360.0 * uniform01(rng));
      const auto d = max_tension(p, s);
      const double rlf = gumbel_quantile(p.gumbel_lf, p.quantile_level);
      const double rhf = gumbel_quantile(p.gumbel_hf, p.quantile_level);
      const double rebuilt = p.pretension + d.t_qs + rlf * d.sigma_lf + rhf * d.sigma_hf;
      CHECK(std::abs(rebuilt - d.t_max) <= 1e-12 * std::abs(d.t_max));
      CHECK(d.sigma_lf >= 0.0);
      CHECK(d.sigma_hf >= 0.0);
    }
  }

  TEST_CASE("quasi-static tension is linear in the coefficients and symmetric about 45 degrees") {
    const auto p = MetaModelParams::synthetic_defaults();
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
      const auto s = state(10.0 * uniform01(rng), 360.0 * uniform01(rng), 30.0 * uniform01(rng),
                           360.0 * uniform01(rng), 1.5 * uniform01(rng), 360.0 * uniform01(rng));
      const double c = -3.0 + 6.0 * uniform01(rng);
      auto scaled = p;
      scaled.alpha_h *= c;
      scaled.alpha_w *= c;
      scaled.alpha_c *= c;
      const double base = quasi_static(p, s);
      CHECK(quasi_static(scaled, s) == doctest::Approx(c * base).epsilon(1e-12));

      auto mirrored = s;
      mirrored.dm = 90.0 - s.dm;
      CHECK(std::abs(quasi_static(p, mirrored) - base) <= 1e-9 * std::max(1.0, std::abs(base)));
      mirrored = s;
      mirrored.cdir = 90.0 - s.cdir;
      CHECK(std::abs(quasi_static(p, mirrored) - base) <= 1e-9 * std::max(1.0, std::abs(base)));
    }
  }

  TEST_CASE("noiseless calibration recovers the coefficients") {
    const auto truth = MetaModelParams::synthetic_defaults();
    const auto samples = synthetic_samples(truth, 200, 0.0, 5);
    const auto fit = fit_metamodel(samples, truth.pretension);
    const auto a = coefficients(fit), b = coefficients(truth);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-8 * std::max(1.0, std::abs(b[k])));
    CHECK(fit.pretension == truth.pretension);
  }

  TEST_CASE("calibration with 5% noise on 500 storms is within 10%") {
    const auto truth = MetaModelParams::synthetic_defaults();
    const auto samples = synthetic_samples(truth, 500, 0.05, 6);
    const auto fit = fit_metamodel(samples, truth.pretension);
    const auto a = coefficients(fit), b = coefficients(truth);
    const char* names[] = {"alpha_h", "alpha_w", "alpha_c", "a_lf", "b_lf", "a_hf", "b_hf", "c_hf", "d_hf"};
    for (std::size_t k = 0; k < a.size(); ++k) {
      INFO(std::string(names[k]), " fitted ", a[k], " true ", b[k]);
      CHECK(std::abs(a[k] - b[k]) <= 0.10 * std::abs(b[k]));
    }
    CHECK(fit.gumbel_lf.mode == doctest::Approx(truth.gumbel_lf.mode).epsilon(0.05));
    CHECK(fit.gumbel_hf.scale == doctest::Approx(truth.gumbel_hf.scale).epsilon(0.15));
  }

  TEST_CASE("stage residuals are orthogonal to their regressors") {
    const auto truth = MetaModelParams::synthetic_defaults();
    const auto samples = synthetic_samples(truth, 300, 0.05, 7);
    const auto fit = fit_metamodel(samples, truth.pretension);
    auto heading = [](double deg) {
      const double r = deg * std::numbers::pi / 180.0;
      return std::cos(r) + std::sin(r);
    };
    double dot[3] = {0, 0, 0}, scale[3] = {0, 0, 0};
    double dot_lf[2] = {0, 0}, scale_lf[2] = {0, 0};
    for (const auto& s : samples) {
      const double x[3] = {s.state.hs * s.state.hs * heading(s.state.dm), s.state.ws * s.state.ws * heading(s.state.wdir),
                           s.state.cs * s.state.cs * heading(s.state.cdir)};
      const double r = s.t_qs - quasi_static(fit, s.state);
      for (int k = 0; k < 3; ++k) {
        dot[k] += x[k] * r;
        scale[k] += std::abs(x[k] * s.t_qs);
      }
      const double xl[2] = {s.state.hs * s.state.hs, s.t_qs * std::abs(s.t_qs)};
      const double rl = s.sigma_lf - (fit.a_lf * xl[0] + fit.b_lf * xl[1]);
      for (int k = 0; k < 2; ++k) {
        dot_lf[k] += xl[k] * rl;
        scale_lf[k] += std::abs(xl[k] * s.sigma_lf);
      }
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(dot[k]) <= 1e-8 * scale[k]);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(dot_lf[k]) <= 1e-8 * scale_lf[k]);
  }

  TEST_CASE("calibration from a single heading is rank deficient") {
    auto samples = synthetic_samples(MetaModelParams::synthetic_defaults(), 50, 0.0, 8);
    for (auto& s : samples) s.state.dm = s.state.wdir = s.state.cdir = 225.0;
    CHECK_THROWS_WITH_AS(fit_metamodel(samples, 2000.0), doctest::Contains("rank-deficient"), Error);
    CHECK_THROWS_AS(fit_metamodel(std::span(samples).first(10), 2000.0), Error);
  }

  TEST_CASE("batch evaluation marks incomplete records") {
    const auto d = testing::hourly_dataset({2.0, std::nan(""), 4.0}, {10.0, 10.0, 10.0}, {0.5, 0.5, 0.5});
    const auto rows = evaluate_batch(d, MetaModelParams::synthetic_defaults());
    REQUIRE(rows.size() == 3);
    CHECK(std::isfinite(rows[0].t_max));
    CHECK(std::isnan(rows[1].t_max));
    CHECK(rows[2].t_max > rows[0].t_max);
  }

  TEST_CASE("parameters survive a JSON round trip") {
    const auto p = MetaModelParams::synthetic_defaults();
    const nlohmann::json j = p;
    const auto back = j.get<MetaModelParams>();
    CHECK(coefficients(back) == coefficients(p));
    CHECK(back.gumbel_hf.scale == p.gumbel_hf.scale);
    CHECK(back.quantile_level == p.quantile_level);
    auto bad = j;
    bad["quantile_level"] = 1.5;
    CHECK_THROWS_AS(bad.get<MetaModelParams>(), std::exception);
  }
}
