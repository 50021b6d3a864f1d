#include "metocean/optimize.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "metocean/error.hpp"

namespace metocean::optimize {

namespace {

double guarded(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> start, const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  if (n == 0) throw Error("nelder_mead: empty start vector");
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = options.initial_step.size() == n ? options.initial_step[i] : options.initial_step.front();
    simplex[i + 1][i] += step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = guarded(f, simplex[i]);

  std::vector<std::size_t> order(n + 1);
  MinimizeResult result;
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) diameter = std::max(diameter, std::abs(simplex[i][k] - simplex[best][k]));
    }
    const double spread = values[worst] - values[best];
    if (std::isfinite(spread) && spread <= options.f_tolerance * (1.0 + std::abs(values[best])) &&
        diameter <= options.x_tolerance * (1.0 + std::abs(simplex[best][0]))) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return p;
    };

    auto reflected = along(-kReflect);
    const double f_r = guarded(f, reflected);
    if (f_r < values[best]) {
      auto expanded = along(-kExpand);
      const double f_e = guarded(f, expanded);
      if (f_e < f_r) {
        simplex[worst] = std::move(expanded);
        values[worst] = f_e;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = f_r;
      }
      continue;
    }
    if (f_r < values[second_worst]) {
      simplex[worst] = std::move(reflected);
      values[worst] = f_r;
      continue;
    }
    const bool outside = f_r < values[worst];
    auto contracted = along(outside ? -kContract : kContract);
    const double f_c = guarded(f, contracted);
    if (f_c < (outside ? f_r : values[worst])) {
      simplex[worst] = std::move(contracted);
      values[worst] = f_c;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + kShrink * (simplex[i][k] - simplex[best][k]);
      values[i] = guarded(f, simplex[i]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = it;
  return result;
}

MinimizeResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, int bits,
                              std::size_t max_iterations) {
  auto safe = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  std::uintmax_t iters = max_iterations;
  const auto [x, v] = boost::math::tools::brent_find_minima(safe, lo, hi, bits, iters);
  MinimizeResult r;
  r.x = {x};
  r.value = v;
  r.iterations = static_cast<std::size_t>(iters);
  r.converged = iters < max_iterations;
  return r;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tolerance) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) throw Error("find_root: no sign change on bracket");
  std::uintmax_t iters = 200;
  auto tol = [tolerance](double a, double b) { return std::abs(b - a) <= tolerance; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace metocean::optimize
