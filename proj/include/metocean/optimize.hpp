#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace metocean::optimize {

struct NelderMeadOptions {
  std::size_t max_iterations = 5000;
  /// Convergence on the spread of objective values across the simplex.
  double f_tolerance = 1e-12;
  /// Convergence on the simplex diameter.
  double x_tolerance = 1e-10;
  /// Initial simplex edge, per coordinate (scalar broadcast if size 1).
  std::vector<double> initial_step{0.1};
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization. Non-finite objective values are
/// treated as +infinity, which doubles as a way to encode constraints.
MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> start, const NelderMeadOptions& options = {});

/// Minimize a unimodal scalar function on [lo, hi] (Brent).
MinimizeResult brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                              int bits = 50, std::size_t max_iterations = 500);

/// Root of a continuous function with a sign change on [lo, hi] (TOMS 748).
double find_root(const std::function<double(double)>& f, double lo, double hi, double tolerance = 1e-12);

}  // namespace metocean::optimize
