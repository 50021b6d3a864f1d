#include "metocean/random.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace metocean {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) noexcept {
  // FNV-1a over the label, then mixed with the root.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(root) ^ h);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  return mix64(mix64(root) + mix64(index ^ 0x5851f42d4c957f2dULL));
}

double uniform01(Rng& rng) noexcept {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t k = rng() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  const double u = uniform01(rng);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double standard_exponential(Rng& rng) noexcept { return -std::log(uniform01(rng)); }

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept {
  // Multiply-shift; bias is below 2^-64 * n and irrelevant here.
  __extension__ using u128 = unsigned __int128;
  const u128 prod = static_cast<u128>(rng()) * n;
  return static_cast<std::uint64_t>(prod >> 64);
}

std::uint64_t poisson(Rng& rng, double mean) {
  std::uint64_t total = 0;
  while (mean > 30.0) {
    total += poisson(rng, 30.0);
    mean -= 30.0;
  }
  if (mean <= 0.0) return total;
  const double limit = std::exp(-mean);
  double prod = uniform01(rng);
  std::uint64_t k = 0;
  while (prod > limit) {
    prod *= uniform01(rng);
    ++k;
  }
  return total + k;
}

double positive_stable(Rng& rng, double alpha) {
  if (alpha >= 1.0) return 1.0;
  constexpr double kPi = 3.14159265358979323846;
  const double u = kPi * uniform01(rng);
  const double w = standard_exponential(rng);
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha);
  return a * b;
}

}  // namespace metocean
