#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metocean {

/// Engine used throughout. Only raw 64-bit output is consumed so that every
/// variate below is reproducible across standard library implementations.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derive a child seed from a root seed and a stage label.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) noexcept;

/// Derive a child seed from a root seed and a block/resample index.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

/// Uniform on the open interval (0, 1), 53-bit resolution.
double uniform01(Rng& rng) noexcept;

/// Standard normal by inversion.
double standard_normal(Rng& rng);

/// Unit-rate exponential.
double standard_exponential(Rng& rng) noexcept;

/// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept;

/// Poisson variate by sequential inversion; large means are split into
/// chunks and summed.
std::uint64_t poisson(Rng& rng, double mean);

/// Positive alpha-stable variate with Laplace transform exp(-t^alpha),
/// alpha in (0, 1] (Kanter / Chambers-Mallows-Stuck representation).
double positive_stable(Rng& rng, double alpha);

}  // namespace metocean
