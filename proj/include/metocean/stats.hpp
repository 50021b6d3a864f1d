#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace metocean::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);

/// Sample quantile by linear interpolation between order statistics
/// (the usual "type 7" definition). `x` need not be sorted.
double quantile_linear(std::span<const double> x, double p);

/// Order statistic of rank ceil(n * q) (1-based), clamped to [1, n].
/// `x` need not be sorted.
double order_statistic_quantile(std::span<const double> x, double q);

/// Rank index used by `order_statistic_quantile`: ceil(n * q) with a small
/// guard against representation error in n * q.
std::size_t upper_rank(std::size_t n, double q);

/// Kendall's tau-b by exhaustive pair comparison. O(n^2).
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

/// Average ranks, 1-based.
std::vector<double> ranks(std::span<const double> x);

/// One-sample Kolmogorov-Smirnov distance sup |F_n - F|.
double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::span<const double> a, std::span<const double> b);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

}  // namespace metocean::stats
