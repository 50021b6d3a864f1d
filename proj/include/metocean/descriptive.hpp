#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "metocean/ingest.hpp"
#include "metocean/metamodel.hpp"

namespace metocean {

struct DescriptiveOptions {
  std::vector<std::string> variables{"hs", "ws", "cs"};
  std::size_t bins = 40;
  std::size_t kde_grid = 64;
  /// Scales the Scott's-rule bandwidth of the pairwise densities.
  double bandwidth_multiplier = 1.0;
  /// Length of the extracted time window, in records, centred on the
  /// largest response.
  std::size_t series_length = 720;
};

nlohmann::json histogram_json(const std::string& name, std::span<const double> values, std::size_t bins);

/// Gaussian kernel density of (x, y) on a regular grid, computed by binning
/// followed by separable convolution.
nlohmann::json kde_2d_json(const std::string& x_name, std::span<const double> x, const std::string& y_name,
                           std::span<const double> y, std::size_t grid, double bandwidth_multiplier);

/// Writes hist_<v>.json per variable, kde_<a>_<b>.json per pair and
/// series.json into `out_dir`; returns the written paths in that order.
std::vector<std::filesystem::path> emit_descriptive_stats(const Dataset& data, const MetaModelParams& params,
                                                          const DescriptiveOptions& options,
                                                          const std::filesystem::path& out_dir);

}  // namespace metocean
