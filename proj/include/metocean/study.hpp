/**
 * @file study.hpp
 * @brief End-to-end method comparison driven by one declarative config.
 *
 * Seeds for every random stage are derived from the root seed with
 * `derive_seed(root, "<stage>")`:
 *   synthesis                  "synthesis"
 *   return-level bootstrap     "bootstrap/<variable>"
 *   threshold diagnostics      "diagnostics/<variable>"
 *   simulation of model M      "simulate/<M>"
 *   empirical quantile check   "check"
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metocean/contour.hpp"
#include "metocean/decluster.hpp"
#include "metocean/dependence.hpp"
#include "metocean/descriptive.hpp"
#include "metocean/metamodel.hpp"
#include "metocean/synthetic.hpp"
#include "metocean/uv_evt.hpp"

namespace metocean {

struct StudyConfig {
  std::uint64_t seed = 0;
  std::optional<SynthesisConfig> synthesis;
  std::filesystem::path input_csv;
  std::filesystem::path mapping_file;
  std::vector<std::string> variables{"hs", "ws", "cs"};
  DeclusterConfig decluster{};
  double gpd_threshold_quantile = 0.99;
  std::vector<std::string> models = model_names();
  DependenceSettings dependence{};
  std::vector<double> return_periods{100.0};
  std::size_t monte_carlo_n = 1'000'000;
  int direction_level = 3;
  std::size_t circle_directions = 720;
  DirectionAssignment directions{};
  MetaModelParams metamodel = MetaModelParams::synthetic_defaults();
  std::vector<double> check_quantiles{0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.93, 0.95, 0.97, 0.98};
  std::size_t check_resamples = 500;
  double check_block_hours = 72.0;
  /// Also run the model comparison with the other concomitant convention.
  bool compare_concomitant = true;
  /// Censoring, conditioning and tail levels of the sensitivity table.
  std::vector<double> sensitivity_levels{0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t bootstrap_resamples = 1000;
  std::size_t diagnostic_points = 8;
  DescriptiveOptions descriptive{};
  std::filesystem::path output_dir = "study_out";

  void validate() const;
  /// Relative paths inside the document are resolved against `base_dir`.
  static StudyConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  [[nodiscard]] nlohmann::json to_json() const;
  static StudyConfig load(const std::filesystem::path& path);
};

struct MethodResult {
  std::string method;
  double return_level = 0.0;
  double relative_error = 0.0;
  DesignPoint design_point;
};

struct ComparisonTable {
  double return_period = 0.0;
  /// Concomitant convention of the joint events ("at_peak",
  /// "componentwise_max"); empty renders without a qualifier.
  std::string concomitant;
  double reference = 0.0;
  std::vector<MethodResult> methods;
};

struct ComparisonReport {
  std::vector<std::string> variables;
  GpdFit reference_fit;
  std::vector<ComparisonTable> tables;
};

std::string concomitant_label(ConcomitantRule rule);

/// Refits the logistic, conditional-extremes and Nataf models at each level
/// (censoring probability, conditioning probability, tail quantile). Levels
/// where a fit fails carry the error message instead of parameters.
nlohmann::json dependence_sensitivity(const ClusterMaxima& events, const MarginalSet& margins,
                                      const DependenceSettings& settings, const std::vector<double>& levels);

/// Display label for a model identifier, e.g. "Perfect dependence".
std::string method_label(const std::string& model);

/// Tables of return levels (integer-percent relative error) and design
/// points as Markdown.
std::string render_report_markdown(const ComparisonReport& report);
nlohmann::json report_to_json(const ComparisonReport& report);

/// Runs every stage and writes all artifacts under `config.output_dir`.
/// Failures are rethrown as `StageError`; artifacts already written stay.
ComparisonReport run_study(const StudyConfig& config);

/// Loads or synthesizes the study dataset.
Dataset study_dataset(const StudyConfig& config);
/// Joint storm events over the configured variables.
ClusterMaxima study_events(const Dataset& data, const StudyConfig& config);
/// Margins with GPD thresholds at the configured quantile of the full record.
MarginalSet study_margins(const Dataset& data, const ClusterMaxima& events, const StudyConfig& config);
/// Response-based reference fit (declustered GPD of the meta-model series).
GpdFit reference_fit(const Dataset& data, const StudyConfig& config);
DirectionGrid study_grid(const StudyConfig& config);

}  // namespace metocean
