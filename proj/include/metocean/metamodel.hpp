/**
 * @file metamodel.hpp
 * @brief Closed-form surrogate for the 20-minute maximum mooring-line tension.
 *
 * The tension is split into a quasi-static mean T_qs driven by the squared
 * intensities projected on the line heading, a low-frequency standard
 * deviation sigma_LF and a wave-frequency standard deviation sigma_HF:
 *
 *   T_qs     = aH Hs^2 (cos Dm + sin Dm) + aW Ws^2 (cos Wdir + sin Wdir)
 *              + aC Cs^2 (cos Cdir + sin Cdir)
 *   sigma_LF = a_LF Hs^2 + b_LF T_qs |T_qs|
 *   sigma_HF = a_HF Hs + b_HF Hs^3 + c_HF T_qs |T_qs| + d_HF sigma_LF^2
 *   T_max    = T_pre + T_qs + r_LF sigma_LF + r_HF sigma_HF
 *
 * where r_LF and r_HF are Gumbel quantiles of the normalized maxima at
 * `quantile_level`. Negative raw standard deviations are floored at zero.
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "metocean/ingest.hpp"
#include "metocean/uv_evt.hpp"

namespace metocean {

inline constexpr int kMetaModelSchemaVersion = 1;

struct MetaModelParams {
  double pretension = 0.0;  ///< kN
  double alpha_h = 0.0;
  double alpha_w = 0.0;
  double alpha_c = 0.0;
  double a_lf = 0.0;
  double b_lf = 0.0;
  double a_hf = 0.0;
  double b_hf = 0.0;
  double c_hf = 0.0;
  double d_hf = 0.0;
  GumbelFit gumbel_lf{0.0, 1.0};
  GumbelFit gumbel_hf{0.0, 1.0};
  double quantile_level = 0.75;

  void validate() const;

  /// Coefficients used by the synthetic study. They keep every term
  /// non-negative at a 45 degree heading, so the response is monotone in
  /// each intensity there.
  static MetaModelParams synthetic_defaults();
};

void to_json(nlohmann::json& j, const MetaModelParams& p);
void from_json(const nlohmann::json& j, MetaModelParams& p);

struct TensionDecomposition {
  double t_qs = 0.0;
  double sigma_lf = 0.0;
  double sigma_hf = 0.0;
  double t_max = 0.0;
};

/// Number of standard deviations that had to be floored at zero.
struct FloorCounter {
  std::size_t lf = 0;
  std::size_t hf = 0;
};

double quasi_static(const MetaModelParams& params, const SeaStateRecord& state);
double sigma_lf(const MetaModelParams& params, double hs, double t_qs, FloorCounter* floors = nullptr);
double sigma_hf(const MetaModelParams& params, double hs, double t_qs, double sigma_lf,
                FloorCounter* floors = nullptr);
TensionDecomposition max_tension(const MetaModelParams& params, const SeaStateRecord& state,
                                 FloorCounter* floors = nullptr);

/// One storm used for calibration: environment plus decomposed tension
/// statistics and the normalized 20-min maxima T_max_LF / sigma_LF and
/// T_max_HF / sigma_HF.
struct MetaModelSample {
  SeaStateRecord state;
  double t_qs = 0.0;
  double sigma_lf = 0.0;
  double sigma_hf = 0.0;
  double normalized_max_lf = 0.0;
  double normalized_max_hf = 0.0;
};

/// Stage-wise least squares (quasi-static, then LF, then HF) plus Gumbel
/// fits of the normalized maxima. The pretension cannot be identified from
/// decomposed components and is passed in.
MetaModelParams fit_metamodel(std::span<const MetaModelSample> samples, double pretension,
                              double quantile_level = 0.75);

/// Evaluates every complete record. Records with a missing hs, ws, cs or
/// direction yield NaN rows.
std::vector<TensionDecomposition> evaluate_batch(const Dataset& data, const MetaModelParams& params,
                                                 FloorCounter* floors = nullptr);

/// CSV with columns timestamp,t_qs,sigma_lf,sigma_hf,t_max.
void write_batch_csv(const Dataset& data, std::span<const TensionDecomposition> rows, std::ostream& out);

}  // namespace metocean
