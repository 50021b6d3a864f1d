/**
 * @file contour.hpp
 * @brief Environmental contours from directional projection quantiles.
 *
 * For each unit direction u the contour value C(u) is the empirical
 * (1 - p_e) quantile of u.x over a sample, taken as the order statistic of
 * rank ceil(n (1 - p_e)). The contour is the boundary of the intersection
 * of the halfspaces u.x <= C(u). It is built in dual space: after moving
 * the origin to an interior centre c, each halfspace maps to the point
 * u / (C(u) - u.c), the convex hull of those points is taken, and every hull
 * facet n.y = d maps back to the primal vertex c + n / d.
 */
#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "metocean/dependence.hpp"
#include "metocean/metamodel.hpp"

namespace metocean {

class DirectionGrid {
 public:
  /// `m` equally spaced directions on the circle, starting at angle 0.
  static DirectionGrid circle(std::size_t m);
  /// Vertices of a recursively subdivided icosahedron: 10 * 4^level + 2.
  static DirectionGrid icosphere(int level);
  /// Smallest icosphere level whose angular gap is below `max_gap_rad`.
  static DirectionGrid icosphere_for_gap(double max_gap_rad);
  /// Arbitrary directions; each is normalized.
  static DirectionGrid from_vectors(const std::vector<Eigen::VectorXd>& dirs);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return dirs_.size(); }
  [[nodiscard]] const std::vector<Eigen::VectorXd>& directions() const noexcept { return dirs_; }
  [[nodiscard]] const Eigen::VectorXd& operator[](std::size_t i) const { return dirs_[i]; }
  /// Largest angle between neighbouring grid directions (radians).
  [[nodiscard]] double max_angular_gap() const noexcept { return max_gap_; }

 private:
  std::size_t dim_ = 0;
  std::vector<Eigen::VectorXd> dirs_;
  double max_gap_ = 0.0;
};

/// Single projection quantile. Throws "insufficient sample for exceedance
/// level" when n p_e < 1.
double projection_quantile(const Eigen::MatrixXd& sample, const Eigen::VectorXd& u, double p_e);

/// Projection quantiles for every grid direction.
std::vector<double> projection_quantiles(const Eigen::MatrixXd& sample, const DirectionGrid& grid, double p_e);

struct ContourSurface {
  std::vector<std::string> variables;
  DirectionGrid grid;
  std::vector<double> c_values;
  Eigen::VectorXd center;
  std::vector<Eigen::VectorXd> vertices;
  /// Triangles (3-D) or segments (2-D), indices into `vertices`, oriented
  /// counter-clockwise around their outward normal.
  std::vector<std::vector<std::size_t>> facets;
  /// Grid direction whose halfspace supports each facet.
  std::vector<std::size_t> facet_direction;
  double exceedance_probability = 0.0;
  double return_period = 0.0;
  double events_per_year = 0.0;
  /// Volume (3-D) or area (2-D) of the enclosed body.
  double measure = 0.0;

  [[nodiscard]] std::size_t dim() const noexcept { return grid.dim(); }
};

/// Halfspace intersection for given contour values; `center` must lie
/// strictly inside every halfspace.
ContourSurface halfspace_intersection(const DirectionGrid& grid, const std::vector<double>& c_values,
                                      const Eigen::VectorXd& center);

/// Contour at exceedance probability p_e = 1 / (events_per_year * T).
ContourSurface build_contour(const SimulatedEvents& sample, const DirectionGrid& grid, double return_period);
/// Contour at an explicit exceedance probability (raw-data contours).
ContourSurface build_contour_at(const Eigen::MatrixXd& sample, const std::vector<std::string>& variables,
                                const DirectionGrid& grid, double p_e);

nlohmann::json contour_to_json(const ContourSurface& s);
/// Rebuilds a surface from the directions, contour values and centre stored
/// by `contour_to_json`.
ContourSurface contour_from_json(const nlohmann::json& j);
void write_obj(const ContourSurface& s, std::ostream& out);

/// Fixed headings used to evaluate the meta-model on an intensity-only
/// contour. The default is the most adverse heading for every component.
struct DirectionAssignment {
  double dm = 45.0;
  double wdir = 45.0;
  double cdir = 45.0;
};

struct DesignPoint {
  std::vector<std::string> variables;
  Eigen::VectorXd location;
  double response = 0.0;
  TensionDecomposition tension;
  std::string method;
};

/// Sea state for a contour point; variables not on the contour are zero.
SeaStateRecord contour_state(const std::vector<std::string>& variables, const Eigen::VectorXd& x,
                             const DirectionAssignment& directions);

/// Maximizes the meta-model over vertices and barycentric refinement points
/// of every facet (`refinement` subdivisions per edge, 4 by default, i.e.
/// two halvings). Ties go to the lexicographically smallest location.
DesignPoint find_design_point(const ContourSurface& surface, const MetaModelParams& params,
                              const DirectionAssignment& directions, const std::string& method = {},
                              int refinement = 4);

void write_design_points_csv(const std::vector<DesignPoint>& points, std::ostream& out);

/// Response on the supporting plane normal to the response gradient, found
/// by the fixed point x <- x + (C(u) - u.x) u with u = grad f(x) / |grad f(x)|,
/// started at the componentwise median. For a response that depends on one
/// linear projection w.x the result is exactly the response at C(w/|w|).
/// It stands in for the contour maximum at levels where the halfspace
/// intersection is empty.
struct SupportPlanePoint {
  Eigen::VectorXd location;
  double response = 0.0;
  int iterations = 0;
  bool converged = false;
};
SupportPlanePoint support_plane_point(const Eigen::MatrixXd& sample, const std::vector<std::string>& variables,
                                      const MetaModelParams& params, const DirectionAssignment& directions,
                                      double p_e, int max_iterations = 100);

struct EmpiricalCheckOptions {
  std::vector<std::string> variables{"hs", "ws", "cs"};
  std::size_t bootstrap_resamples = 500;
  std::size_t block_length = 72;  ///< moving-block length in records
  double level = 0.95;
  std::uint64_t seed = 1;
  int grid_level = 3;      ///< icosphere level (3-D)
  std::size_t circle = 720;  ///< directions (2-D)
  std::size_t min_exceedances = 50;
  DirectionAssignment directions{};
};

struct EmpiricalCheckRow {
  double quantile = 0.0;
  bool available = false;
  double empirical = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double contour = 0.0;
  double relative_error = 0.0;
  /// "hull" when the halfspace intersection exists, "support_plane" otherwise.
  std::string construction;
};

/// Compares response quantiles of the full record with the maximum response
/// on raw-data contours at the matching exceedance level.
std::vector<EmpiricalCheckRow> empirical_contour_check(const Dataset& data, const MetaModelParams& params,
                                                       const std::vector<double>& quantile_grid,
                                                       const EmpiricalCheckOptions& options = {});
nlohmann::json empirical_check_json(const std::vector<EmpiricalCheckRow>& rows);

}  // namespace metocean
