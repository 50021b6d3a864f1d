#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

namespace metocean {

/// Convex hull of planar points: indices in counter-clockwise order,
/// collinear boundary points dropped.
std::vector<std::size_t> convex_hull_2d(const std::vector<Eigen::Vector2d>& points);

struct HullFacet {
  std::array<std::size_t, 3> v{};  ///< counter-clockwise seen from outside
  Eigen::Vector3d normal;          ///< outward unit normal
  double offset = 0.0;             ///< normal . x = offset on the plane
};

/// Convex hull of points in space by incremental insertion. Points within
/// a relative tolerance of an existing facet plane are treated as inside.
/// Throws when the points are (nearly) coplanar.
std::vector<HullFacet> convex_hull_3d(const std::vector<Eigen::Vector3d>& points);

}  // namespace metocean
