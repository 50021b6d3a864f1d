#include "metocean/contour.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numbers>
#include <ostream>
#include <thread>

#include "metocean/error.hpp"
#include "metocean/hull.hpp"
#include "metocean/random.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::atan2(std::sqrt(std::max(0.0, 1.0 - std::pow(a.dot(b), 2))), a.dot(b));
}

/// k-th smallest (1-based) of `values`, reordering the buffer.
double select_rank(std::vector<double>& values, std::size_t k) {
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  return values[k - 1];
}

/// Upper-rank selection that first discards everything below a pilot
/// estimate from a strided subsample; falls back to a full selection when
/// the pilot is too high.
double fast_upper_quantile(std::vector<double>& proj, std::size_t k, std::vector<double>& scratch) {
  const std::size_t n = proj.size();
  constexpr std::size_t kPilot = 20000;
  if (n <= 4 * kPilot) return select_rank(proj, k);
  const std::size_t stride = n / kPilot;
  scratch.clear();
  for (std::size_t i = 0; i < n; i += stride) scratch.push_back(proj[i]);
  const auto m = static_cast<double>(scratch.size());
  const double q = static_cast<double>(k) / static_cast<double>(n);
  const double guard = 6.0 * std::sqrt(q * (1.0 - q) / m) + 2.0 / m;
  const double q_low = q - guard;
  if (q_low <= 0.0) return select_rank(proj, k);
  const auto pk = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(q_low * m)));
  const double t = select_rank(scratch, pk);
  scratch.clear();
  std::size_t below = 0;
  for (double v : proj) {
    if (v > t) {
      scratch.push_back(v);
    } else {
      ++below;
    }
  }
  if (below >= k || scratch.empty()) return select_rank(proj, k);
  return select_rank(scratch, k - below);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(0, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = next++; i < n; i = next++) body(w, i);
    });
  }
  for (auto& t : pool) t.join();
}

double brute_force_gap(const std::vector<Eigen::VectorXd>& dirs) {
  double gap = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    double nearest = std::numbers::pi;
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      if (i != j) nearest = std::min(nearest, angle_between(dirs[i], dirs[j]));
    }
    gap = std::max(gap, nearest);
  }
  return gap;
}

/// Lexicographic order on coordinates.
bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

Eigen::VectorXd componentwise_median(const Eigen::MatrixXd& x) {
  Eigen::VectorXd m(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<double> col(x.col(c).data(), x.col(c).data() + x.rows());
    m[c] = stats::quantile_linear(col, 0.5);
  }
  return m;
}

struct OffendingDirections : Error {
  using Error::Error;
};

}  // namespace

DirectionGrid DirectionGrid::circle(std::size_t m) {
  if (m < 3) throw Error("a circular grid needs at least three directions");
  DirectionGrid g;
  g.dim_ = 2;
  for (std::size_t k = 0; k < m; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
    Eigen::VectorXd u(2);
    u << std::cos(t), std::sin(t);
    g.dirs_.push_back(u);
  }
  g.max_gap_ = 2.0 * std::numbers::pi / static_cast<double>(m);
  return g;
}

DirectionGrid DirectionGrid::icosphere(int level) {
  if (level < 0 || level > 8) throw Error("icosphere level must lie in [0, 8]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                 {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<std::size_t, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> mid;
    auto midpoint = [&](std::size_t a, std::size_t b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      mid.emplace(key, v.size() - 1);
      return v.size() - 1;
    };
    std::vector<std::array<std::size_t, 3>> next;
    for (const auto& tri : f) {
      const auto ab = midpoint(tri[0], tri[1]);
      const auto bc = midpoint(tri[1], tri[2]);
      const auto ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  DirectionGrid g;
  g.dim_ = 3;
  for (const auto& p : v) g.dirs_.emplace_back(Eigen::VectorXd(p));
  for (const auto& tri : f) {
    for (int e = 0; e < 3; ++e) {
      g.max_gap_ = std::max(g.max_gap_, angle_between(g.dirs_[tri[e]], g.dirs_[tri[(e + 1) % 3]]));
    }
  }
  return g;
}

DirectionGrid DirectionGrid::icosphere_for_gap(double max_gap_rad) {
  for (int level = 0; level <= 8; ++level) {
    auto g = icosphere(level);
    if (g.max_angular_gap() < max_gap_rad) return g;
  }
  throw Error("requested angular gap is finer than the densest supported icosphere");
}

DirectionGrid DirectionGrid::from_vectors(const std::vector<Eigen::VectorXd>& dirs) {
  if (dirs.empty()) throw Error("direction grid is empty");
  DirectionGrid g;
  g.dim_ = static_cast<std::size_t>(dirs.front().size());
  if (g.dim_ != 2 && g.dim_ != 3) throw Error("directions must be 2-D or 3-D");
  for (const auto& d : dirs) {
    if (static_cast<std::size_t>(d.size()) != g.dim_) throw Error("directions of mixed dimension");
    const double len = d.norm();
    if (!(len > 0.0)) throw Error("zero direction vector");
    g.dirs_.emplace_back(d / len);
  }
  g.max_gap_ = brute_force_gap(g.dirs_);
  return g;
}

double projection_quantile(const Eigen::MatrixXd& sample, const Eigen::VectorXd& u, double p_e) {
  const auto n = static_cast<std::size_t>(sample.rows());
  if (!(p_e > 0.0 && p_e < 1.0)) throw Error("exceedance probability must lie in (0, 1)");
  if (static_cast<double>(n) * p_e < 1.0) throw Error("insufficient sample for exceedance level");
  if (u.size() != sample.cols()) throw Error("direction and sample dimensions differ");
  std::vector<double> proj(n);
  Eigen::Map<Eigen::VectorXd>(proj.data(), static_cast<Eigen::Index>(n)).noalias() = sample * u;
  std::vector<double> scratch;
  return fast_upper_quantile(proj, stats::upper_rank(n, 1.0 - p_e), scratch);
}

std::vector<double> projection_quantiles(const Eigen::MatrixXd& sample, const DirectionGrid& grid, double p_e) {
  const auto n = static_cast<std::size_t>(sample.rows());
  if (!(p_e > 0.0 && p_e < 1.0)) throw Error("exceedance probability must lie in (0, 1)");
  if (static_cast<double>(n) * p_e < 1.0) throw Error("insufficient sample for exceedance level");
  if (static_cast<std::size_t>(sample.cols()) != grid.dim()) throw Error("grid and sample dimensions differ");
  const std::size_t k = stats::upper_rank(n, 1.0 - p_e);
  const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::vector<std::vector<double>> proj(workers, std::vector<double>(n));
  std::vector<std::vector<double>> scratch(workers);
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t w, std::size_t i) {
    auto& buf = proj[w];
    Eigen::Map<Eigen::VectorXd>(buf.data(), static_cast<Eigen::Index>(n)).noalias() = sample * grid[i];
    out[i] = fast_upper_quantile(buf, k, scratch[w]);
  });
  return out;
}

ContourSurface halfspace_intersection(const DirectionGrid& grid, const std::vector<double>& c_values,
                                      const Eigen::VectorXd& center) {
  const std::size_t d = grid.dim();
  const std::size_t m = grid.size();
  if (c_values.size() != m) throw Error("one contour value per direction is required");
  if (static_cast<std::size_t>(center.size()) != d) throw Error("centre has the wrong dimension");

  std::vector<double> shifted(m);
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < m; ++k) {
    shifted[k] = c_values[k] - grid[k].dot(center);
    if (!(shifted[k] > 0.0)) bad.push_back(k);
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i) {
      list += fmt::format("{}{}", i ? ", " : "", bad[i]);
    }
    throw OffendingDirections(fmt::format("centre not interior for {} directions (indices {}{})", bad.size(), list,
                                          bad.size() > 10 ? ", ..." : ""));
  }

  ContourSurface s;
  s.grid = grid;
  s.c_values = c_values;
  s.center = center;
  double scale = 1.0;
  for (std::size_t k = 0; k < m; ++k) scale = std::max(scale, std::abs(c_values[k]));
  const double merge_tol = 1e-10 * scale;

  // Primal vertices from dual hull facets, with near-duplicates merged.
  std::vector<Eigen::VectorXd> raw;
  std::vector<std::vector<std::size_t>> incident(m);  // raw vertex ids per active direction
  std::vector<std::size_t> hull2;
  if (d == 2) {
    std::vector<Eigen::Vector2d> dual(m);
    for (std::size_t k = 0; k < m; ++k) dual[k] = grid[k] / shifted[k];
    const auto hull = convex_hull_2d(dual);
    hull2 = hull;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const auto a = hull[i], b = hull[(i + 1) % hull.size()];
      const Eigen::Vector2d e = dual[b] - dual[a];
      const Eigen::Vector2d nrm(e.y(), -e.x());
      const double off = nrm.dot(dual[a]);
      if (!(off > 0.0)) throw Error("contour body is unbounded for this direction set");
      raw.emplace_back(center + Eigen::VectorXd(nrm / off));
    }
  } else if (d == 3) {
    std::vector<Eigen::Vector3d> dual(m);
    for (std::size_t k = 0; k < m; ++k) dual[k] = grid[k] / shifted[k];
    const auto hull = convex_hull_3d(dual);
    for (const auto& f : hull) {
      if (!(f.offset > 0.0)) throw Error("contour body is unbounded for this direction set");
      raw.emplace_back(center + Eigen::VectorXd(f.normal / f.offset));
      for (auto v : f.v) incident[v].push_back(raw.size() - 1);
    }
  } else {
    throw Error("contours are supported in 2-D and 3-D only");
  }

  std::vector<std::size_t> order(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lex_less(raw[a], raw[b]); });
  std::vector<std::size_t> id(raw.size(), 0);
  std::vector<std::size_t> reps;  // merged representative per output vertex
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto r = order[pos];
    bool merged = false;
    for (auto q = reps.size(); q-- > 0;) {
      const auto& rep = raw[reps[q]];
      if (raw[r][0] - rep[0] > merge_tol) break;
      if ((raw[r] - rep).norm() <= merge_tol) {
        id[r] = q;
        merged = true;
        break;
      }
    }
    if (!merged) {
      reps.push_back(r);
      id[r] = reps.size() - 1;
      s.vertices.push_back(raw[r]);
    }
  }
  // `reps` is sorted by first coordinate, so the backward scan above can stop early.

  if (d == 2) {
    // Raw vertex i joins the halfspaces of hull2[i] and hull2[i + 1].
    const std::size_t h = hull2.size();
    for (std::size_t i = 0; i < h; ++i) {
      const auto a = id[(i + h - 1) % h], b = id[i];
      if (a == b) continue;
      s.facets.push_back({a, b});
      s.facet_direction.push_back(hull2[i]);
    }
    // Area by the shoelace formula over the counter-clockwise vertex cycle.
    std::vector<std::size_t> cycle;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto v = id[i];
      if (cycle.empty() || cycle.back() != v) cycle.push_back(v);
    }
    if (cycle.size() > 1 && cycle.front() == cycle.back()) cycle.pop_back();
    double area = 0.0;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      const auto& p = s.vertices[cycle[i]];
      const auto& q = s.vertices[cycle[(i + 1) % cycle.size()]];
      area += p[0] * q[1] - p[1] * q[0];
    }
    s.measure = 0.5 * std::abs(area);
  } else {
    double volume = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<std::size_t> ids;
      for (auto r : incident[k]) ids.push_back(id[r]);
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      if (ids.size() < 3) continue;
      const Eigen::Vector3d u = grid[k];
      const Eigen::Vector3d e1 = (std::abs(u.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY()).cross(u).normalized();
      const Eigen::Vector3d e2 = u.cross(e1);
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      for (auto v : ids) centroid += Eigen::Vector3d(s.vertices[v]);
      centroid /= static_cast<double>(ids.size());
      std::vector<std::pair<double, std::size_t>> ang;
      for (auto v : ids) {
        const Eigen::Vector3d r = Eigen::Vector3d(s.vertices[v]) - centroid;
        ang.emplace_back(std::atan2(r.dot(e2), r.dot(e1)), v);
      }
      std::sort(ang.begin(), ang.end());
      for (std::size_t i = 1; i + 1 < ang.size(); ++i) {
        const Eigen::Vector3d a = s.vertices[ang[0].second];
        const Eigen::Vector3d b = s.vertices[ang[i].second];
        const Eigen::Vector3d c = s.vertices[ang[i + 1].second];
        if ((b - a).cross(c - a).norm() <= 1e-14 * scale * scale) continue;
        s.facets.push_back({ang[0].second, ang[i].second, ang[i + 1].second});
        s.facet_direction.push_back(k);
        const Eigen::Vector3d o = center;
        volume += (a - o).dot((b - o).cross(c - o)) / 6.0;
      }
    }
    s.measure = volume;
  }
  return s;
}

ContourSurface build_contour_at(const Eigen::MatrixXd& sample, const std::vector<std::string>& variables,
                                const DirectionGrid& grid, double p_e) {
  if (static_cast<std::size_t>(sample.cols()) != grid.dim()) throw Error("grid and sample dimensions differ");
  const auto c = projection_quantiles(sample, grid, p_e);
  ContourSurface s;
  const Eigen::VectorXd mean = sample.colwise().mean().transpose();
  try {
    s = halfspace_intersection(grid, c, mean);
  } catch (const OffendingDirections&) {
    try {
      s = halfspace_intersection(grid, c, componentwise_median(sample));
    } catch (const OffendingDirections& e) {
      throw Error(fmt::format("contour is not star-shaped about the sample mean or median: {}", e.what()));
    }
  }
  s.variables = variables;
  s.exceedance_probability = p_e;
  return s;
}

ContourSurface build_contour(const SimulatedEvents& sample, const DirectionGrid& grid, double return_period) {
  if (!(return_period > 0.0)) throw Error("return period must be positive");
  if (!(sample.events_per_year * return_period > 1.0)) {
    throw Error("events_per_year * return period must exceed 1");
  }
  const double p_e = 1.0 / (sample.events_per_year * return_period);
  auto s = build_contour_at(sample.values, sample.variables, grid, p_e);
  s.return_period = return_period;
  s.events_per_year = sample.events_per_year;
  return s;
}

SupportPlanePoint support_plane_point(const Eigen::MatrixXd& sample, const std::vector<std::string>& variables,
                                      const MetaModelParams& params, const DirectionAssignment& directions,
                                      double p_e, int max_iterations) {
  const auto d = sample.cols();
  if (d == 0 || sample.rows() == 0) throw Error("support-plane point needs a non-empty sample");
  auto response = [&](const Eigen::VectorXd& x) {
    return max_tension(params, contour_state(variables, x, directions)).t_max;
  };
  Eigen::VectorXd x(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const std::vector<double> col(sample.col(c).data(), sample.col(c).data() + sample.rows());
    x[c] = stats::quantile_linear(col, 0.5);
  }
  SupportPlanePoint out;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd grad(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
      Eigen::VectorXd up = x, down = x;
      up[c] += h;
      down[c] -= h;
      grad[c] = (response(up) - response(down)) / (2.0 * h);
    }
    if (!(grad.norm() > 0.0)) break;
    const Eigen::VectorXd u = grad.normalized();
    const Eigen::VectorXd next = x + (projection_quantile(sample, u, p_e) - u.dot(x)) * u;
    out.iterations = it + 1;
    const bool done = (next - x).norm() <= 1e-10 * (1.0 + x.norm());
    x = next;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.location = x;
  out.response = response(x);
  return out;
}

nlohmann::json contour_to_json(const ContourSurface& s) {
  auto rows = [](const std::vector<Eigen::VectorXd>& v) {
    std::vector<std::vector<double>> out;
    for (const auto& x : v) out.emplace_back(x.data(), x.data() + x.size());
    return out;
  };
  return nlohmann::json{{"schema_version", 1},
                        {"variables", s.variables},
                        {"directions", rows(s.grid.directions())},
                        {"c_values", s.c_values},
                        {"center", std::vector<double>(s.center.data(), s.center.data() + s.center.size())},
                        {"vertices", rows(s.vertices)},
                        {"facets", s.facets},
                        {"facet_direction", s.facet_direction},
                        {"p_e", s.exceedance_probability},
                        {"T", s.return_period},
                        {"events_per_year", s.events_per_year},
                        {"measure", s.measure},
                        {"max_angular_gap", s.grid.max_angular_gap()}};
}

ContourSurface contour_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw Error("unsupported contour schema_version");
  std::vector<Eigen::VectorXd> dirs;
  for (const auto& row : j.at("directions")) {
    const auto v = row.get<std::vector<double>>();
    dirs.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const auto center = j.at("center").get<std::vector<double>>();
  auto s = halfspace_intersection(DirectionGrid::from_vectors(dirs), j.at("c_values").get<std::vector<double>>(),
                                  Eigen::Map<const Eigen::VectorXd>(center.data(), static_cast<Eigen::Index>(center.size())));
  s.variables = j.at("variables").get<std::vector<std::string>>();
  s.exceedance_probability = j.at("p_e").get<double>();
  s.return_period = j.at("T").get<double>();
  s.events_per_year = j.at("events_per_year").get<double>();
  return s;
}

void write_obj(const ContourSurface& s, std::ostream& out) {
  out << "# contour";
  for (const auto& v : s.variables) out << ' ' << v;
  out << fmt::format(" p_e={} T={}\n", s.exceedance_probability, s.return_period);
  for (const auto& v : s.vertices) {
    out << fmt::format("v {} {} {}\n", v[0], v[1], v.size() > 2 ? v[2] : 0.0);
  }
  for (const auto& f : s.facets) {
    out << (f.size() == 2 ? "l" : "f");
    for (auto i : f) out << ' ' << i + 1;
    out << '\n';
  }
}

SeaStateRecord contour_state(const std::vector<std::string>& variables, const Eigen::VectorXd& x,
                             const DirectionAssignment& directions) {
  SeaStateRecord r;
  r.hs = 0.0;
  r.ws = 0.0;
  r.cs = 0.0;
  r.dm = directions.dm;
  r.wdir = directions.wdir;
  r.cdir = directions.cdir;
  for (std::size_t i = 0; i < variables.size(); ++i) r.set(parse_field(variables[i]), x[static_cast<Eigen::Index>(i)]);
  return r;
}

DesignPoint find_design_point(const ContourSurface& surface, const MetaModelParams& params,
                              const DirectionAssignment& directions, const std::string& method, int refinement) {
  if (surface.vertices.empty()) throw Error("empty contour surface");
  if (refinement < 1) throw Error("refinement must be at least 1");
  params.validate();
  DesignPoint best;
  best.variables = surface.variables;
  best.method = method;
  bool have = false;
  auto consider = [&](const Eigen::VectorXd& x) {
    const auto t = max_tension(params, contour_state(surface.variables, x, directions));
    if (!have || t.t_max > best.response || (t.t_max == best.response && lex_less(x, best.location))) {
      best.location = x;
      best.response = t.t_max;
      best.tension = t;
      have = true;
    }
  };
  for (const auto& v : surface.vertices) consider(v);
  const int nref = refinement;
  for (const auto& f : surface.facets) {
    if (f.size() == 2) {
      for (int i = 1; i < nref; ++i) {
        const double t = static_cast<double>(i) / nref;
        consider((1.0 - t) * surface.vertices[f[0]] + t * surface.vertices[f[1]]);
      }
      continue;
    }
    for (int i = 0; i <= nref; ++i) {
      for (int j = 0; i + j <= nref; ++j) {
        const int k = nref - i - j;
        if (i == nref || j == nref || k == nref) continue;  // corners are vertices
        consider((static_cast<double>(i) * surface.vertices[f[0]] + static_cast<double>(j) * surface.vertices[f[1]] +
                  static_cast<double>(k) * surface.vertices[f[2]]) /
                 static_cast<double>(nref));
      }
    }
  }
  return best;
}

void write_design_points_csv(const std::vector<DesignPoint>& points, std::ostream& out) {
  if (points.empty()) throw Error("no design points to write");
  out << "method";
  for (const auto& v : points.front().variables) out << ',' << v;
  out << ",t_qs,sigma_lf,sigma_hf,t_max\n";
  for (const auto& p : points) {
    out << p.method;
    for (Eigen::Index i = 0; i < p.location.size(); ++i) out << ',' << fmt::format("{}", p.location[i]);
    out << fmt::format(",{},{},{},{}\n", p.tension.t_qs, p.tension.sigma_lf, p.tension.sigma_hf, p.tension.t_max);
  }
}

std::vector<EmpiricalCheckRow> empirical_contour_check(const Dataset& data, const MetaModelParams& params,
                                                       const std::vector<double>& quantile_grid,
                                                       const EmpiricalCheckOptions& options) {
  if (options.variables.empty()) throw Error("empty variable selection");
  if (options.block_length == 0) throw Error("block length must be positive");
  std::vector<Field> fields;
  for (const auto& v : options.variables) fields.push_back(parse_field(v));
  const auto tension = evaluate_batch(data, params);

  std::vector<double> response;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data.records()[i];
    if (!std::isfinite(tension[i].t_max)) continue;
    std::vector<double> row;
    bool ok = true;
    for (auto f : fields) {
      row.push_back(rec.get(f));
      ok = ok && std::isfinite(row.back());
    }
    if (!ok) continue;
    response.push_back(tension[i].t_max);
    rows.push_back(std::move(row));
  }
  const std::size_t n = response.size();
  if (n == 0) throw Error("no complete records for the empirical check");
  Eigen::MatrixXd sample(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < fields.size(); ++c)
      sample(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];

  for (double q : quantile_grid) {
    if (!(q > 0.0 && q < 1.0)) throw Error("quantile levels must lie in (0, 1)");
  }

  // Moving-block bootstrap of the response quantiles, all levels per resample.
  const std::size_t len = std::min(options.block_length, n);
  std::vector<std::vector<double>> boot(quantile_grid.size());
  std::vector<double> resample(n);
  for (std::size_t b = 0; b < options.bootstrap_resamples; ++b) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(b)));
    std::size_t filled = 0;
    while (filled < n) {
      const auto start = static_cast<std::size_t>(uniform_index(rng, n - len + 1));
      for (std::size_t k = 0; k < len && filled < n; ++k) resample[filled++] = response[start + k];
    }
    std::sort(resample.begin(), resample.end());
    for (std::size_t g = 0; g < quantile_grid.size(); ++g) {
      boot[g].push_back(resample[stats::upper_rank(n, quantile_grid[g]) - 1]);
    }
  }

  const auto grid = fields.size() == 3 ? DirectionGrid::icosphere(options.grid_level)
                                       : DirectionGrid::circle(options.circle);
  std::vector<EmpiricalCheckRow> out;
  for (std::size_t g = 0; g < quantile_grid.size(); ++g) {
    EmpiricalCheckRow row;
    row.quantile = quantile_grid[g];
    const double p_e = 1.0 - row.quantile;
    if (static_cast<double>(n) * p_e < static_cast<double>(options.min_exceedances)) {
      out.push_back(row);
      continue;
    }
    row.available = true;
    row.empirical = stats::order_statistic_quantile(response, row.quantile);
    const double a = 0.5 * (1.0 - options.level);
    row.ci_low = stats::quantile_linear(boot[g], a);
    row.ci_high = stats::quantile_linear(boot[g], 1.0 - a);
    ContourSurface surface;
    try {
      surface = build_contour_at(sample, options.variables, grid, p_e);
      row.construction = "hull";
    } catch (const Error&) {
      // Near the median the projection quantiles stop bounding a body.
      row.construction = "support_plane";
    }
    row.contour = row.construction == "hull"
                      ? find_design_point(surface, params, options.directions, "empirical").response
                      : support_plane_point(sample, options.variables, params, options.directions, p_e).response;
    row.relative_error = (row.contour - row.empirical) / row.empirical;
    out.push_back(row);
  }
  return out;
}

nlohmann::json empirical_check_json(const std::vector<EmpiricalCheckRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"quantile", r.quantile}, {"available", r.available}};
    if (r.available) {
      j["empirical"] = r.empirical;
      j["ci_low"] = r.ci_low;
      j["ci_high"] = r.ci_high;
      j["contour"] = r.contour;
      j["relative_error"] = r.relative_error;
      j["inside_ci"] = r.contour >= r.ci_low && r.contour <= r.ci_high;
      j["construction"] = r.construction;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace metocean
