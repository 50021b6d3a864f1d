#include "metocean/hull.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "metocean/error.hpp"

namespace metocean {

std::vector<std::size_t> convex_hull_2d(const std::vector<Eigen::Vector2d>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error("planar hull needs at least three points");
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale * scale;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return points[a].x() < points[b].x() || (points[a].x() == points[b].x() && points[a].y() < points[b].y());
  });
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    const Eigen::Vector2d u = points[a] - points[o];
    const Eigen::Vector2d v = points[b] - points[o];
    return u.x() * v.y() - u.y() * v.x();
  };
  std::vector<std::size_t> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], idx[i]) <= tol) --k;
    h[k++] = idx[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], idx[i]) <= tol) --k;
    h[k++] = idx[i];
  }
  h.resize(k - 1);
  if (h.size() < 3) throw Error("planar hull is degenerate (collinear points)");
  return h;
}

namespace {

struct Face {
  std::array<std::size_t, 3> v{};
  Eigen::Vector3d normal;
  double offset = 0.0;
  bool alive = true;
};

std::uint64_t edge_key(std::size_t a, std::size_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

class Hull3 {
 public:
  explicit Hull3(const std::vector<Eigen::Vector3d>& p) : pts_(p) {
    if (p.size() < 4) throw Error("spatial hull needs at least four points");
    if (p.size() >= (std::size_t{1} << 32)) throw Error("too many hull points");
    double scale = 0.0;
    for (const auto& q : p) scale = std::max(scale, q.norm());
    eps_ = 1e-11 * scale;
  }

  std::vector<HullFacet> run() {
    initial_simplex();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (!used_[i]) insert(i);
    }
    std::vector<HullFacet> out;
    for (const auto& f : faces_) {
      if (f.alive) out.push_back({f.v, f.normal, f.offset});
    }
    return out;
  }

 private:
  double dist(const Face& f, std::size_t i) const { return f.normal.dot(pts_[i]) - f.offset; }

  void add_face(std::size_t a, std::size_t b, std::size_t c, const Eigen::Vector3d& fallback) {
    Face f;
    f.v = {a, b, c};
    Eigen::Vector3d n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    f.normal = len > 0.0 ? Eigen::Vector3d(n / len) : fallback;
    f.offset = f.normal.dot((pts_[a] + pts_[b] + pts_[c]) / 3.0);
    const std::size_t id = faces_.size();
    faces_.push_back(f);
    edges_[edge_key(a, b)] = id;
    edges_[edge_key(b, c)] = id;
    edges_[edge_key(c, a)] = id;
  }

  void initial_simplex() {
    const std::size_t n = pts_.size();
    used_.assign(n, false);
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (pts_[i].x() < pts_[i0].x()) i0 = i;
    }
    std::size_t i1 = i0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (pts_[i] - pts_[i0]).norm();
      if (d > best) best = d, i1 = i;
    }
    const Eigen::Vector3d dir = (pts_[i1] - pts_[i0]).normalized();
    std::size_t i2 = i0;
    best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d r = pts_[i] - pts_[i0];
      const double d = (r - r.dot(dir) * dir).norm();
      if (d > best) best = d, i2 = i;
    }
    const Eigen::Vector3d nrm = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    std::size_t i3 = i0;
    best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(nrm.dot(pts_[i] - pts_[i0]));
      if (d > best) best = d, i3 = i;
    }
    if (best <= 100.0 * eps_ || i2 == i0) throw Error("spatial hull is degenerate (coplanar points)");
    interior_ = (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]) / 4.0;
    const std::array<std::array<std::size_t, 3>, 4> tets{{{i0, i1, i2}, {i0, i1, i3}, {i0, i2, i3}, {i1, i2, i3}}};
    for (auto t : tets) {
      const Eigen::Vector3d n = (pts_[t[1]] - pts_[t[0]]).cross(pts_[t[2]] - pts_[t[0]]);
      if (n.dot(pts_[t[0]] - interior_) < 0.0) std::swap(t[1], t[2]);
      add_face(t[0], t[1], t[2], Eigen::Vector3d::UnitZ());
    }
    for (auto i : {i0, i1, i2, i3}) used_[i] = true;
  }

  void insert(std::size_t p) {
    std::size_t start = faces_.size();
    double best = eps_;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (!faces_[f].alive) continue;
      const double d = dist(faces_[f], p);
      if (d > best) best = d, start = f;
    }
    if (start == faces_.size()) return;  // inside or on the hull
    used_[p] = true;

    std::vector<std::size_t> visible{start};
    std::vector<char> mark(faces_.size(), 0);
    mark[start] = 1;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const auto& f = faces_[visible[k]];
      for (int e = 0; e < 3; ++e) {
        const auto it = edges_.find(edge_key(f.v[(e + 1) % 3], f.v[e]));
        if (it == edges_.end()) continue;
        const std::size_t g = it->second;
        if (!mark[g] && dist(faces_[g], p) > eps_) {
          mark[g] = 1;
          visible.push_back(g);
        }
      }
    }
    struct Horizon {
      std::size_t a, b;
      Eigen::Vector3d normal;
    };
    std::vector<Horizon> horizon;
    for (std::size_t fid : visible) {
      const auto& f = faces_[fid];
      for (int e = 0; e < 3; ++e) {
        const std::size_t a = f.v[e], b = f.v[(e + 1) % 3];
        const auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end() || !mark[it->second]) horizon.push_back({a, b, f.normal});
      }
    }
    for (std::size_t fid : visible) {
      auto& f = faces_[fid];
      f.alive = false;
      for (int e = 0; e < 3; ++e) {
        const auto it = edges_.find(edge_key(f.v[e], f.v[(e + 1) % 3]));
        if (it != edges_.end() && it->second == fid) edges_.erase(it);
      }
    }
    for (const auto& h : horizon) add_face(h.a, h.b, p, h.normal);
    ++dead_since_compact_;
    if (dead_since_compact_ > 64 && faces_.size() > 4 * alive_count()) compact();
  }

  std::size_t alive_count() const {
    return static_cast<std::size_t>(std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.alive; }));
  }

  void compact() {
    std::vector<Face> kept;
    for (const auto& f : faces_) {
      if (f.alive) kept.push_back(f);
    }
    faces_ = std::move(kept);
    edges_.clear();
    for (std::size_t id = 0; id < faces_.size(); ++id) {
      const auto& v = faces_[id].v;
      edges_[edge_key(v[0], v[1])] = id;
      edges_[edge_key(v[1], v[2])] = id;
      edges_[edge_key(v[2], v[0])] = id;
    }
    dead_since_compact_ = 0;
  }

  const std::vector<Eigen::Vector3d>& pts_;
  double eps_ = 0.0;
  Eigen::Vector3d interior_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, std::size_t> edges_;
  std::vector<bool> used_;
  std::size_t dead_since_compact_ = 0;
};

}  // namespace

std::vector<HullFacet> convex_hull_3d(const std::vector<Eigen::Vector3d>& points) { return Hull3(points).run(); }

}  // namespace metocean
