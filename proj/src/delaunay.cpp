#include "corrvae/delaunay.hpp"

#include "corrvae/error.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace corrvae {

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Positive when d lies inside the circumcircle of counter-clockwise (a, b, c).
double in_circle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                 const Eigen::Vector2d& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

std::vector<int> convex_hull(const std::vector<Eigen::Vector2d>& pts) {
  std::vector<int> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int l, int r) {
    return std::make_pair(pts[static_cast<std::size_t>(l)].x(), pts[static_cast<std::size_t>(l)].y()) <
           std::make_pair(pts[static_cast<std::size_t>(r)].x(), pts[static_cast<std::size_t>(r)].y());
  });
  std::vector<int> hull(2 * idx.size());
  std::size_t k = 0;
  auto at = [&](int i) -> const Eigen::Vector2d& { return pts[static_cast<std::size_t>(i)]; };
  for (int i : idx) {
    while (k >= 2 && cross(at(hull[k - 2]), at(hull[k - 1]), at(i)) <= 0.0) --k;
    hull[k++] = i;
  }
  for (std::size_t t = idx.size() - 1, lower = k + 1; t-- > 0;) {
    const int i = idx[t];
    while (k >= lower && cross(at(hull[k - 2]), at(hull[k - 1]), at(i)) <= 0.0) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

Triangulation::Triangulation(std::vector<Eigen::Vector2d> points) : points_(std::move(points)) {
  const auto n = static_cast<int>(points_.size());
  if (n < 3) throw DataError("sensitivity", "triangulation needs at least 3 points");
  Eigen::Vector2d lo = points_.front(), hi = points_.front();
  for (const auto& p : points_) {
    if (!p.allFinite()) throw NumericalError("sensitivity", "non-finite triangulation point");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  scale_ = std::max((hi - lo).maxCoeff(), std::numeric_limits<double>::min());
  hull_ = convex_hull(points_);
  if (hull_.size() < 3) throw DataError("sensitivity", "triangulation points are collinear");

  // Super triangle vertices get indices n, n+1, n+2.
  const Eigen::Vector2d center = 0.5 * (lo + hi);
  const double r = 1e4 * scale_;
  std::vector<Eigen::Vector2d> all = points_;
  all.emplace_back(center.x() - 2.0 * r, center.y() - r);
  all.emplace_back(center.x() + 2.0 * r, center.y() - r);
  all.emplace_back(center.x(), center.y() + 2.0 * r);
  auto at = [&](int i) -> const Eigen::Vector2d& { return all[static_cast<std::size_t>(i)]; };

  std::vector<std::array<int, 3>> tris{{n, n + 1, n + 2}};
  for (int i = 0; i < n; ++i) {
    std::vector<std::array<int, 3>> keep;
    std::map<std::pair<int, int>, int> edge_count;
    std::vector<std::pair<int, int>> edges;
    for (const auto& t : tris) {
      if (in_circle(at(t[0]), at(t[1]), at(t[2]), at(i)) > 0.0) {
        for (int e = 0; e < 3; ++e) {
          const int a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
          ++edge_count[std::minmax(a, b)];
          edges.emplace_back(a, b);
        }
      } else {
        keep.push_back(t);
      }
    }
    for (const auto& [a, b] : edges) {
      if (edge_count[std::minmax(a, b)] != 1) continue;
      if (cross(at(a), at(b), at(i)) > 0.0) keep.push_back({a, b, i});
    }
    tris = std::move(keep);
  }
  for (const auto& t : tris)
    if (t[0] < n && t[1] < n && t[2] < n) triangles_.push_back(t);

  // Close pockets between the triangulated region and the convex hull.
  while (true) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : triangles_)
      for (int e = 0; e < 3; ++e) ++count[std::minmax(t[static_cast<std::size_t>(e)], t[static_cast<std::size_t>((e + 1) % 3)])];
    std::map<int, int> next;
    for (const auto& t : triangles_)
      for (int e = 0; e < 3; ++e) {
        const int a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
        if (count[std::minmax(a, b)] == 1) next[a] = b;
      }
    bool added = false;
    for (const auto& [a, b] : next) {
      auto it = next.find(b);
      if (it == next.end()) continue;
      const int c = it->second;
      if (cross(points_[static_cast<std::size_t>(a)], points_[static_cast<std::size_t>(b)],
                points_[static_cast<std::size_t>(c)]) < -1e-14 * scale_ * scale_) {
        triangles_.push_back({a, c, b});
        added = true;
        break;
      }
    }
    if (!added) break;
  }
  if (triangles_.empty()) throw DataError("sensitivity", "degenerate triangulation");
}

std::optional<Triangulation::Location> Triangulation::locate(const Eigen::Vector2d& p, double tol) const {
  std::optional<Location> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    const auto& t = triangles_[k];
    const auto& a = points_[static_cast<std::size_t>(t[0])];
    const auto& b = points_[static_cast<std::size_t>(t[1])];
    const auto& c = points_[static_cast<std::size_t>(t[2])];
    const double area = cross(a, b, c);
    if (area <= 0.0) continue;
    Eigen::Vector3d w(cross(p, b, c) / area, cross(a, p, c) / area, 0.0);
    w(2) = 1.0 - w(0) - w(1);
    const double m = w.minCoeff();
    if (m >= -tol && m > best_min) {
      best_min = m;
      best = Location{static_cast<int>(k), w};
      if (m >= 0.0) break;
    }
  }
  return best;
}

bool Triangulation::inside_hull(const Eigen::Vector2d& p, double tol) const {
  for (std::size_t i = 0; i < hull_.size(); ++i) {
    const auto& a = points_[static_cast<std::size_t>(hull_[i])];
    const auto& b = points_[static_cast<std::size_t>(hull_[(i + 1) % hull_.size()])];
    if (cross(a, b, p) / (b - a).norm() < -tol) return false;
  }
  return true;
}

Eigen::Vector2d Triangulation::project_to_hull(const Eigen::Vector2d& p) const {
  if (inside_hull(p)) return p;
  Eigen::Vector2d best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull_.size(); ++i) {
    const auto& a = points_[static_cast<std::size_t>(hull_[i])];
    const auto& b = points_[static_cast<std::size_t>(hull_[(i + 1) % hull_.size()])];
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Eigen::Vector2d q = a + t * ab;
    const double d = (p - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

}  // namespace corrvae
