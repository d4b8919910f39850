#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace corrvae {

/// Planar triangulation of a point set covering its convex hull.
///
/// Built with Bowyer-Watson; any hull pockets left by the finite super
/// triangle are closed by clipping concave boundary vertices, so every
/// point inside the hull lies in some triangle.
class Triangulation {
 public:
  explicit Triangulation(std::vector<Eigen::Vector2d> points);

  struct Location {
    int triangle = -1;
    Eigen::Vector3d weights;  // barycentric, sum to 1
  };

  const std::vector<Eigen::Vector2d>& points() const noexcept { return points_; }
  /// Counter-clockwise vertex indices.
  const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  /// Convex hull, counter-clockwise.
  const std::vector<int>& hull() const noexcept { return hull_; }

  /// Triangle containing p, allowing barycentric weights down to -tol.
  std::optional<Location> locate(const Eigen::Vector2d& p, double tol = 1e-12) const;
  bool inside_hull(const Eigen::Vector2d& p, double tol = 0.0) const;
  /// Nearest point of the hull (p itself when inside).
  Eigen::Vector2d project_to_hull(const Eigen::Vector2d& p) const;
  /// Largest extent of the point cloud, for scaling tolerances.
  double scale() const noexcept { return scale_; }

 private:
  std::vector<Eigen::Vector2d> points_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> hull_;
  double scale_ = 1.0;
};

}  // namespace corrvae
