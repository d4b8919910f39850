#pragma once

#include "corrvae/autoencoders.hpp"
#include "corrvae/corrdata.hpp"
#include "corrvae/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace corrvae {

/// Posterior means of the historical matrices, chronological.
struct LatentSeries {
  std::vector<std::string> timestamps;
  std::vector<double> mu1;
  std::vector<double> mu2;

  std::size_t size() const noexcept { return mu1.size(); }
  Eigen::Vector2d point(std::size_t t) const { return {mu1[t], mu2[t]}; }
  std::vector<Eigen::Vector2d> points() const;
};

LatentSeries latent_series(const std::vector<LatentEncoding>& encodings,
                           const std::vector<std::string>& timestamps);

/// Top two eigenvalues and the cosine similarity of the top two
/// eigenvectors with their across-time mean.
struct EigenFeatureSeries {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> alpha1;
  std::vector<double> alpha2;

  std::size_t size() const noexcept { return lambda1.size(); }
};

EigenFeatureSeries eigen_features(const MatrixPanel& panel);
/// Applies the eigenvector sign convention before averaging, so the result
/// does not depend on the signs the decompositions arrive with.
EigenFeatureSeries eigen_features(std::vector<EigenDecomposition<double>> decompositions);

/// Sample Pearson correlation; throws DataError for a constant series.
double series_correlation(const std::vector<double>& x, const std::vector<double>& y);

struct LatentEigenReport {
  double mu1_lambda1 = 0.0;
  double mu2_lambda1 = 0.0;
  double mu1_alpha1 = 0.0;
  double mu1_alpha2 = 0.0;
  double mu2_alpha1 = 0.0;
  double mu2_alpha2 = 0.0;

  /// Axis orientation is arbitrary, so the magnitude is what carries meaning.
  double max_abs_lambda1() const;
};

LatentEigenReport latent_eigen_correlation(const LatentSeries& latent, const EigenFeatureSeries& features);

struct BoundingBox {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;

  bool contains(const Eigen::Vector2d& p, double tol = 0.0) const;
};

BoundingBox bounding_box(const std::vector<Eigen::Vector2d>& points);

/// rows x cols rectangular cells over the bounding box, label = row * cols
/// + col with rows along mu2. A point on a shared edge goes to the
/// lower-index cell.
std::vector<int> partition_latent(const std::vector<Eigen::Vector2d>& points, int rows = 3, int cols = 3);

struct LatentGrid {
  std::vector<Eigen::Vector2d> points;
  BoundingBox box;

  std::size_t size() const noexcept { return points.size(); }
};

/// Jittered lattice over the points' bounding box inflated on every side by
/// margin times its diagonal. cols = ceil(sqrt(count)), rows =
/// ceil(count / cols); surplus cells are dropped at random from the
/// interior and, for count >= 4, the four corner cells sit exactly on the box
/// corners so the grid hull covers the box.
LatentGrid build_grid(const std::vector<Eigen::Vector2d>& points, int count = 132, double margin = 0.2,
                      std::uint64_t seed = 0);

/// Decodes and repairs each grid point, in grid order.
MatrixPanel generate_synthetic_panel(const VaeModel& model, const LatentGrid& grid, int threads = 1);

}  // namespace corrvae
