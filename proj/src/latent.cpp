#include "corrvae/latent.hpp"

#include "corrvae/error.hpp"
#include "corrvae/parallel.hpp"
#include "corrvae/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace corrvae {

std::vector<Eigen::Vector2d> LatentSeries::points() const {
  std::vector<Eigen::Vector2d> out;
  out.reserve(size());
  for (std::size_t t = 0; t < size(); ++t) out.push_back(point(t));
  return out;
}

LatentSeries latent_series(const std::vector<LatentEncoding>& encodings,
                           const std::vector<std::string>& timestamps) {
  if (!timestamps.empty() && timestamps.size() != encodings.size())
    throw DataError("latent", "timestamp count does not match encodings");
  LatentSeries s;
  s.timestamps = timestamps;
  for (const auto& e : encodings) {
    s.mu1.push_back(e.mu(0));
    s.mu2.push_back(e.mu(1));
  }
  return s;
}

EigenFeatureSeries eigen_features(const MatrixPanel& panel) {
  std::vector<EigenDecomposition<double>> decs;
  decs.reserve(panel.size());
  for (const auto& m : panel.matrices) decs.push_back(eigh_symmetric(m.values()));
  return eigen_features(std::move(decs));
}

EigenFeatureSeries eigen_features(std::vector<EigenDecomposition<double>> decs) {
  if (decs.empty()) throw DataError("latent", "eigen_features: empty panel");
  const auto m = decs.front().eigenvectors.rows();
  if (m < 2) throw DataError("latent", "eigen_features: need at least 2 assets");

  Eigen::VectorXd mean1 = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd mean2 = Eigen::VectorXd::Zero(m);
  for (auto& d : decs) {
    if (d.eigenvectors.rows() != m) throw DataError("latent", "eigen_features: mixed dimensions");
    apply_sign_convention(d.eigenvectors);
    mean1 += d.eigenvectors.col(0);
    mean2 += d.eigenvectors.col(1);
  }
  mean1 /= double(decs.size());
  mean2 /= double(decs.size());
  if (mean1.norm() < 1e-12 || mean2.norm() < 1e-12)
    throw NumericalError("latent", "eigen_features: mean eigenvector has zero norm");

  EigenFeatureSeries out;
  for (const auto& d : decs) {
    const Eigen::VectorXd v1 = d.eigenvectors.col(0);
    const Eigen::VectorXd v2 = d.eigenvectors.col(1);
    out.lambda1.push_back(d.eigenvalues(0));
    out.lambda2.push_back(d.eigenvalues(1));
    out.alpha1.push_back(mean1.dot(v1) / (mean1.norm() * v1.norm()));
    out.alpha2.push_back(mean2.dot(v2) / (mean2.norm() * v2.norm()));
  }
  return out;
}

double series_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("latent", "series lengths differ");
  if (x.size() < 2) throw DataError("latent", "need at least two observations");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DataError("latent", "correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double LatentEigenReport::max_abs_lambda1() const {
  return std::max(std::abs(mu1_lambda1), std::abs(mu2_lambda1));
}

LatentEigenReport latent_eigen_correlation(const LatentSeries& latent, const EigenFeatureSeries& f) {
  if (latent.size() != f.size()) throw DataError("latent", "latent and eigen series are not aligned");
  LatentEigenReport r;
  r.mu1_lambda1 = series_correlation(latent.mu1, f.lambda1);
  r.mu2_lambda1 = series_correlation(latent.mu2, f.lambda1);
  r.mu1_alpha1 = series_correlation(latent.mu1, f.alpha1);
  r.mu1_alpha2 = series_correlation(latent.mu1, f.alpha2);
  r.mu2_alpha1 = series_correlation(latent.mu2, f.alpha1);
  r.mu2_alpha2 = series_correlation(latent.mu2, f.alpha2);
  return r;
}

bool BoundingBox::contains(const Eigen::Vector2d& p, double tol) const {
  return p.x() >= lo.x() - tol && p.x() <= hi.x() + tol && p.y() >= lo.y() - tol &&
         p.y() <= hi.y() + tol;
}

BoundingBox bounding_box(const std::vector<Eigen::Vector2d>& points) {
  if (points.empty()) throw DataError("latent", "bounding box of no points");
  BoundingBox box{points.front(), points.front()};
  for (const auto& p : points) {
    if (!p.allFinite()) throw NumericalError("latent", "non-finite latent point");
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  return box;
}

std::vector<int> partition_latent(const std::vector<Eigen::Vector2d>& points, int rows, int cols) {
  if (points.empty()) throw DataError("latent", "partition_latent: no points");
  if (rows < 1 || cols < 1) throw ConfigError("latent", "partition_latent: rows and cols must be >= 1");
  const auto box = bounding_box(points);
  auto cell = [](double v, double lo, double hi, int n) {
    const double width = hi - lo;
    if (!(width > 0.0)) return 0;
    // ceil(...) - 1 sends an exact boundary to the lower cell.
    const int idx = static_cast<int>(std::ceil((v - lo) / width * n)) - 1;
    return std::clamp(idx, 0, n - 1);
  };
  std::vector<int> labels;
  labels.reserve(points.size());
  for (const auto& p : points) {
    const int c = cell(p.x(), box.lo.x(), box.hi.x(), cols);
    const int r = cell(p.y(), box.lo.y(), box.hi.y(), rows);
    labels.push_back(r * cols + c);
  }
  return labels;
}

LatentGrid build_grid(const std::vector<Eigen::Vector2d>& points, int count, double margin,
                      std::uint64_t seed) {
  if (count < 1) throw ConfigError("latent", "grid count must be >= 1");
  if (!(margin >= 0.0)) throw ConfigError("latent", "grid margin must be >= 0");
  auto box = bounding_box(points);
  const double pad = margin * (box.hi - box.lo).norm();
  box.lo.array() -= pad;
  box.hi.array() += pad;
  if (!((box.hi - box.lo).minCoeff() > 0.0))
    throw DataError("latent", "degenerate latent bounding box; cannot build a grid");

  const int cols = static_cast<int>(std::ceil(std::sqrt(double(count))));
  const int rows = (count + cols - 1) / cols;
  const bool pin_corners = count >= 4;
  auto is_corner = [&](int r, int c) {
    return pin_corners && (r == 0 || r == rows - 1) && (c == 0 || c == cols - 1);
  };

  Rng rng = make_rng(seed, "latent-grid");
  std::vector<int> interior;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!is_corner(r, c)) interior.push_back(r * cols + c);
  std::shuffle(interior.begin(), interior.end(), rng);
  std::vector<bool> keep(static_cast<std::size_t>(rows * cols), true);
  for (int k = 0; k < rows * cols - count; ++k) keep[static_cast<std::size_t>(interior[static_cast<std::size_t>(k)])] = false;

  const Eigen::Vector2d size((box.hi.x() - box.lo.x()) / cols, (box.hi.y() - box.lo.y()) / rows);
  LatentGrid grid;
  grid.box = box;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!keep[static_cast<std::size_t>(r * cols + c)]) continue;
      const double ux = uniform01(rng);
      const double uy = uniform01(rng);
      Eigen::Vector2d p;
      if (is_corner(r, c)) {
        p = {c == 0 ? box.lo.x() : box.hi.x(), r == 0 ? box.lo.y() : box.hi.y()};
      } else {
        p = {box.lo.x() + (c + ux) * size.x(), box.lo.y() + (r + uy) * size.y()};
      }
      grid.points.push_back(p);
    }
  }
  return grid;
}

MatrixPanel generate_synthetic_panel(const VaeModel& model, const LatentGrid& grid, int threads) {
  if (grid.points.empty()) throw DataError("latent", "empty latent grid");
  MatrixPanel panel;
  panel.matrices.resize(grid.size());
  parallel_for(static_cast<long>(grid.size()), threads, [&](long i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      panel.matrices[idx] = CorrelationMatrix::repaired(model.labels, decode(model, grid.points[idx]));
    } catch (const Error& e) {
      throw NumericalError("latent", "grid point " + std::to_string(i) + ": " + e.what());
    }
  });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "grid%03zu", i);
    panel.dates.emplace_back(name);
  }
  return panel;
}

}  // namespace corrvae
