#pragma once

#include "corrvae/autoencoders.hpp"
#include "corrvae/creditrisk.hpp"
#include "corrvae/delaunay.hpp"
#include "corrvae/latent.hpp"
#include "corrvae/stylized_facts.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace corrvae {

/// VaR values at latent grid points with piecewise-linear interpolation
/// over their Delaunay triangulation.
class VarSurface {
 public:
  VarSurface(std::vector<Eigen::Vector2d> points, std::vector<double> values);

  const std::vector<Eigen::Vector2d>& points() const { return triangulation_->points(); }
  const std::vector<double>& values() const noexcept { return values_; }
  const Triangulation& triangulation() const noexcept { return *triangulation_; }
  std::string method() const { return "delaunay-barycentric"; }

 private:
  std::shared_ptr<const Triangulation> triangulation_;
  std::vector<double> values_;
};

std::string surface_to_csv(const VarSurface& surface);
VarSurface surface_from_csv(const std::string& text);

using VarEvaluator = std::function<double(const CorrelationMatrix&)>;

/// Simulates the portfolio under the matrix and takes the cfg.quantile VaR.
VarEvaluator monte_carlo_evaluator(PortfolioSpec portfolio, SimConfig cfg);

/// decode -> repair -> evaluate for every grid point, stored in grid order.
VarSurface build_var_surface(const VaeModel& model, const LatentGrid& grid, const VarEvaluator& evaluate,
                             int threads = 1);

struct Interpolated {
  double value = 0.0;
  bool clamped = false;
};

/// Exact at nodes, a convex combination of one triangle's nodes elsewhere.
/// Outside the hull (beyond a 1e-9 relative tolerance) this throws unless
/// `clamp_to_hull`, in which case z is moved to the nearest hull point.
Interpolated interpolate_var(const VarSurface& surface, const Eigen::Vector2d& z, bool clamp_to_hull = false);

enum class BootstrapScheme { simple, block };

BootstrapScheme scheme_from_string(const std::string& name);
std::string to_string(BootstrapScheme s);

struct BootstrapConfig {
  BootstrapScheme scheme = BootstrapScheme::block;
  int block_length = 11;
  int horizon = 12;
  int resamples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Endpoints last mu + sum of `horizon` resampled joint differences of
/// (mu1, mu2). The simple scheme is the block scheme with block length 1.
std::vector<Eigen::Vector2d> bootstrap_latent_paths(const LatentSeries& series, const BootstrapConfig& cfg);

struct VarDistributionReport {
  std::vector<double> samples;  // one per endpoint, endpoint order
  double mean = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  std::size_t clamped = 0;
  Histogram histogram;
};

/// Interpolated VaR at each endpoint. Without clamping an endpoint outside
/// the surface hull is an error.
VarDistributionReport var_distribution(const VarSurface& surface, const std::vector<Eigen::Vector2d>& endpoints,
                                       int bins = 30, bool clamp_to_hull = true);
std::string var_distribution_to_json(const VarDistributionReport& report, const BootstrapConfig& cfg);

}  // namespace corrvae
