#include "corrvae/sensitivity.hpp"

#include "corrvae/error.hpp"
#include "corrvae/io.hpp"
#include "corrvae/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace corrvae {

namespace {

double sorted_quantile(const std::vector<double>& sorted, double q) {
  const auto n = sorted.size();
  auto idx = static_cast<std::size_t>(std::ceil(q * double(n)));
  idx = std::clamp<std::size_t>(idx, 1, n) - 1;
  return sorted[idx];
}

}  // namespace

VarSurface::VarSurface(std::vector<Eigen::Vector2d> points, std::vector<double> values)
    : values_(std::move(values)) {
  if (points.size() != values_.size())
    throw DataError("sensitivity", "surface needs one value per grid point");
  for (double v : values_)
    if (!std::isfinite(v)) throw NumericalError("sensitivity", "non-finite VaR on the surface");
  triangulation_ = std::make_shared<const Triangulation>(std::move(points));
}

std::string surface_to_csv(const VarSurface& surface) {
  std::vector<double> z1, z2;
  for (const auto& p : surface.points()) {
    z1.push_back(p.x());
    z2.push_back(p.y());
  }
  return io::table_to_csv({"z1", "z2", "var"}, {z1, z2, surface.values()});
}

VarSurface surface_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (io::split_csv_line(line) != std::vector<std::string>{"z1", "z2", "var"})
    throw DataError("sensitivity", "surface CSV must have header z1,z2,var");
  std::vector<Eigen::Vector2d> points;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 3) throw DataError("sensitivity", "ragged surface row " + std::to_string(row));
    points.emplace_back(io::parse_double(cells[0], row, 0), io::parse_double(cells[1], row, 1));
    values.push_back(io::parse_double(cells[2], row, 2));
  }
  return VarSurface(std::move(points), std::move(values));
}

VarEvaluator monte_carlo_evaluator(PortfolioSpec portfolio, SimConfig cfg) {
  return [portfolio = std::move(portfolio), cfg](const CorrelationMatrix& s) {
    return var_quantile(simulate_losses(portfolio, s, cfg), cfg.quantile);
  };
}

VarSurface build_var_surface(const VaeModel& model, const LatentGrid& grid, const VarEvaluator& evaluate,
                             int threads) {
  if (grid.points.size() < 3) throw DataError("sensitivity", "surface needs at least 3 grid points");
  std::vector<double> values(grid.size());
  parallel_for(static_cast<long>(grid.size()), threads, [&](long i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      const auto s = CorrelationMatrix::repaired(model.labels, decode(model, grid.points[idx]));
      values[idx] = evaluate(s);
    } catch (const Error& e) {
      throw NumericalError("sensitivity", "grid point " + std::to_string(i) + ": " + e.what());
    }
  });
  return VarSurface(grid.points, std::move(values));
}

Interpolated interpolate_var(const VarSurface& surface, const Eigen::Vector2d& z, bool clamp_to_hull) {
  if (!z.allFinite()) throw NumericalError("sensitivity", "non-finite latent point");
  const auto& tri = surface.triangulation();
  const double tol = 1e-9 * tri.scale();
  Interpolated out;
  Eigen::Vector2d p = z;
  if (!tri.inside_hull(z, tol)) {
    if (!clamp_to_hull)
      throw DataError("sensitivity", "latent point outside the surface hull; enable clamping to extrapolate");
    p = tri.project_to_hull(z);
    out.clamped = true;
  }
  auto loc = tri.locate(p, 1e-12);
  if (!loc) loc = tri.locate(p, 1e-6);
  if (!loc) throw NumericalError("sensitivity", "no triangle contains the latent point");
  // Clip tiny negative weights from boundary round-off and renormalize.
  Eigen::Vector3d w = loc->weights.cwiseMax(0.0);
  w /= w.sum();
  const auto& t = tri.triangles()[static_cast<std::size_t>(loc->triangle)];
  const auto& v = surface.values();
  out.value = w(0) * v[static_cast<std::size_t>(t[0])] + w(1) * v[static_cast<std::size_t>(t[1])] +
              w(2) * v[static_cast<std::size_t>(t[2])];
  // Exact reproduction at nodes.
  for (int k = 0; k < 3; ++k)
    if (w(k) == 1.0) out.value = v[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
  return out;
}

BootstrapScheme scheme_from_string(const std::string& name) {
  if (name == "simple") return BootstrapScheme::simple;
  if (name == "block") return BootstrapScheme::block;
  throw ConfigError("sensitivity", "unknown bootstrap scheme '" + name + "'");
}

std::string to_string(BootstrapScheme s) { return s == BootstrapScheme::simple ? "simple" : "block"; }

void BootstrapConfig::validate() const {
  if (block_length < 1) throw ConfigError("sensitivity", "block length must be >= 1");
  if (horizon < 1) throw ConfigError("sensitivity", "horizon must be >= 1");
  if (resamples < 1) throw ConfigError("sensitivity", "resamples must be >= 1");
}

std::vector<Eigen::Vector2d> bootstrap_latent_paths(const LatentSeries& series, const BootstrapConfig& cfg) {
  cfg.validate();
  const int block = cfg.scheme == BootstrapScheme::simple ? 1 : cfg.block_length;
  if (series.size() < static_cast<std::size_t>(block) + 1)
    throw DataError("sensitivity", "latent series too short for block length " + std::to_string(block));

  std::vector<Eigen::Vector2d> diffs;
  for (std::size_t t = 1; t < series.size(); ++t) diffs.push_back(series.point(t) - series.point(t - 1));
  const Eigen::Vector2d last = series.point(series.size() - 1);

  Rng rng = make_rng(cfg.seed, "bootstrap");
  std::uniform_int_distribution<std::size_t> start_dist(0, diffs.size() - 1);
  std::vector<Eigen::Vector2d> endpoints;
  endpoints.reserve(static_cast<std::size_t>(cfg.resamples));
  for (int r = 0; r < cfg.resamples; ++r) {
    Eigen::Vector2d end = last;
    int filled = 0;
    while (filled < cfg.horizon) {
      const std::size_t start = start_dist(rng);
      for (int k = 0; k < block && filled < cfg.horizon; ++k, ++filled)
        end += diffs[(start + static_cast<std::size_t>(k)) % diffs.size()];
    }
    endpoints.push_back(end);
  }
  return endpoints;
}

VarDistributionReport var_distribution(const VarSurface& surface, const std::vector<Eigen::Vector2d>& endpoints,
                                       int bins, bool clamp_to_hull) {
  if (endpoints.empty()) throw DataError("sensitivity", "no bootstrap endpoints");
  VarDistributionReport r;
  for (const auto& z : endpoints) {
    const auto v = interpolate_var(surface, z, clamp_to_hull);
    r.samples.push_back(v.value);
    if (v.clamped) ++r.clamped;
  }
  if (r.clamped == endpoints.size())
    throw DataError("sensitivity", "every bootstrap endpoint lies outside the surface hull");
  std::vector<double> sorted = r.samples;
  std::sort(sorted.begin(), sorted.end());
  r.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(sorted.size());
  r.q05 = sorted_quantile(sorted, 0.05);
  r.q50 = sorted_quantile(sorted, 0.50);
  r.q95 = sorted_quantile(sorted, 0.95);
  const double lo = sorted.front();
  const double hi = sorted.back() > lo ? sorted.back() : lo + 1.0;
  r.histogram = make_histogram(r.samples, lo, hi, bins);
  return r;
}

std::string var_distribution_to_json(const VarDistributionReport& r, const BootstrapConfig& cfg) {
  nlohmann::json j;
  j["scheme"] = to_string(cfg.scheme);
  j["block_length"] = cfg.scheme == BootstrapScheme::simple ? 1 : cfg.block_length;
  j["horizon"] = cfg.horizon;
  j["resamples"] = cfg.resamples;
  j["seed"] = cfg.seed;
  j["samples"] = r.samples.size();
  j["mean"] = r.mean;
  j["q05"] = r.q05;
  j["q50"] = r.q50;
  j["q95"] = r.q95;
  j["clamped"] = r.clamped;
  return j.dump(2) + "\n";
}

}  // namespace corrvae
