#include "corrvae/error.hpp"
#include "corrvae/random.hpp"
#include "corrvae/sensitivity.hpp"

#include <doctest.h>

#include "json.hpp"

#include <algorithm>
#include <random>

using namespace corrvae;

namespace {

std::vector<Eigen::Vector2d> scattered(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
  return pts;
}

double affine(const Eigen::Vector2d& z) { return 3.0 + 1.5 * z.x() - 0.25 * z.y(); }

VarSurface affine_surface(const std::vector<Eigen::Vector2d>& pts) {
  std::vector<double> v;
  for (const auto& p : pts) v.push_back(affine(p));
  return VarSurface(pts, v);
}

bool in_circumcircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                     const Eigen::Vector2d& p) {
  const Eigen::Vector2d ad = a - p, bd = b - p, cd = c - p;
  const double det = (ad.squaredNorm()) * (bd.x() * cd.y() - cd.x() * bd.y()) -
                     (bd.squaredNorm()) * (ad.x() * cd.y() - cd.x() * ad.y()) +
                     (cd.squaredNorm()) * (ad.x() * bd.y() - bd.x() * ad.y());
  return det > 1e-9;  // counter-clockwise triangle
}

LatentSeries series_from(const std::vector<Eigen::Vector2d>& pts) {
  LatentSeries s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s.timestamps.push_back(std::to_string(i));
    s.mu1.push_back(pts[i].x());
    s.mu2.push_back(pts[i].y());
  }
  return s;
}

VaeModel tiny_model() {
  const auto returns = generate_synthetic_market(default_synthetic_config(4, 60, 2), 8);
  const auto panel = rolling_correlations(returns, 30);
  TrainConfig cfg;
  cfg.seed = 8;
  cfg.hidden = {16, 8};
  cfg.epochs = 20;
  return train_vae(panel, {}, cfg).model;
}

}  // namespace

TEST_CASE("triangulation: Euler count, empty circumcircles, hull") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto pts = scattered(60, seed);
    const Triangulation t(pts);
    const auto h = static_cast<long>(t.hull().size());
    CHECK(static_cast<long>(t.triangles().size()) == 2 * 60 - 2 - h);
    for (const auto& tri : t.triangles()) {
      const auto &a = pts[std::size_t(tri[0])], &b = pts[std::size_t(tri[1])], &c = pts[std::size_t(tri[2])];
      CHECK((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x() > 0.0);
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (int(k) == tri[0] || int(k) == tri[1] || int(k) == tri[2]) continue;
        CHECK_FALSE(in_circumcircle(a, b, c, pts[k]));
      }
    }
    for (const auto& p : pts) CHECK(t.inside_hull(p, 1e-12));
  }
  CHECK_THROWS_AS(Triangulation({{0, 0}, {1, 1}}), DataError);
  CHECK_THROWS_AS(Triangulation({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), DataError);
}

TEST_CASE("triangulation: regular lattice with cocircular points covers the square") {
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.emplace_back(i, j);
  const Triangulation t(pts);
  CHECK(t.triangles().size() == 32);
  double area = 0.0;
  for (const auto& tri : t.triangles()) {
    const Eigen::Vector2d ab = pts[std::size_t(tri[1])] - pts[std::size_t(tri[0])];
    const Eigen::Vector2d ac = pts[std::size_t(tri[2])] - pts[std::size_t(tri[0])];
    area += 0.5 * (ab.x() * ac.y() - ab.y() * ac.x());
  }
  CHECK(area == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(t.hull().size() == 4);
  CHECK(t.project_to_hull({6.0, 2.0}).isApprox(Eigen::Vector2d(4.0, 2.0)));
  CHECK(t.project_to_hull({-1.0, -1.0}).isApprox(Eigen::Vector2d(0.0, 0.0)));
}

TEST_CASE("interpolation: nodal exactness, affine reproduction, local bounds") {
  const auto pts = scattered(80, 9);
  const auto s = affine_surface(pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(std::abs(interpolate_var(s, pts[i]).value - s.values()[i]) <= 1e-9);

  Rng rng(10);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 500; ++k) {
    const Eigen::Vector2d z(u(rng), u(rng));
    if (!s.triangulation().inside_hull(z)) continue;
    CHECK(interpolate_var(s, z).value == doctest::Approx(affine(z)).epsilon(1e-12));
  }

  // Arbitrary values: result lies between the containing triangle's extremes.
  std::vector<double> noisy;
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < pts.size(); ++i) noisy.push_back(nd(rng));
  const VarSurface bumpy(pts, noisy);
  for (int k = 0; k < 500; ++k) {
    const Eigen::Vector2d z(u(rng), u(rng));
    const auto loc = bumpy.triangulation().locate(z);
    if (!loc) continue;
    const auto& tri = bumpy.triangulation().triangles()[std::size_t(loc->triangle)];
    double lo = 1e300, hi = -1e300;
    for (int v : tri) {
      lo = std::min(lo, noisy[std::size_t(v)]);
      hi = std::max(hi, noisy[std::size_t(v)]);
    }
    const double v = interpolate_var(bumpy, z).value;
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
    CHECK((loc->weights.array() >= -1e-12).all());
    CHECK(loc->weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }

  const VarSurface flat(pts, std::vector<double>(pts.size(), 7.5));
  CHECK(interpolate_var(flat, 0.5 * (pts[0] + pts[1])).value == doctest::Approx(7.5).epsilon(1e-14));
}

TEST_CASE("interpolation: outside the hull errors unless clamped") {
  const std::vector<Eigen::Vector2d> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  const auto s = affine_surface(square);
  CHECK_THROWS_AS(interpolate_var(s, {2.0, 0.5}), DataError);
  const auto c = interpolate_var(s, {2.0, 0.5}, true);
  CHECK(c.clamped);
  CHECK(c.value == doctest::Approx(affine({1.0, 0.5})).epsilon(1e-12));
  const auto inside = interpolate_var(s, {0.3, 0.6}, true);
  CHECK_FALSE(inside.clamped);
  CHECK_FALSE(interpolate_var(s, {1.0 + 1e-12, 0.5}).clamped);
  CHECK_THROWS_AS(interpolate_var(s, {std::nan(""), 0.0}, true), NumericalError);
  CHECK_THROWS_AS(VarSurface(square, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(VarSurface(square, {1, 2, 3, 4, std::nan("")}), NumericalError);
}

TEST_CASE("surface CSV round trip") {
  const auto s = affine_surface(scattered(30, 4));
  const auto back = surface_from_csv(surface_to_csv(s));
  CHECK(back.points() == s.points());
  CHECK(back.values() == s.values());
  CHECK(surface_to_csv(back) == surface_to_csv(s));
  CHECK_THROWS_AS(surface_from_csv("a,b\n1,2\n"), DataError);
  CHECK_THROWS_AS(surface_from_csv("z1,z2,var\n1,2\n"), DataError);
}

TEST_CASE("build_var_surface: one bounded value per point, constant decoder") {
  auto model = tiny_model();
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) pts.emplace_back(-1.0 + 0.5 * i, -1.0 + 0.6 * j);
  LatentGrid grid;
  grid.points = pts;
  grid.box = bounding_box(pts);

  const auto portfolio = demo_portfolio(4, 100, 0.5);
  SimConfig cfg;
  cfg.paths = 4000;
  cfg.strata = 100;
  cfg.seed = 3;
  const auto before = simulation_count();
  const auto surface = build_var_surface(model, grid, monte_carlo_evaluator(portfolio, cfg), 4);
  CHECK(simulation_count() == before + 20);
  REQUIRE(surface.values().size() == 20);
  for (double v : surface.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= portfolio.max_loss());
  }
  const auto serial = build_var_surface(model, grid, monte_carlo_evaluator(portfolio, cfg), 1);
  CHECK(serial.values() == surface.values());
  CHECK(surface.method() == "delaunay-barycentric");

  auto flat = model;
  flat.decoder.params.weights.back().setZero();
  auto mean_off = [](const CorrelationMatrix& m) { return m.values().sum(); };
  const auto constant = build_var_surface(flat, grid, mean_off, 2);
  for (double v : constant.values()) CHECK(v == constant.values().front());

  CHECK_THROWS_AS(build_var_surface(model, grid, [](const CorrelationMatrix&) -> double {
                    throw NumericalError("test", "boom");
                  }),
                  NumericalError);
}

TEST_CASE("bootstrap: zero differences, determinism, block length 1 = simple") {
  const std::vector<Eigen::Vector2d> still(20, Eigen::Vector2d(0.3, -0.2));
  BootstrapConfig cfg;
  cfg.resamples = 50;
  cfg.seed = 1;
  for (const auto& e : bootstrap_latent_paths(series_from(still), cfg)) CHECK(e == Eigen::Vector2d(0.3, -0.2));

  const auto walk = scattered(60, 17);
  cfg.resamples = 300;
  const auto a = bootstrap_latent_paths(series_from(walk), cfg);
  CHECK(a.size() == 300);
  CHECK(bootstrap_latent_paths(series_from(walk), cfg) == a);
  cfg.seed = 2;
  CHECK(bootstrap_latent_paths(series_from(walk), cfg) != a);

  BootstrapConfig simple = cfg, one = cfg;
  simple.scheme = BootstrapScheme::simple;
  one.scheme = BootstrapScheme::block;
  one.block_length = 1;
  CHECK(bootstrap_latent_paths(series_from(walk), simple) == bootstrap_latent_paths(series_from(walk), one));

  // Horizon 3 with blocks of 11: each endpoint is one block's first three steps.
  cfg.horizon = 3;
  for (const auto& e : bootstrap_latent_paths(series_from(walk), cfg)) {
    bool found = false;
    for (std::size_t s = 0; s + 1 < walk.size() && !found; ++s) {
      Eigen::Vector2d end = walk.back();
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t i = (s + k) % (walk.size() - 1);
        end += walk[i + 1] - walk[i];
      }
      found = (end - e).norm() < 1e-12;
    }
    CHECK(found);
  }

  CHECK_THROWS_AS(bootstrap_latent_paths(series_from(std::vector<Eigen::Vector2d>(11)), BootstrapConfig{}), DataError);
  cfg.horizon = 0;
  CHECK_THROWS_AS(bootstrap_latent_paths(series_from(walk), cfg), ConfigError);
  CHECK(scheme_from_string(to_string(BootstrapScheme::simple)) == BootstrapScheme::simple);
  CHECK_THROWS_AS(scheme_from_string("stationary"), ConfigError);
}

TEST_CASE("bootstrap: simple-scheme endpoint mean follows the drift") {
  Rng rng(44);
  std::normal_distribution<double> nd;
  std::vector<Eigen::Vector2d> walk{{0.0, 0.0}};
  for (int t = 0; t < 150; ++t) walk.push_back(walk.back() + Eigen::Vector2d(0.05 + 0.2 * nd(rng), -0.02 + 0.1 * nd(rng)));

  std::vector<Eigen::Vector2d> diffs;
  for (std::size_t t = 1; t < walk.size(); ++t) diffs.push_back(walk[t] - walk[t - 1]);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& d : diffs) mean += d;
  mean /= double(diffs.size());
  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  for (const auto& d : diffs) var += (d - mean).cwiseAbs2();
  var /= double(diffs.size());

  BootstrapConfig cfg;
  cfg.scheme = BootstrapScheme::simple;
  cfg.horizon = 11;
  cfg.resamples = 4000;
  cfg.seed = 5;
  const auto ends = bootstrap_latent_paths(series_from(walk), cfg);
  Eigen::Vector2d avg = Eigen::Vector2d::Zero();
  for (const auto& e : ends) avg += e;
  avg /= double(ends.size());
  const Eigen::Vector2d expected = walk.back() + 11.0 * mean;
  const Eigen::Vector2d se = (11.0 * var / double(ends.size())).cwiseSqrt();
  CHECK(std::abs(avg.x() - expected.x()) < 3.0 * se.x());
  CHECK(std::abs(avg.y() - expected.y()) < 3.0 * se.y());
}

TEST_CASE("var_distribution: point mass, counts, dispersion, no simulations") {
  const auto pts = scattered(40, 12);
  const auto s = affine_surface(pts);
  const auto before = simulation_count();

  const auto mass = var_distribution(s, std::vector<Eigen::Vector2d>(25, pts[3]));
  CHECK(mass.samples.size() == 25);
  CHECK(mass.q05 == doctest::Approx(s.values()[3]).epsilon(1e-12));
  CHECK(mass.q95 == doctest::Approx(s.values()[3]).epsilon(1e-12));
  CHECK(mass.histogram.mass.front() == 1.0);

  BootstrapConfig cfg;
  cfg.resamples = 1000;
  cfg.seed = 3;
  std::vector<Eigen::Vector2d> walk;
  for (int t = 0; t < 40; ++t) walk.emplace_back(-1.0 + 0.05 * t, 0.3 * std::sin(0.4 * t));
  const auto ends = bootstrap_latent_paths(series_from(walk), cfg);
  const auto d = var_distribution(s, ends, 30, true);
  CHECK(d.samples.size() == 1000);
  CHECK(d.q95 > d.q05);
  CHECK(d.q05 <= d.q50);
  CHECK(d.q50 <= d.q95);
  CHECK(d.histogram.mass.size() == 30);
  CHECK(simulation_count() == before);

  const auto j = nlohmann::json::parse(var_distribution_to_json(d, cfg));
  CHECK(j.is_object());

  CHECK_THROWS_AS(var_distribution(s, {{50.0, 50.0}, {60.0, 60.0}}, 30, true), DataError);
  CHECK_THROWS_AS(var_distribution(s, {{50.0, 50.0}}, 30, false), DataError);
  CHECK_THROWS_AS(var_distribution(s, {}), DataError);
}
