#include "corrvae/error.hpp"
#include "corrvae/latent.hpp"
#include "corrvae/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace corrvae;

namespace {

MatrixPanel repeated(const Eigen::MatrixXd& m, int copies) {
  MatrixPanel p;
  for (int i = 0; i < copies; ++i) {
    p.matrices.emplace_back(default_labels(static_cast<int>(m.rows())), m);
    p.dates.push_back("t" + std::to_string(i));
  }
  return p;
}

Eigen::MatrixXd equicorrelated(int n, double rho) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, rho);
  m.diagonal().setOnes();
  return m;
}

// Decomposition whose top eigenvector is v, completed to an orthonormal basis.
EigenDecomposition<double> decomposition_with_top(const Eigen::Vector3d& v) {
  Eigen::Matrix3d q;
  q.col(0) = v.normalized();
  Eigen::Vector3d seed = std::abs(q(2, 0)) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  q.col(1) = (seed - seed.dot(q.col(0)) * q.col(0)).normalized();
  q.col(2) = q.col(0).cross(q.col(1));
  EigenDecomposition<double> e;
  e.eigenvalues = Eigen::Vector3d(2.0, 0.7, 0.3);
  e.eigenvectors = q;
  apply_sign_convention(e.eigenvectors);
  return e;
}

std::vector<Eigen::Vector2d> random_points(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(nd(rng), 0.5 * nd(rng));
  return pts;
}

}  // namespace

TEST_CASE("eigen_features: constant panel is perfectly self-similar") {
  const auto f = eigen_features(repeated(equicorrelated(5, 0.4), 6));
  REQUIRE(f.size() == 6);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(f.alpha1[t] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.alpha2[t] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.lambda1[t] == doctest::Approx(1.0 + 0.4 * 4).epsilon(1e-12));
    CHECK(f.lambda2[t] == doctest::Approx(0.6).epsilon(1e-12));
  }
}

TEST_CASE("eigen_features: a top eigenvector orthogonal to the mean gives alpha1 = 0") {
  // b . (c + d) = -1, so b is orthogonal to (b + c + d) / 3.
  const double s = std::sqrt(0.75);
  std::vector<EigenDecomposition<double>> d{decomposition_with_top({1, 0, 0}), decomposition_with_top({-0.5, s, 0}),
                                            decomposition_with_top({-0.5, 0, s})};
  const auto f = eigen_features(d);
  CHECK(std::abs(f.alpha1[0]) < 1e-12);
  CHECK(f.alpha1[1] > 0.5);
}

TEST_CASE("eigen_features: alpha is invariant to eigenvector signs") {
  const auto returns = generate_synthetic_market(default_synthetic_config(8, 80, 3), 3);
  const auto panel = rolling_correlations(returns, 30, 5);
  std::vector<EigenDecomposition<double>> d;
  for (const auto& m : panel.matrices) d.push_back(eigh_symmetric(m.values()));
  const auto base = eigen_features(d);

  Rng rng(4);
  std::bernoulli_distribution coin;
  for (auto& e : d)
    for (Eigen::Index c = 0; c < e.eigenvectors.cols(); ++c)
      if (coin(rng)) e.eigenvectors.col(c) *= -1.0;
  const auto flipped = eigen_features(d);
  for (std::size_t t = 0; t < base.size(); ++t) {
    CHECK(flipped.alpha1[t] == doctest::Approx(base.alpha1[t]).epsilon(1e-14));
    CHECK(flipped.alpha2[t] == doctest::Approx(base.alpha2[t]).epsilon(1e-14));
  }
  for (std::size_t t = 0; t < base.size(); ++t) {
    CHECK(base.lambda1[t] >= base.lambda2[t]);
    CHECK(base.lambda2[t] > 0.0);
    CHECK(std::abs(base.alpha1[t]) <= 1.0 + 1e-12);
    CHECK(std::abs(base.alpha2[t]) <= 1.0 + 1e-12);
  }
}

TEST_CASE("eigen_features: the minority regime has the lower alpha1") {
  // Market mode on all six assets versus a mode concentrated on three.
  Eigen::MatrixXd market = equicorrelated(6, 0.5);
  Eigen::MatrixXd block = Eigen::MatrixXd::Identity(6, 6);
  block.topLeftCorner(3, 3) = equicorrelated(3, 0.8);
  MatrixPanel p = repeated(market, 10);
  for (int i = 0; i < 3; ++i) {
    p.matrices.insert(p.matrices.begin() + 5, CorrelationMatrix(default_labels(6), block));
    p.dates.push_back("x" + std::to_string(i));
  }
  const auto f = eigen_features(p);
  const auto dip = std::min_element(f.alpha1.begin(), f.alpha1.end()) - f.alpha1.begin();
  CHECK(dip >= 5);
  CHECK(dip < 8);
  // Closed form: mean direction (10 v + 3 w) / 13 with v.w = 1/sqrt(2).
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(6) / std::sqrt(6.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(6);
  w.head(3).setConstant(1.0 / std::sqrt(3.0));
  const Eigen::VectorXd mean = (10.0 * v + 3.0 * w) / 13.0;
  CHECK(f.alpha1[0] == doctest::Approx(v.dot(mean) / mean.norm()).epsilon(1e-12));
  CHECK(f.alpha1[5] == doctest::Approx(w.dot(mean) / mean.norm()).epsilon(1e-12));
}

TEST_CASE("eigen_features: empty panel is rejected") {
  CHECK_THROWS_AS(eigen_features(MatrixPanel{}), DataError);
}

TEST_CASE("series_correlation: exact relations, shuffled series, constant series") {
  std::vector<double> x(50), y(50);
  std::iota(x.begin(), x.end(), 0.0);
  for (std::size_t i = 0; i < 50; ++i) y[i] = 3.0 - 2.0 * x[i];
  CHECK(series_correlation(x, y) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(series_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(2024);
  std::normal_distribution<double> nd;
  std::vector<double> trend(300), noisy(300);
  for (std::size_t i = 0; i < 300; ++i) {
    trend[i] = 0.01 * double(i);
    noisy[i] = trend[i] + 0.3 * nd(rng);
  }
  CHECK(series_correlation(trend, noisy) > 0.9);
  std::shuffle(noisy.begin(), noisy.end(), rng);
  CHECK(std::abs(series_correlation(trend, noisy)) < 0.2);

  CHECK_THROWS_AS(series_correlation(x, std::vector<double>(50, 1.0)), DataError);
  CHECK_THROWS_AS(series_correlation(x, std::vector<double>(49, 1.0)), DataError);
}

TEST_CASE("latent_eigen_correlation: fields and magnitude") {
  LatentSeries s;
  EigenFeatureSeries f;
  for (int t = 0; t < 20; ++t) {
    s.timestamps.push_back(std::to_string(t));
    s.mu1.push_back(double(t));
    s.mu2.push_back(double((t * 7) % 5));
    f.lambda1.push_back(10.0 - 0.5 * t);
    f.lambda2.push_back(1.0);
    f.alpha1.push_back(0.9 + 0.001 * t);
    f.alpha2.push_back(0.5 + 0.01 * ((t * 3) % 4));
  }
  const auto r = latent_eigen_correlation(s, f);
  CHECK(r.mu1_lambda1 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.mu1_alpha1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.max_abs_lambda1() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.mu2_lambda1) < 1.0);
}

TEST_CASE("partition_latent: nine labels, one cell, boundary ties, totality") {
  const auto pts = random_points(500, 8);
  const auto labels = partition_latent(pts, 3, 3);
  REQUIRE(labels.size() == pts.size());
  std::vector<int> counts(9, 0);
  for (int l : labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < 9);
    ++counts[std::size_t(l)];
  }
  for (int c : counts) CHECK(c > 0);

  for (int l : partition_latent(pts, 1, 1)) CHECK(l == 0);

  // Box is [0, 3] x [0, 3]; x = 1 and y = 2 sit on cell edges.
  const std::vector<Eigen::Vector2d> edge{{0, 0}, {3, 3}, {1, 0.5}, {0.5, 2}, {1.5, 1.5}};
  const auto e = partition_latent(edge, 3, 3);
  CHECK(e[0] == 0);
  CHECK(e[1] == 8);
  CHECK(e[2] == 0);
  CHECK(e[3] == 3);
  CHECK(e[4] == 4);

  CHECK_THROWS_AS(partition_latent({}, 3, 3), DataError);
  CHECK_THROWS_AS(partition_latent(pts, 0, 3), ConfigError);
}

TEST_CASE("build_grid: count, containment, hull coverage, determinism") {
  const auto pts = random_points(200, 5);
  const auto g = build_grid(pts, 132, 0.2, 7);
  CHECK(g.size() == 132);
  for (const auto& p : g.points) {
    CHECK(p.allFinite());
    CHECK(g.box.contains(p, 1e-12));
  }
  // Corner pins make the grid's box equal to the inflated box, so every
  // historical point lies inside the grid's hull.
  const auto gb = bounding_box(g.points);
  CHECK((gb.lo - g.box.lo).norm() == 0.0);
  CHECK((gb.hi - g.box.hi).norm() == 0.0);
  const auto data = bounding_box(pts);
  CHECK(g.box.contains(data.lo));
  CHECK(g.box.contains(data.hi));

  const auto again = build_grid(pts, 132, 0.2, 7);
  CHECK(again.points == g.points);
  CHECK(build_grid(pts, 132, 0.2, 8).points != g.points);

  const std::vector<Eigen::Vector2d> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const auto four = build_grid(square, 4, 0.0, 1);
  CHECK(four.size() == 4);
  for (const auto& p : four.points) {
    CHECK(p.x() >= 0.0);
    CHECK(p.x() <= 1.0);
    CHECK(p.y() >= 0.0);
    CHECK(p.y() <= 1.0);
  }
  for (int count : {1, 2, 3, 5, 17, 100}) CHECK(build_grid(pts, count, 0.1, 3).size() == std::size_t(count));

  CHECK_THROWS_AS(build_grid(pts, 0, 0.2, 1), ConfigError);
  CHECK_THROWS_AS(build_grid(pts, 10, -0.1, 1), ConfigError);
  CHECK_THROWS_AS(build_grid({{1, 1}, {1, 2}}, 10, 0.0, 1), DataError);
}

TEST_CASE("generate_synthetic_panel: valid matrices, encodings as grid, single point") {
  const auto returns = generate_synthetic_market(default_synthetic_config(8, 100, 3), 12);
  const auto panel = rolling_correlations(returns, 30);
  TrainConfig cfg;
  cfg.seed = 12;
  cfg.hidden = {32, 16};
  cfg.epochs = 200;
  cfg.learning_rate = 1e-3;
  const auto t = train_vae(panel, {}, cfg);

  const auto series = latent_series(encode(t.model, panel), panel.dates);
  CHECK(series.size() == panel.size());
  const auto grid = build_grid(series.points(), 132, 0.2, 12);
  const auto synth = generate_synthetic_panel(t.model, grid, 3);
  REQUIRE(synth.size() == 132);
  for (const auto& m : synth.matrices) {
    CHECK_FALSE(correlation_violation(m.values()).has_value());
    CHECK(eigh_symmetric(m.values()).eigenvalues.minCoeff() >= -1e-8);
  }
  CHECK(synth.dates.front() == "grid000");
  CHECK(synth.labels() == panel.labels());
  const auto serial = generate_synthetic_panel(t.model, grid, 1);
  for (std::size_t i = 0; i < synth.size(); ++i) CHECK(serial.matrices[i].values() == synth.matrices[i].values());

  // Decoding the posterior means reproduces the training matrices about as
  // well as the training report says the model does.
  LatentGrid own;
  own.points = series.points();
  own.box = bounding_box(own.points);
  const auto recon = generate_synthetic_panel(t.model, own);
  double mse = 0.0;
  for (std::size_t i = 0; i < panel.size(); ++i)
    mse += (recon.matrices[i].values() - panel.matrices[i].values()).squaredNorm() /
           double(panel.matrices[i].values().size());
  mse /= double(panel.size());
  const double reported = t.report.epochs.back().train_mse;
  CHECK(mse < 2.0 * reported);
  CHECK(mse > 0.25 * reported);

  LatentGrid origin;
  origin.points = {Eigen::Vector2d::Zero()};
  origin.box = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  CHECK(generate_synthetic_panel(t.model, origin).size() == 1);
  CHECK_THROWS_AS(generate_synthetic_panel(t.model, LatentGrid{}), DataError);
}
