#include "corrvae/corrdata.hpp"
#include "corrvae/error.hpp"
#include "corrvae/io.hpp"
#include "corrvae/linalg.hpp"
#include "corrvae/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace corrvae;
namespace fs = std::filesystem;

namespace {

std::string make_csv(int assets, int months, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, 0.05);
  std::string s = "date";
  for (int j = 0; j < assets; ++j) s += ",X" + std::to_string(j);
  s += "\n";
  for (int t = 0; t < months; ++t) {
    s += "m" + std::to_string(t);
    for (int j = 0; j < assets; ++j) s += "," + io::format_double(nd(rng));
    s += "\n";
  }
  return s;
}

// Two-pass oracle: means first, then centered cross products.
Eigen::MatrixXd two_pass_correlation(const Eigen::MatrixXd& x) {
  const auto t = x.rows(), m = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < t; ++i) mean[std::size_t(j)] += x(i, j);
    mean[std::size_t(j)] /= double(t);
  }
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) {
      double sab = 0, saa = 0, sbb = 0;
      for (Eigen::Index i = 0; i < t; ++i) {
        const double da = x(i, a) - mean[std::size_t(a)], db = x(i, b) - mean[std::size_t(b)];
        sab += da * db;
        saa += da * da;
        sbb += db * db;
      }
      c(a, b) = sab / std::sqrt(saa * sbb);
    }
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("corrvae_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("io: shortest doubles round-trip") {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 123456789.125, 0.0}) {
    const auto s = io::format_double(v);
    CHECK(io::parse_double(s, 0, 0) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK_THROWS_AS(io::parse_double("1.5x", 2, 3), DataError);
  CHECK(io::split_csv_line(" a , b,c\r") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("io: atomic write replaces content and leaves no temp file") {
  TempDir dir("io");
  const auto p = dir.path / "x.txt";
  io::write_file_atomic(p, "first");
  io::write_file_atomic(p, "second");
  CHECK(io::read_file(p) == "second");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) files += e.is_regular_file();
  CHECK(files == 1);
  CHECK(io::file_hash_hex(p) == io::hash_hex(io::hash_bytes("second")));
}

TEST_CASE("load_returns_csv: shape passthrough") {
  const auto panel = parse_returns_csv(make_csv(3, 120, 1));
  CHECK(panel.months() == 120);
  CHECK(panel.assets() == 3);
  CHECK(panel.asset_ids == std::vector<std::string>{"X0", "X1", "X2"});
  CHECK(panel.timestamps.front() == "m0");
}

TEST_CASE("load_returns_csv: contract errors") {
  auto expect_error = [](const std::string& csv, const std::string& fragment) {
    try {
      parse_returns_csv(csv);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  expect_error("date,A,B\nm0,0.1,\nm1,0.2,0.3\n", "missing value at (1, 2)");
  expect_error("date,A,B\nm0,0.1,0.2,0.3\n", "ragged row 1");
  expect_error("date,A,B\nm0,0.1,abc\n", "non-numeric");
  expect_error("date,A,A\nm0,0.1,0.2\n", "duplicate asset id 'A'");
  CHECK_THROWS_AS(load_returns_csv("/nonexistent/returns.csv"), DataError);
}

TEST_CASE("prices become log-returns") {
  CsvSchema schema;
  schema.kind = SeriesKind::prices;
  const auto r = parse_returns_csv("date,A,B\nm0,100,10\nm1,110,5\nm2,121,10\n", schema);
  REQUIRE(r.months() == 2);
  CHECK(r.values(0, 0) == doctest::Approx(std::log(1.1)));
  CHECK(r.values(1, 1) == doctest::Approx(std::log(2.0)));
  CHECK(r.timestamps.front() == "m1");
  CHECK_THROWS_AS(parse_returns_csv("date,A,B\nm0,100,0\nm1,110,5\n", schema), DataError);
}

TEST_CASE("pearson_correlation: perfect and anti correlation") {
  Eigen::MatrixXd w(6, 3);
  w << 1, 1, -1, 2, 2, -2, 0, 0, 0, 5, 5, -5, 3, 3, -3, -1, -1, 1;
  const auto c = pearson_correlation(w, default_labels(3));
  CHECK(c(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("pearson_correlation: matches two-pass oracle and is affine invariant") {
  Rng rng(42);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd w(100, 5);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 5; ++j) w(i, j) = nd(rng) + 0.3 * (j > 0 ? w(i, 0) : 0.0);
  const auto c = pearson_correlation(w, default_labels(5));
  CHECK((c.values() - two_pass_correlation(w)).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd scaled = w;
  scaled.col(2) = 3.7 * scaled.col(2).array() + 11.0;
  CHECK((pearson_correlation(scaled, default_labels(5)).values() - c.values()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pearson_correlation: zero-variance column is named") {
  Eigen::MatrixXd w(4, 2);
  w << 1, 7, 2, 7, 3, 7, 4, 7;
  try {
    pearson_correlation(w, {"AAA", "FLAT"});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("FLAT") != std::string::npos);
  }
}

TEST_CASE("pearson_correlation: i.i.d. columns are near zero") {
  Rng rng(7);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd w(1000, 6);
  for (int i = 0; i < 1000; ++i)
    for (int j = 0; j < 6; ++j) w(i, j) = nd(rng);
  const auto c = pearson_correlation(w, default_labels(6));
  Eigen::MatrixXd off = c.values() - Eigen::MatrixXd::Identity(6, 6);
  CHECK(off.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(1000.0));
}

TEST_CASE("rolling_correlations: window counts") {
  const auto p305 = parse_returns_csv(make_csv(4, 305, 3));
  const auto panel = rolling_correlations(p305, 100);
  CHECK(panel.size() == 206);
  CHECK(panel.dates.front() == "m99");
  CHECK(panel.dates.back() == "m304");
  for (const auto& m : panel.matrices) CHECK_FALSE(correlation_violation(m.values()).has_value());

  CHECK(rolling_correlations(parse_returns_csv(make_csv(3, 100, 4)), 100).size() == 1);
  CHECK(rolling_correlations(parse_returns_csv(make_csv(3, 110, 5)), 100, 5).size() == 3);
  CHECK_THROWS_AS(rolling_correlations(parse_returns_csv(make_csv(3, 90, 6)), 100), DataError);
}

TEST_CASE("synthetic market: one-factor population correlation") {
  const auto returns = generate_synthetic_market(one_factor_config(10, 4000, 0.9), 99);
  const auto c = pearson_correlation(returns.values, returns.asset_ids);
  // Sample correlation s.d. is about (1 - rho^2) / sqrt(T) = 0.003.
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) CHECK(c(i, j) == doctest::Approx(0.81).epsilon(0.02));
}

TEST_CASE("synthetic market: zero loadings give a Marchenko-Pastur spectrum") {
  const int m = 20, t = 1000;
  const auto returns = generate_synthetic_market(one_factor_config(m, t, 0.0), 5);
  const auto c = pearson_correlation(returns.values, returns.asset_ids);
  const double q = double(t) / m;
  const double lambda_plus = std::pow(1.0 + 1.0 / std::sqrt(q), 2.0);
  const double lambda_minus = std::pow(1.0 - 1.0 / std::sqrt(q), 2.0);
  const auto e = eigh_symmetric(c.values());
  // Finite-size edge fluctuations are O(T^(-2/3)); allow a few of them.
  const double slack = 4.0 * std::pow(double(t), -2.0 / 3.0);
  CHECK(e.eigenvalues(0) <= lambda_plus + slack);
  CHECK(e.eigenvalues(m - 1) >= lambda_minus - slack);
  Eigen::MatrixXd off = c.values() - Eigen::MatrixXd::Identity(m, m);
  CHECK(off.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(double(t)));
}

TEST_CASE("synthetic market: determinism and regime structure") {
  const auto cfg = default_synthetic_config();
  const auto a = generate_synthetic_market(cfg, 1234);
  const auto b = generate_synthetic_market(cfg, 1234);
  CHECK(returns_to_csv(a) == returns_to_csv(b));
  CHECK(returns_to_csv(a) != returns_to_csv(generate_synthetic_market(cfg, 1235)));
  CHECK(a.months() == 305);
  CHECK(a.assets() == 44);
  CHECK(a.timestamps.front() == "1997-02");

  const auto panel = rolling_correlations(a, 100);
  auto mean_off = [](const CorrelationMatrix& m) {
    const auto n = m.dim();
    return (m.values().sum() - double(n)) / double(n * (n - 1));
  };
  // Window ending at month 121 is all calm; the one ending at 212 is 91%
  // stress regime with its heavier market loading.
  CHECK(mean_off(panel.matrices[212 - 99]) > mean_off(panel.matrices[121 - 99]) + 0.1);
}

TEST_CASE("synthetic market: invalid configs") {
  auto cfg = one_factor_config(5, 50, 0.5);
  cfg.regimes[0].loadings(0, 0) = 1.5;
  CHECK_THROWS_AS(generate_synthetic_market(cfg, 1), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_market(one_factor_config(0, 50, 0.5), 1), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_market(one_factor_config(5, 0, 0.5), 1), ConfigError);
}

TEST_CASE("matrix panel save/load round trip") {
  TempDir dir("panel");
  const auto returns = generate_synthetic_market(one_factor_config(5, 40, 0.6), 3);
  const auto panel = rolling_correlations(returns, 30, 4);
  save_matrix_panel(panel, dir.path);
  const auto back = load_matrix_panel(dir.path);
  REQUIRE(back.size() == panel.size());
  CHECK(back.window == 30);
  CHECK(back.stride == 4);
  CHECK(back.dates == panel.dates);
  CHECK(back.labels() == panel.labels());
  for (std::size_t k = 0; k < panel.size(); ++k)
    CHECK((back.matrices[k].values() - panel.matrices[k].values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(load_matrix_panel(dir.path / "missing"), DataError);
}
