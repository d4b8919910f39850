#include "corrvae/corrdata.hpp"

#include "corrvae/error.hpp"
#include "corrvae/io.hpp"
#include "corrvae/random.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace corrvae {

namespace {

std::string month_label(int year, int month) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

}  // namespace

ReturnPanel parse_returns_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("corrdata", "empty returns file");
  auto header = io::split_csv_line(line);
  const std::size_t first = schema.date_column ? 1 : 0;
  if (header.size() < first + 2) throw DataError("corrdata", "need at least two asset columns");

  ReturnPanel panel;
  panel.asset_ids.assign(header.begin() + static_cast<std::ptrdiff_t>(first), header.end());
  std::set<std::string> seen;
  for (const auto& id : panel.asset_ids) {
    if (id.empty()) throw DataError("corrdata", "empty asset id in header");
    if (!seen.insert(id).second) throw DataError("corrdata", "duplicate asset id '" + id + "'");
  }

  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    auto cells = io::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("corrdata", "ragged row " + std::to_string(row) + ": expected " +
                                      std::to_string(header.size()) + " cells, got " +
                                      std::to_string(cells.size()));
    panel.timestamps.push_back(schema.date_column ? cells[0] : std::to_string(row));
    std::vector<double> values;
    for (std::size_t j = first; j < cells.size(); ++j) {
      if (cells[j].empty())
        throw DataError("corrdata", "missing value at (" + std::to_string(row) + ", " +
                                        std::to_string(j) + ")");
      values.push_back(io::parse_double(cells[j], row, j));
    }
    rows.push_back(std::move(values));
  }
  const auto m = static_cast<Eigen::Index>(panel.asset_ids.size());
  panel.values.resize(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (Eigen::Index j = 0; j < m; ++j)
      panel.values(static_cast<Eigen::Index>(t), j) = rows[t][static_cast<std::size_t>(j)];

  if (schema.kind == SeriesKind::prices) panel = log_returns_from_prices(panel);
  return panel;
}

ReturnPanel load_returns_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (!std::filesystem::exists(path))
    throw DataError("corrdata", "returns file not found: " + path.string());
  return parse_returns_csv(io::read_file(path), schema);
}

std::string returns_to_csv(const ReturnPanel& panel) {
  std::string out = "date";
  for (const auto& id : panel.asset_ids) out += "," + id;
  out += '\n';
  for (Eigen::Index t = 0; t < panel.months(); ++t) {
    out += panel.timestamps[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < panel.assets(); ++j) out += "," + io::format_double(panel.values(t, j));
    out += '\n';
  }
  return out;
}

ReturnPanel log_returns_from_prices(const ReturnPanel& prices) {
  if (prices.months() < 2) throw DataError("corrdata", "need at least two price rows");
  if ((prices.values.array() <= 0.0).any())
    throw DataError("corrdata", "prices must be strictly positive");
  ReturnPanel out;
  out.asset_ids = prices.asset_ids;
  out.timestamps.assign(prices.timestamps.begin() + 1, prices.timestamps.end());
  const auto t = prices.months();
  out.values = (prices.values.bottomRows(t - 1).array() / prices.values.topRows(t - 1).array()).log();
  return out;
}

CorrelationMatrix pearson_correlation(const Eigen::Ref<const Eigen::MatrixXd>& window,
                                      const std::vector<std::string>& labels) {
  const auto t = window.rows();
  const auto m = window.cols();
  if (t < 3) throw DataError("corrdata", "pearson_correlation needs at least 3 observations");
  if (static_cast<Eigen::Index>(labels.size()) != m)
    throw DataError("corrdata", "label count does not match column count");
  if (!window.allFinite()) throw DataError("corrdata", "non-finite return in window");

  const Eigen::MatrixXd centered = window.rowwise() - window.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < m; ++j) {
    const double scale = std::max(window.col(j).cwiseAbs().maxCoeff(), 1e-300);
    if (!(sd(j) > 1e-12 * scale * std::sqrt(double(t))))
      throw DataError("corrdata", "zero-variance column '" + labels[static_cast<std::size_t>(j)] + "'");
  }
  const Eigen::VectorXd inv = sd.cwiseInverse();
  Eigen::MatrixXd corr = inv.asDiagonal() * cov * inv.asDiagonal();
  corr = ((corr + corr.transpose()) / 2.0).eval();
  corr = corr.cwiseMax(-1.0).cwiseMin(1.0);
  corr.diagonal().setOnes();
  return CorrelationMatrix::unchecked(labels, std::move(corr));
}

MatrixPanel rolling_correlations(const ReturnPanel& panel, int window, int stride) {
  if (stride < 1) throw ConfigError("corrdata", "stride must be >= 1");
  if (window < 3) throw ConfigError("corrdata", "window must be >= 3");
  if (window > panel.months())
    throw DataError("corrdata", "window " + std::to_string(window) + " exceeds " +
                                    std::to_string(panel.months()) + " months of data");
  MatrixPanel out;
  out.window = window;
  out.stride = stride;
  const auto last_start = panel.months() - window;
  for (Eigen::Index start = 0; start <= last_start; start += stride) {
    out.matrices.push_back(pearson_correlation(panel.values.middleRows(start, window), panel.asset_ids));
    out.dates.push_back(panel.timestamps[static_cast<std::size_t>(start + window - 1)]);
  }
  return out;
}

SyntheticMarketConfig default_synthetic_config(int assets, int months, int factors) {
  SyntheticMarketConfig cfg;
  cfg.assets = assets;
  cfg.months = months;
  cfg.factors = factors;
  const int sectors = std::max(factors - 1, 0);

  // Per-asset tilt in [0.85, 1.15] so the market eigenvector is not flat.
  auto tilt = [](int i) { return 0.85 + 0.3 * ((i * 7) % 10) / 9.0; };

  auto make = [&](int start, auto market, double sector) {
    MarketRegime regime;
    regime.start_month = start;
    regime.loadings = Eigen::MatrixXd::Zero(assets, factors);
    for (int i = 0; i < assets; ++i) {
      const int s = sectors > 0 ? i % sectors : 0;
      regime.loadings(i, 0) = market(s) * tilt(i);
      if (sectors > 0) regime.loadings(i, 1 + s) = sector;
    }
    return regime;
  };

  cfg.regimes.push_back(make(0, [](int) { return 0.45; }, 0.45));
  cfg.regimes.push_back(make(months * 2 / 5, [](int) { return 0.78; }, 0.25));
  cfg.regimes.push_back(make(months * 7 / 10, [](int s) {
    static constexpr double rotated[] = {0.75, 0.2, 0.55, 0.35};
    return rotated[s % 4];
  }, 0.45));
  return cfg;
}

SyntheticMarketConfig one_factor_config(int assets, int months, double loading) {
  SyntheticMarketConfig cfg;
  cfg.assets = assets;
  cfg.months = months;
  cfg.factors = 1;
  cfg.regimes.push_back({0, Eigen::MatrixXd::Constant(assets, 1, loading)});
  return cfg;
}

ReturnPanel generate_synthetic_market(const SyntheticMarketConfig& cfg, std::uint64_t seed) {
  if (cfg.assets < 2) throw ConfigError("corrdata", "synthetic market needs at least 2 assets");
  if (cfg.months < 1) throw ConfigError("corrdata", "synthetic market needs a positive month count");
  if (cfg.factors < 1) throw ConfigError("corrdata", "synthetic market needs at least one factor");
  if (cfg.regimes.empty()) throw ConfigError("corrdata", "synthetic market needs a regime");
  if (cfg.regimes.front().start_month != 0)
    throw ConfigError("corrdata", "first regime must start at month 0");

  std::vector<Eigen::VectorXd> idio_scale;
  for (std::size_t r = 0; r < cfg.regimes.size(); ++r) {
    const auto& l = cfg.regimes[r].loadings;
    if (l.rows() != cfg.assets || l.cols() != cfg.factors)
      throw ConfigError("corrdata", "regime " + std::to_string(r) + " loadings have wrong shape");
    if (!l.allFinite() || l.cwiseAbs().maxCoeff() > 1.0)
      throw ConfigError("corrdata", "regime " + std::to_string(r) + " loadings outside [-1, 1]");
    const Eigen::VectorXd common = l.rowwise().squaredNorm();
    if (common.maxCoeff() > 1.0)
      throw ConfigError("corrdata", "regime " + std::to_string(r) +
                                        " loadings explain more than unit variance");
    if (r > 0 && cfg.regimes[r].start_month <= cfg.regimes[r - 1].start_month)
      throw ConfigError("corrdata", "regime start months must increase");
    idio_scale.push_back((1.0 - common.array()).sqrt().matrix());
  }

  Rng rng = make_rng(seed, "synthetic-market");
  std::normal_distribution<double> normal(0.0, 1.0);

  ReturnPanel panel;
  panel.asset_ids = default_labels(cfg.assets);
  panel.values.resize(cfg.months, cfg.assets);
  std::size_t regime = 0;
  Eigen::VectorXd factor(cfg.factors);
  Eigen::VectorXd noise(cfg.assets);
  for (int t = 0; t < cfg.months; ++t) {
    while (regime + 1 < cfg.regimes.size() && cfg.regimes[regime + 1].start_month <= t) ++regime;
    for (auto& f : factor) f = normal(rng);
    for (auto& e : noise) e = normal(rng);
    const auto& l = cfg.regimes[regime].loadings;
    panel.values.row(t) =
        cfg.volatility * (l * factor + idio_scale[regime].cwiseProduct(noise)).transpose();
    const int months_from_start = cfg.start_month - 1 + t;
    panel.timestamps.push_back(month_label(cfg.start_year + months_from_start / 12,
                                           months_from_start % 12 + 1));
  }
  return panel;
}

void save_matrix_panel(const MatrixPanel& panel, const std::filesystem::path& dir) {
  if (panel.matrices.empty()) throw DataError("corrdata", "cannot save an empty matrix panel");
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "corrvae-matrix-panel";
  manifest["version"] = 1;
  manifest["labels"] = panel.labels();
  manifest["window"] = panel.window;
  manifest["stride"] = panel.stride;
  auto files = nlohmann::json::array();
  for (std::size_t k = 0; k < panel.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu", k);
    const std::string date = k < panel.dates.size() ? panel.dates[k] : std::string(name);
    const std::string file = std::string(name) + "_" + date + ".csv";
    io::write_file_atomic(dir / file, io::matrix_to_csv(panel.matrices[k].labels(),
                                                        panel.matrices[k].values()));
    files.push_back({{"date", date}, {"file", file}});
  }
  manifest["matrices"] = files;
  io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

MatrixPanel load_matrix_panel(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw DataError("corrdata", "matrix panel manifest not found: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrdata", "bad manifest " + manifest_path.string() + ": " + e.what());
  }
  MatrixPanel panel;
  panel.window = manifest.value("window", 0);
  panel.stride = manifest.value("stride", 1);
  const auto labels = manifest.at("labels").get<std::vector<std::string>>();
  for (const auto& entry : manifest.at("matrices")) {
    auto m = io::read_matrix_csv(dir / entry.at("file").get<std::string>());
    if (m.labels != labels)
      throw DataError("corrdata", "matrix labels differ from manifest in " +
                                      entry.at("file").get<std::string>());
    panel.matrices.emplace_back(m.labels, std::move(m.values));
    panel.dates.push_back(entry.at("date").get<std::string>());
  }
  if (panel.matrices.empty()) throw DataError("corrdata", "matrix panel is empty");
  return panel;
}

}  // namespace corrvae
