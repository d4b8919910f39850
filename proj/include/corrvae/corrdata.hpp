#pragma once

#include "corrvae/correlation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corrvae {

/// T x M monthly log-returns, one column per asset.
struct ReturnPanel {
  std::vector<std::string> asset_ids;
  std::vector<std::string> timestamps;
  Eigen::MatrixXd values;

  Eigen::Index months() const noexcept { return values.rows(); }
  Eigen::Index assets() const noexcept { return values.cols(); }
};

/// Rolling correlation matrices in chronological order. dates[k] is the
/// last month covered by window k.
struct MatrixPanel {
  std::vector<CorrelationMatrix> matrices;
  std::vector<std::string> dates;
  int window = 0;
  int stride = 1;

  std::size_t size() const noexcept { return matrices.size(); }
  const std::vector<std::string>& labels() const { return matrices.front().labels(); }
  Eigen::Index dim() const { return matrices.front().dim(); }
};

enum class SeriesKind { log_returns, prices };

struct CsvSchema {
  /// First column holds the month label rather than an asset.
  bool date_column = true;
  SeriesKind kind = SeriesKind::log_returns;
};

ReturnPanel parse_returns_csv(const std::string& text, const CsvSchema& schema = {});
ReturnPanel load_returns_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
std::string returns_to_csv(const ReturnPanel& panel);

/// log(P_t / P_{t-1}); the first month is consumed.
ReturnPanel log_returns_from_prices(const ReturnPanel& prices);

CorrelationMatrix pearson_correlation(const Eigen::Ref<const Eigen::MatrixXd>& window,
                                      const std::vector<std::string>& labels);

/// floor((T - window) / stride) + 1 matrices.
MatrixPanel rolling_correlations(const ReturnPanel& panel, int window, int stride = 1);

/// One regime of the factor model: from start_month on, asset i loads
/// loadings(i, k) on factor k and the remainder on its own noise.
struct MarketRegime {
  int start_month = 0;
  Eigen::MatrixXd loadings;
};

struct SyntheticMarketConfig {
  int assets = 44;
  int months = 305;
  int factors = 4;
  double volatility = 0.05;
  int start_year = 1997;
  int start_month = 2;
  std::vector<MarketRegime> regimes;
};

/// Three-regime market (calm, stress, sector rotation) with one market
/// factor and factors - 1 sector factors.
SyntheticMarketConfig default_synthetic_config(int assets = 44, int months = 305, int factors = 4);

/// One-regime market with every asset loading `loading` on a single factor.
SyntheticMarketConfig one_factor_config(int assets, int months, double loading);

ReturnPanel generate_synthetic_market(const SyntheticMarketConfig& config, std::uint64_t seed);

/// Directory of per-date matrix CSVs plus manifest.json.
void save_matrix_panel(const MatrixPanel& panel, const std::filesystem::path& dir);
MatrixPanel load_matrix_panel(const std::filesystem::path& dir);

}  // namespace corrvae
