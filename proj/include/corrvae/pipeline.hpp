#pragma once

#include "corrvae/autoencoders.hpp"
#include "corrvae/corrdata.hpp"
#include "corrvae/creditrisk.hpp"
#include "corrvae/sensitivity.hpp"
#include "corrvae/stylized_facts.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace corrvae::pipeline {

inline constexpr const char* kVersion = "0.1.0";

struct DataConfig {
  /// "synthetic" draws returns from the factor model; "csv" reads returns_csv.
  std::string source = "synthetic";
  std::filesystem::path returns_csv;
  bool prices = false;
  bool date_column = true;
  int assets = 44;
  int months = 305;
  int factors = 4;
  double volatility = 0.05;
};

struct PortfolioConfig {
  /// Empty: one demo sub-portfolio per asset factor.
  std::filesystem::path path;
  long counterparties = 500;
  double loading = 0.5;
};

/// Everything a run needs. Relative paths inside a config file resolve
/// against the file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out = "corrvae-run";

  DataConfig data;
  int window = 100;
  int stride = 1;

  TrainConfig train;
  double validation_fraction = 0.3;

  int grid_count = 132;
  double grid_margin = 0.2;
  int partition_rows = 3;
  int partition_cols = 3;

  Linkage linkage = Linkage::average;
  int histogram_bins = 40;

  PortfolioConfig portfolio;
  SimConfig simulation;

  BootstrapConfig bootstrap;
  std::vector<BootstrapScheme> schemes = {BootstrapScheme::simple, BootstrapScheme::block};
  bool clamp_to_hull = true;
  int var_bins = 30;

  void validate() const;
};

RunConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& cfg);

/// Returns CSV (explicit path, data.returns_csv, or the synthdata output)
/// to the rolling correlation panel.
void cmd_ingest(const RunConfig& cfg, const std::optional<std::filesystem::path>& returns = std::nullopt);
void cmd_synthdata(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_encode(const RunConfig& cfg);
void cmd_generate(const RunConfig& cfg);
void cmd_facts(const RunConfig& cfg);
/// VaR of the portfolio under one factor correlation matrix CSV.
void cmd_var(const RunConfig& cfg, const std::filesystem::path& matrix_csv);
void cmd_surface(const RunConfig& cfg);
void cmd_bootstrap(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);
/// synthdata (synthetic source only), ingest, train, encode, generate,
/// facts, surface, bootstrap, report.
void cmd_run(const RunConfig& cfg);

/// 0 success, 2 config, 3 data, 4 numerical, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace corrvae::pipeline
