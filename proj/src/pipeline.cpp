#include "corrvae/pipeline.hpp"

#include "corrvae/error.hpp"
#include "corrvae/io.hpp"
#include "corrvae/latent.hpp"
#include "corrvae/linalg.hpp"
#include "corrvae/random.hpp"
#include "corrvae/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

namespace corrvae::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError("cli", "'" + section + "' must be an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError("cli", "unknown config key '" + section + "." + item.key() + "'");
  }
}

template <typename T>
void get(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("cli", "bad value for '" + section + "." + key + "'");
  }
}

void get_path(const json& j, const char* key, fs::path& out, const std::string& section,
              const fs::path& base) {
  std::string s;
  if (!j.contains(key)) return;
  get(j, key, s, section);
  out = s.empty() || fs::path(s).is_absolute() || base.empty() ? fs::path(s) : base / s;
}

const char* kind_name(SeriesKind k) { return k == SeriesKind::prices ? "prices" : "log_returns"; }

// ------------------------------------------------------------- manifest

std::string hash_tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) acc += f.generic_string() + '\0' + io::file_hash_hex(dir / f) + '\n';
  return io::hash_hex(io::hash_bytes(acc));
}

/// One command's artifacts: every file goes through write() or output() so
/// the manifest entry lists it with its content hash.
class Stage {
 public:
  Stage(const RunConfig& cfg, std::string name, std::uint64_t seed, json settings)
      : cfg_(cfg), name_(std::move(name)) {
    entry_["seed"] = seed;
    entry_["settings"] = std::move(settings);
    entry_["inputs"] = json::object();
    entry_["outputs"] = json::object();
    fs::create_directories(cfg_.out);
  }

  fs::path path(const std::string& rel) const { return cfg_.out / rel; }

  void input(const std::string& rel) {
    const auto p = path(rel);
    if (!fs::exists(p))
      throw DataError("cli", name_ + ": missing upstream artifact '" + rel + "'; run the producing command first");
    entry_["inputs"][rel] = fs::is_directory(p) ? hash_tree(p) : io::file_hash_hex(p);
  }

  void external_input(const fs::path& p) {
    if (!fs::exists(p)) throw DataError("cli", name_ + ": input not found: " + p.string());
    entry_["inputs"][p.generic_string()] = io::file_hash_hex(p);
  }

  void write(const std::string& rel, std::string_view content) {
    const auto p = path(rel);
    fs::create_directories(p.parent_path());
    io::write_file_atomic(p, content);
    entry_["outputs"][rel] = io::hash_hex(io::hash_bytes(content));
  }

  void output(const std::string& rel) {
    const auto p = path(rel);
    entry_["outputs"][rel] = fs::is_directory(p) ? hash_tree(p) : io::file_hash_hex(p);
  }

  /// Fresh directory for a multi-file artifact.
  fs::path reset_dir(const std::string& rel) {
    const auto p = path(rel);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }

  void commit() {
    const auto p = path("manifest.json");
    json manifest;
    if (fs::exists(p)) {
      try {
        manifest = json::parse(io::read_file(p));
      } catch (const json::exception&) {
        manifest = json::object();
      }
    }
    manifest["format"] = "corrvae-run-manifest";
    manifest["version"] = 1;
    manifest["tool_version"] = kVersion;
    manifest["root_seed"] = cfg_.seed;
    manifest["stages"][name_] = entry_;
    io::write_file_atomic(p, manifest.dump(2) + "\n");
  }

 private:
  const RunConfig& cfg_;
  std::string name_;
  json entry_;
};

void log(const std::string& stage, const std::string& msg) { std::cerr << stage << ": " << msg << "\n"; }

std::string fmt(double v) { return io::format_double(v); }

// --------------------------------------------------------------- tables

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t index(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("cli", "table has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  std::vector<std::string> text(const std::string& name) const {
    const auto c = index(name);
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
  }
  std::vector<double> col(const std::string& name) const {
    const auto c = index(name);
    std::vector<double> out;
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(io::parse_double(rows[i].at(c), i + 2, c + 1));
    return out;
  }
};

Table read_table(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("cli", "missing artifact " + p.string());
  const std::string text = io::read_file(p);
  Table t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty() || line == "\r") continue;
    auto cells = io::split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw DataError("cli", "ragged row in " + p.filename().string());
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

/// CSV with a leading text column followed by numeric columns.
std::string labeled_table(const std::string& label_name, const std::vector<std::string>& labels,
                          const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols) {
  std::string s = label_name;
  for (const auto& h : header) s += "," + h;
  s += "\n";
  for (std::size_t r = 0; r < labels.size(); ++r) {
    s += labels[r];
    for (const auto& c : cols) s += "," + fmt(c[r]);
    s += "\n";
  }
  return s;
}

// -------------------------------------------------------------- helpers

LatentSeries read_latent(const fs::path& out) {
  const auto t = read_table(out / "latent" / "encodings.csv");
  LatentSeries s;
  s.timestamps = t.text("date");
  s.mu1 = t.col("mu1");
  s.mu2 = t.col("mu2");
  return s;
}

LatentGrid read_grid(const fs::path& out) {
  const auto t = read_table(out / "grid" / "grid.csv");
  const auto z1 = t.col("z1"), z2 = t.col("z2");
  LatentGrid g;
  for (std::size_t i = 0; i < z1.size(); ++i) g.points.emplace_back(z1[i], z2[i]);
  if (g.points.empty()) throw DataError("cli", "grid.csv is empty");
  g.box = bounding_box(g.points);
  return g;
}

PortfolioSpec resolve_portfolio(const RunConfig& cfg, Eigen::Index factors) {
  if (!cfg.portfolio.path.empty()) {
    auto p = load_portfolio(cfg.portfolio.path);
    p.validate(factors);
    return p;
  }
  return demo_portfolio(static_cast<int>(factors), cfg.portfolio.counterparties, cfg.portfolio.loading);
}

json portfolio_settings(const RunConfig& cfg) {
  if (!cfg.portfolio.path.empty()) return {{"path", cfg.portfolio.path.generic_string()}};
  return {{"demo", true}, {"counterparties", cfg.portfolio.counterparties}, {"loading", cfg.portfolio.loading}};
}

json simulation_settings(const SimConfig& s) {
  return {{"paths", s.paths},           {"strata", s.strata},
          {"quantile", s.quantile},     {"antithetic", s.antithetic},
          {"per_counterparty", s.per_counterparty}, {"block_size", s.block_size},
          {"seed", s.seed}};
}

SimConfig simulation_for(const RunConfig& cfg, int threads) {
  SimConfig s = cfg.simulation;
  s.seed = substream_seed(cfg.seed, "creditrisk");
  s.threads = threads;
  return s;
}

double mp_ratio(const MatrixPanel& panel) { return double(panel.window) / double(panel.dim()); }

struct FactsTables {
  std::string per_matrix;
  std::string spectrum;
  std::string pairwise;
};

FactsTables facts_tables(const MatrixPanel& panel, const StylizedFactReport& report, double q) {
  const auto n = panel.size();
  std::vector<double> idx(n), l1(n), l2(n), above(n), holds(n), minc(n), gap(n), maxdeg(n);
  std::vector<double> pooled;
  for (std::size_t k = 0; k < n; ++k) {
    const auto mp = marchenko_pastur_check(panel.matrices[k], q);
    const auto pf = perron_frobenius_check(panel.matrices[k]);
    const auto mst = minimum_spanning_tree(panel.matrices[k]);
    idx[k] = double(k);
    l1[k] = mp.eigenvalues[0];
    l2[k] = mp.eigenvalues.size() > 1 ? mp.eigenvalues[1] : 0.0;
    above[k] = mp.above_edge;
    holds[k] = pf.holds ? 1.0 : 0.0;
    minc[k] = pf.min_component;
    gap[k] = pf.multiplicity_gap;
    maxdeg[k] = mst.max_degree;
    pooled.insert(pooled.end(), mp.eigenvalues.begin(), mp.eigenvalues.end());
  }
  FactsTables t;
  t.per_matrix = labeled_table("date", panel.dates,
                               {"index", "lambda1", "lambda2", "above_edge", "perron_holds", "perron_min_component",
                                "multiplicity_gap", "mst_max_degree"},
                               {idx, l1, l2, above, holds, minc, gap, maxdeg});

  // Bulk density of the pooled spectrum against the Marchenko-Pastur law.
  const double lp = report.lambda_plus;
  const int bins = 25;
  std::vector<double> centers(bins), density(bins), mp(bins);
  const double w = lp / bins;
  for (double v : pooled)
    if (v >= 0.0 && v < lp) density[static_cast<std::size_t>(std::min<double>(bins - 1, std::floor(v / w)))] += 1.0;
  for (int b = 0; b < bins; ++b) {
    const auto sb = static_cast<std::size_t>(b);
    centers[sb] = (b + 0.5) * w;
    density[sb] /= double(pooled.size()) * w;
    mp[sb] = marchenko_pastur_density(centers[sb], q);
  }
  t.spectrum = io::table_to_csv({"lambda", "empirical_density", "mp_density"}, {centers, density, mp});

  const auto& h = report.pairwise.histogram;
  std::vector<double> hc, hm;
  for (std::size_t b = 0; b < h.mass.size(); ++b) {
    hc.push_back(h.bin_center(b));
    hm.push_back(h.mass[b]);
  }
  t.pairwise = io::table_to_csv({"rho", "mass"}, {hc, hm});
  return t;
}

}  // namespace

// ================================================================ config

void RunConfig::validate() const {
  if (threads < 1) throw ConfigError("cli", "threads must be >= 1");
  if (out.empty()) throw ConfigError("cli", "output directory must be set");
  if (data.source != "synthetic" && data.source != "csv")
    throw ConfigError("cli", "data.source must be 'synthetic' or 'csv'");
  if (data.source == "synthetic") {
    if (data.assets < 2 || data.factors < 2) throw ConfigError("cli", "synthetic data needs >= 2 assets and factors");
    if (data.months <= window) throw ConfigError("cli", "synthetic months must exceed the window");
    if (!(data.volatility > 0.0)) throw ConfigError("cli", "data.volatility must be positive");
  }
  if (window < 2) throw ConfigError("cli", "window must be >= 2");
  if (stride < 1) throw ConfigError("cli", "stride must be >= 1");
  if (train.epochs < 1 || train.batch_size < 1) throw ConfigError("cli", "epochs and batch_size must be >= 1");
  if (!(train.learning_rate > 0.0)) throw ConfigError("cli", "learning_rate must be positive");
  if (!(train.beta >= 0.0)) throw ConfigError("cli", "beta must be >= 0");
  if (train.hidden.empty() || std::any_of(train.hidden.begin(), train.hidden.end(), [](int h) { return h < 1; }))
    throw ConfigError("cli", "hidden layer sizes must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("cli", "validation_fraction must lie in (0, 1)");
  if (grid_count < 3) throw ConfigError("cli", "grid_count must be >= 3");
  if (!(grid_margin >= 0.0)) throw ConfigError("cli", "grid_margin must be >= 0");
  if (partition_rows < 1 || partition_cols < 1) throw ConfigError("cli", "partition must have >= 1 row and column");
  if (histogram_bins < 1 || var_bins < 1) throw ConfigError("cli", "histogram bins must be >= 1");
  if (portfolio.path.empty()) {
    if (portfolio.counterparties < 1) throw ConfigError("cli", "portfolio.counterparties must be >= 1");
    if (!(portfolio.loading >= 0.0 && portfolio.loading < 1.0))
      throw ConfigError("cli", "portfolio.loading must lie in [0, 1)");
  }
  simulation.validate();
  bootstrap.validate();
  if (schemes.empty()) throw ConfigError("cli", "bootstrap.schemes must not be empty");
}

RunConfig config_from_json(const std::string& text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("cli", std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  check_keys(j, {"seed", "threads", "out", "data", "panel", "train", "latent", "facts", "portfolio", "simulation",
                 "bootstrap"},
             "config");
  get(j, "seed", c.seed, "config");
  get(j, "threads", c.threads, "config");
  if (j.contains("out")) get_path(j, "out", c.out, "config", base);

  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, {"source", "returns_csv", "prices", "date_column", "assets", "months", "factors", "volatility"},
               "data");
    get(d, "source", c.data.source, "data");
    get_path(d, "returns_csv", c.data.returns_csv, "data", base);
    get(d, "prices", c.data.prices, "data");
    get(d, "date_column", c.data.date_column, "data");
    get(d, "assets", c.data.assets, "data");
    get(d, "months", c.data.months, "data");
    get(d, "factors", c.data.factors, "data");
    get(d, "volatility", c.data.volatility, "data");
  }
  if (j.contains("panel")) {
    const auto& p = j["panel"];
    check_keys(p, {"window", "stride"}, "panel");
    get(p, "window", c.window, "panel");
    get(p, "stride", c.stride, "panel");
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, {"epochs", "learning_rate", "beta", "batch_size", "hidden", "validation_fraction"}, "train");
    get(t, "epochs", c.train.epochs, "train");
    get(t, "learning_rate", c.train.learning_rate, "train");
    get(t, "beta", c.train.beta, "train");
    get(t, "batch_size", c.train.batch_size, "train");
    get(t, "hidden", c.train.hidden, "train");
    get(t, "validation_fraction", c.validation_fraction, "train");
  }
  if (j.contains("latent")) {
    const auto& l = j["latent"];
    check_keys(l, {"grid_count", "grid_margin", "partition_rows", "partition_cols"}, "latent");
    get(l, "grid_count", c.grid_count, "latent");
    get(l, "grid_margin", c.grid_margin, "latent");
    get(l, "partition_rows", c.partition_rows, "latent");
    get(l, "partition_cols", c.partition_cols, "latent");
  }
  if (j.contains("facts")) {
    const auto& f = j["facts"];
    check_keys(f, {"linkage", "histogram_bins"}, "facts");
    std::string linkage = to_string(c.linkage);
    get(f, "linkage", linkage, "facts");
    c.linkage = linkage_from_string(linkage);
    get(f, "histogram_bins", c.histogram_bins, "facts");
  }
  if (j.contains("portfolio")) {
    const auto& p = j["portfolio"];
    check_keys(p, {"path", "counterparties", "loading"}, "portfolio");
    get_path(p, "path", c.portfolio.path, "portfolio", base);
    get(p, "counterparties", c.portfolio.counterparties, "portfolio");
    get(p, "loading", c.portfolio.loading, "portfolio");
  }
  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    check_keys(s, {"paths", "strata", "quantile", "antithetic", "per_counterparty", "block_size"}, "simulation");
    get(s, "paths", c.simulation.paths, "simulation");
    get(s, "strata", c.simulation.strata, "simulation");
    get(s, "quantile", c.simulation.quantile, "simulation");
    get(s, "antithetic", c.simulation.antithetic, "simulation");
    get(s, "per_counterparty", c.simulation.per_counterparty, "simulation");
    get(s, "block_size", c.simulation.block_size, "simulation");
  }
  if (j.contains("bootstrap")) {
    const auto& b = j["bootstrap"];
    check_keys(b, {"schemes", "block_length", "horizon", "resamples", "clamp_to_hull", "bins"}, "bootstrap");
    if (b.contains("schemes")) {
      std::vector<std::string> names;
      get(b, "schemes", names, "bootstrap");
      c.schemes.clear();
      for (const auto& n : names) c.schemes.push_back(scheme_from_string(n));
    }
    get(b, "block_length", c.bootstrap.block_length, "bootstrap");
    get(b, "horizon", c.bootstrap.horizon, "bootstrap");
    get(b, "resamples", c.bootstrap.resamples, "bootstrap");
    get(b, "clamp_to_hull", c.clamp_to_hull, "bootstrap");
    get(b, "bins", c.var_bins, "bootstrap");
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("cli", "config file not found: " + path.string());
  return config_from_json(io::read_file(path), path.parent_path());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out.generic_string();
  j["data"] = {{"source", c.data.source},       {"returns_csv", c.data.returns_csv.generic_string()},
               {"prices", c.data.prices},       {"date_column", c.data.date_column},
               {"assets", c.data.assets},       {"months", c.data.months},
               {"factors", c.data.factors},     {"volatility", c.data.volatility}};
  j["panel"] = {{"window", c.window}, {"stride", c.stride}};
  j["train"] = {{"epochs", c.train.epochs},         {"learning_rate", c.train.learning_rate},
                {"beta", c.train.beta},             {"batch_size", c.train.batch_size},
                {"hidden", c.train.hidden},         {"validation_fraction", c.validation_fraction}};
  j["latent"] = {{"grid_count", c.grid_count},
                 {"grid_margin", c.grid_margin},
                 {"partition_rows", c.partition_rows},
                 {"partition_cols", c.partition_cols}};
  j["facts"] = {{"linkage", to_string(c.linkage)}, {"histogram_bins", c.histogram_bins}};
  j["portfolio"] = {{"path", c.portfolio.path.generic_string()},
                    {"counterparties", c.portfolio.counterparties},
                    {"loading", c.portfolio.loading}};
  j["simulation"] = {{"paths", c.simulation.paths},
                     {"strata", c.simulation.strata},
                     {"quantile", c.simulation.quantile},
                     {"antithetic", c.simulation.antithetic},
                     {"per_counterparty", c.simulation.per_counterparty},
                     {"block_size", c.simulation.block_size}};
  std::vector<std::string> schemes;
  for (auto s : c.schemes) schemes.push_back(to_string(s));
  j["bootstrap"] = {{"schemes", schemes},
                    {"block_length", c.bootstrap.block_length},
                    {"horizon", c.bootstrap.horizon},
                    {"resamples", c.bootstrap.resamples},
                    {"clamp_to_hull", c.clamp_to_hull},
                    {"bins", c.var_bins}};
  return j.dump(2) + "\n";
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::config: return 2;
      case ErrorKind::data: return 3;
      case ErrorKind::numerical: return 4;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

// ============================================================== commands

void cmd_synthdata(const RunConfig& cfg) {
  cfg.validate();
  const auto& d = cfg.data;
  Stage stage(cfg, "synthdata", cfg.seed,
              {{"assets", d.assets}, {"months", d.months}, {"factors", d.factors}, {"volatility", d.volatility}});
  auto market = default_synthetic_config(d.assets, d.months, d.factors);
  market.volatility = d.volatility;
  const auto returns = generate_synthetic_market(market, cfg.seed);
  stage.write("data/returns.csv", returns_to_csv(returns));
  stage.commit();
  log("synthdata", std::to_string(returns.months()) + " months x " + std::to_string(returns.assets()) + " assets");
}

void cmd_ingest(const RunConfig& cfg, const std::optional<fs::path>& returns_path) {
  cfg.validate();
  CsvSchema schema;
  schema.date_column = cfg.data.date_column;
  schema.kind = cfg.data.prices ? SeriesKind::prices : SeriesKind::log_returns;
  Stage stage(cfg, "ingest", cfg.seed,
              {{"window", cfg.window}, {"stride", cfg.stride}, {"kind", kind_name(schema.kind)}});

  fs::path source;
  if (returns_path) {
    source = *returns_path;
    stage.external_input(source);
  } else if (cfg.data.source == "csv") {
    if (cfg.data.returns_csv.empty()) throw ConfigError("cli", "ingest: data.returns_csv is not set");
    source = cfg.data.returns_csv;
    stage.external_input(source);
  } else {
    stage.input("data/returns.csv");
    source = stage.path("data/returns.csv");
    schema.kind = SeriesKind::log_returns;
  }
  const auto returns = load_returns_csv(source, schema);
  const auto panel = rolling_correlations(returns, cfg.window, cfg.stride);
  save_matrix_panel(panel, stage.reset_dir("panel"));
  stage.output("panel");
  stage.commit();
  log("ingest", std::to_string(panel.size()) + " matrices of dimension " + std::to_string(panel.dim()));
}

void cmd_train(const RunConfig& cfg) {
  cfg.validate();
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  Stage stage(cfg, "train", cfg.seed,
              {{"epochs", tc.epochs},
               {"learning_rate", tc.learning_rate},
               {"beta", tc.beta},
               {"batch_size", tc.batch_size},
               {"hidden", tc.hidden},
               {"validation_fraction", cfg.validation_fraction}});
  stage.input("panel");
  const auto panel = load_matrix_panel(stage.path("panel"));
  const auto split = split_dataset(panel, cfg.validation_fraction, cfg.seed);
  log("train", std::to_string(split.train.size()) + " train / " + std::to_string(split.validation.size()) +
                   " validation matrices, " + std::to_string(tc.epochs) + " epochs");
  const auto trained = train_vae(split.train, split.validation, tc);

  const auto model_dir = stage.reset_dir("model");
  save_vae_bundle(trained.model, model_dir, cfg.seed, hash_tree(stage.path("panel")));
  for (const char* f : {"model/encoder.bin", "model/decoder.bin", "model/model.json"}) stage.output(f);
  stage.write("model/train_report.csv", report_to_csv(trained.report));

  std::vector<std::string> dates;
  std::vector<double> index, is_train, mse;
  for (std::size_t k = 0; k < split.train_indices.size(); ++k) {
    dates.push_back(panel.dates[split.train_indices[k]]);
    index.push_back(double(split.train_indices[k]));
    is_train.push_back(1.0);
    mse.push_back(trained.report.train_sample_mse[k]);
  }
  for (std::size_t k = 0; k < split.validation_indices.size(); ++k) {
    dates.push_back(panel.dates[split.validation_indices[k]]);
    index.push_back(double(split.validation_indices[k]));
    is_train.push_back(0.0);
    mse.push_back(trained.report.validation_sample_mse[k]);
  }
  stage.write("model/sample_mse.csv", labeled_table("date", dates, {"index", "train", "mse"}, {index, is_train, mse}));

  const auto& last = trained.report.epochs.back();
  json summary = {{"train_mse", last.train_mse},
                  {"validation_mse", last.validation_mse},
                  {"train_kl", last.train_kl},
                  {"validation_kl", last.validation_kl},
                  {"baseline_validation_mse", mean_matrix_baseline_mse(split.train, split.validation)},
                  {"train_matrices", split.train.size()},
                  {"validation_matrices", split.validation.size()}};
  stage.write("model/summary.json", summary.dump(2) + "\n");
  stage.commit();
  log("train", "validation mse " + fmt(last.validation_mse) + " (mean-matrix baseline " +
                   fmt(summary["baseline_validation_mse"].get<double>()) + ")");
}

void cmd_encode(const RunConfig& cfg) {
  cfg.validate();
  Stage stage(cfg, "encode", cfg.seed, {{"partition_rows", cfg.partition_rows}, {"partition_cols", cfg.partition_cols}});
  stage.input("panel");
  stage.input("model/encoder.bin");
  stage.input("model/model.json");
  const auto panel = load_matrix_panel(stage.path("panel"));
  const auto model = load_vae_bundle(stage.path("model"));
  const auto encodings = encode(model, panel);
  const auto series = latent_series(encodings, panel.dates);
  const auto features = eigen_features(panel);
  const auto labels = partition_latent(series.points(), cfg.partition_rows, cfg.partition_cols);

  const auto n = panel.size();
  std::vector<double> idx(n), s1(n), s2(n), group(n);
  for (std::size_t k = 0; k < n; ++k) {
    idx[k] = double(k);
    s1[k] = encodings[k].sigma(0);
    s2[k] = encodings[k].sigma(1);
    group[k] = labels[k];
  }
  stage.write("latent/encodings.csv", labeled_table("date", panel.dates, {"index", "mu1", "mu2", "sigma1", "sigma2", "subgroup"},
                                                    {idx, series.mu1, series.mu2, s1, s2, group}));
  stage.write("latent/eigen_features.csv",
              labeled_table("date", panel.dates, {"index", "lambda1", "lambda2", "alpha1", "alpha2"},
                            {idx, features.lambda1, features.lambda2, features.alpha1, features.alpha2}));
  const auto corr = latent_eigen_correlation(series, features);
  json cj = {{"mu1_lambda1", corr.mu1_lambda1}, {"mu2_lambda1", corr.mu2_lambda1},
             {"mu1_alpha1", corr.mu1_alpha1},   {"mu1_alpha2", corr.mu1_alpha2},
             {"mu2_alpha1", corr.mu2_alpha1},   {"mu2_alpha2", corr.mu2_alpha2},
             {"max_abs_lambda1", corr.max_abs_lambda1()}};
  stage.write("latent/latent_eigen.json", cj.dump(2) + "\n");
  stage.commit();
  log("encode", "max |corr(mu, lambda1)| = " + fmt(corr.max_abs_lambda1()));
}

void cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  Stage stage(cfg, "generate", cfg.seed, {{"grid_count", cfg.grid_count}, {"grid_margin", cfg.grid_margin}});
  stage.input("latent/encodings.csv");
  stage.input("model/decoder.bin");
  stage.input("model/model.json");
  const auto series = read_latent(cfg.out);
  const auto model = load_vae_bundle(stage.path("model"));
  const auto grid = build_grid(series.points(), cfg.grid_count, cfg.grid_margin, cfg.seed);
  std::vector<double> idx, z1, z2;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    idx.push_back(double(i));
    z1.push_back(grid.points[i](0));
    z2.push_back(grid.points[i](1));
  }
  stage.write("grid/grid.csv", io::table_to_csv({"index", "z1", "z2"}, {idx, z1, z2}));
  auto synthetic = generate_synthetic_panel(model, grid, cfg.threads);
  const auto hist = load_matrix_panel(stage.path("panel"));
  synthetic.window = hist.window;
  synthetic.stride = hist.stride;
  save_matrix_panel(synthetic, stage.reset_dir("synthetic"));
  stage.output("synthetic");
  stage.commit();
  log("generate", std::to_string(synthetic.size()) + " synthetic matrices");
}

void cmd_facts(const RunConfig& cfg) {
  cfg.validate();
  Stage stage(cfg, "facts", cfg.seed, {{"linkage", to_string(cfg.linkage)}, {"histogram_bins", cfg.histogram_bins}});
  stage.input("panel");
  stage.input("synthetic");
  const auto historical = load_matrix_panel(stage.path("panel"));
  const auto synthetic = load_matrix_panel(stage.path("synthetic"));
  const double q = mp_ratio(historical);
  if (!(q > 1.0))
    throw ConfigError("stylized-facts", "window / assets must exceed 1 for the Marchenko-Pastur check");
  for (const auto& [name, panel] : {std::pair{"historical", &historical}, std::pair{"synthetic", &synthetic}}) {
    const auto report = stylized_fact_report(*panel, q, cfg.linkage, cfg.threads);
    const auto tables = facts_tables(*panel, report, q);
    const std::string base = std::string("facts/") + name;
    stage.write(base + ".json", report_to_json(report));
    stage.write(base + "_per_matrix.csv", tables.per_matrix);
    stage.write(base + "_spectrum.csv", tables.spectrum);
    stage.write(base + "_pairwise.csv", tables.pairwise);
    log("facts", std::string(name) + ": mean rho " + fmt(report.pairwise.mean) + ", lambda1 above edge " +
                     fmt(report.fraction_lambda1_above_edge) + ", Perron " + fmt(report.fraction_perron));
  }
  stage.commit();
}

void cmd_var(const RunConfig& cfg, const fs::path& matrix_csv) {
  cfg.validate();
  const SimConfig sim = simulation_for(cfg, cfg.threads);
  Stage stage(cfg, "var", sim.seed, {{"simulation", simulation_settings(sim)}, {"portfolio", portfolio_settings(cfg)}});
  stage.external_input(matrix_csv);
  if (!cfg.portfolio.path.empty()) stage.external_input(cfg.portfolio.path);
  const auto m = io::read_matrix_csv(matrix_csv);
  const auto factors = CorrelationMatrix::unchecked(m.labels, m.values);
  const auto portfolio = resolve_portfolio(cfg, factors.dim());
  const auto dist = simulate_losses(portfolio, factors, sim);

  json j = {{"matrix", matrix_csv.filename().generic_string()},
            {"factors", factors.dim()},
            {"quantile", sim.quantile},
            {"var", var_quantile(dist, sim.quantile)},
            {"var_standard_error", var_standard_error(dist, sim.quantile)},
            {"expected_loss", expected_loss(dist)},
            {"expected_loss_standard_error", expected_loss_standard_error(dist)},
            {"total_exposure", portfolio.total_exposure()},
            {"max_loss", portfolio.max_loss()}};
  stage.write("var/var.json", j.dump(2) + "\n");
  std::vector<double> qs = {0.5, 0.9, 0.95, 0.99, 0.995, 0.999, 0.9995, 0.9999}, vs;
  for (double q : qs) vs.push_back(var_quantile(dist, q));
  stage.write("var/loss_quantiles.csv", io::table_to_csv({"quantile", "loss"}, {qs, vs}));
  stage.write("var/portfolio.json", portfolio_to_json(portfolio));
  stage.commit();
  log("var", "VaR(" + fmt(sim.quantile) + ") = " + fmt(j["var"].get<double>()));
}

void cmd_surface(const RunConfig& cfg) {
  cfg.validate();
  // Parallelism goes over grid points; each simulation runs single-threaded.
  const SimConfig sim = simulation_for(cfg, 1);
  Stage stage(cfg, "surface", sim.seed, {{"simulation", simulation_settings(sim)}, {"portfolio", portfolio_settings(cfg)}});
  stage.input("grid/grid.csv");
  stage.input("model/decoder.bin");
  stage.input("model/model.json");
  if (!cfg.portfolio.path.empty()) stage.external_input(cfg.portfolio.path);
  const auto model = load_vae_bundle(stage.path("model"));
  const auto grid = read_grid(cfg.out);
  const auto portfolio = resolve_portfolio(cfg, model.dim());
  log("surface", std::to_string(grid.size()) + " grid points x " + std::to_string(sim.paths) + " paths");
  const auto surface = build_var_surface(model, grid, monte_carlo_evaluator(portfolio, sim), cfg.threads);
  stage.write("surface/surface.csv", surface_to_csv(surface));
  stage.write("surface/portfolio.json", portfolio_to_json(portfolio));
  const auto [lo, hi] = std::minmax_element(surface.values().begin(), surface.values().end());
  json j = {{"method", surface.method()},
            {"points", surface.values().size()},
            {"triangles", surface.triangulation().triangles().size()},
            {"quantile", sim.quantile},
            {"min_var", *lo},
            {"max_var", *hi}};
  stage.write("surface/surface.json", j.dump(2) + "\n");
  stage.commit();
  log("surface", "VaR range [" + fmt(*lo) + ", " + fmt(*hi) + "]");
}

void cmd_bootstrap(const RunConfig& cfg) {
  cfg.validate();
  json settings = {{"horizon", cfg.bootstrap.horizon},
                   {"block_length", cfg.bootstrap.block_length},
                   {"resamples", cfg.bootstrap.resamples},
                   {"clamp_to_hull", cfg.clamp_to_hull}};
  Stage stage(cfg, "bootstrap", substream_seed(cfg.seed, "bootstrap"), settings);
  stage.input("surface/surface.csv");
  stage.input("latent/encodings.csv");
  const auto surface = surface_from_csv(io::read_file(stage.path("surface/surface.csv")));
  const auto series = read_latent(cfg.out);
  for (auto scheme : cfg.schemes) {
    BootstrapConfig bc = cfg.bootstrap;
    bc.scheme = scheme;
    bc.seed = substream_seed(cfg.seed, "bootstrap-" + to_string(scheme));
    const auto endpoints = bootstrap_latent_paths(series, bc);
    const auto report = var_distribution(surface, endpoints, cfg.var_bins, cfg.clamp_to_hull);
    const std::string name = to_string(scheme);
    stage.write("bootstrap/" + name + ".json", var_distribution_to_json(report, bc));
    std::vector<double> z1, z2, inside;
    for (const auto& z : endpoints) {
      z1.push_back(z(0));
      z2.push_back(z(1));
      inside.push_back(surface.triangulation().inside_hull(z) ? 1.0 : 0.0);
    }
    stage.write("bootstrap/" + name + "_endpoints.csv",
                io::table_to_csv({"z1", "z2", "var", "inside_hull"}, {z1, z2, report.samples, inside}));
    log("bootstrap", name + ": mean VaR " + fmt(report.mean) + ", 90% band [" + fmt(report.q05) + ", " +
                         fmt(report.q95) + "], " + std::to_string(report.clamped) + " clamped");
  }
  stage.commit();
}

// ---------------------------------------------------------------- report

namespace {

struct Report {
  Stage& stage;
  std::vector<std::pair<std::string, std::string>> figures;

  void figure(const std::string& name, const std::string& caption, const std::string& svg, const std::string& csv) {
    stage.write("report/" + name + ".svg", svg);
    stage.write("report/" + name + ".csv", csv);
    figures.emplace_back(name, caption);
  }
};

std::vector<double> range_index(std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 0.0);
  return v;
}

/// Histograms of several samples on shared bins.
std::pair<std::vector<double>, std::vector<std::vector<double>>> shared_histograms(
    const std::vector<std::vector<double>>& samples, int bins) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : samples)
    for (double v : s) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<std::vector<double>> masses;
  for (const auto& s : samples) masses.push_back(make_histogram(s, lo, hi, bins).mass);
  std::vector<double> left(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) left[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  return {left, masses};
}

Eigen::MatrixXd reorder(const Eigen::MatrixXd& m, const std::vector<int>& order) {
  Eigen::MatrixXd r(m.rows(), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = 0; j < order.size(); ++j)
      r(Eigen::Index(i), Eigen::Index(j)) = m(order[i], order[j]);
  return r;
}

}  // namespace

void cmd_report(const RunConfig& cfg) {
  cfg.validate();
  Stage stage(cfg, "report", cfg.seed, json::object());
  for (const char* in : {"model/train_report.csv", "model/sample_mse.csv", "model/summary.json", "latent/encodings.csv",
                         "latent/eigen_features.csv", "latent/latent_eigen.json", "grid/grid.csv", "synthetic",
                         "facts/historical.json", "facts/synthetic.json", "surface/surface.csv"})
    stage.input(in);
  for (auto scheme : cfg.schemes) stage.input("bootstrap/" + to_string(scheme) + ".json");
  fs::remove_all(stage.path("report"));
  Report rep{stage, {}};
  const auto& out = cfg.out;

  {  // Training curves
    const auto t = read_table(out / "model/train_report.csv");
    svg::Plot p("Reconstruction error by epoch", "epoch", "per-entry MSE");
    p.line(t.col("epoch"), t.col("train_mse"), svg::palette(0), "train");
    p.line(t.col("epoch"), t.col("validation_mse"), svg::palette(1), "validation");
    rep.figure("training_curves", "Per-entry reconstruction MSE of train and validation sets by epoch.", p.render(),
               io::read_file(out / "model/train_report.csv"));
  }
  {  // Per-matrix MSE histograms
    const auto t = read_table(out / "model/sample_mse.csv");
    const auto flag = t.col("train"), mse = t.col("mse");
    std::vector<double> tr, va;
    for (std::size_t i = 0; i < mse.size(); ++i) (flag[i] > 0.5 ? tr : va).push_back(mse[i]);
    const auto [left, masses] = shared_histograms({tr, va}, 20);
    const double w = left.size() > 1 ? left[1] - left[0] : 1.0;
    svg::Plot p("Per-matrix reconstruction error", "MSE", "fraction of matrices");
    p.bars(left, w, masses[0], svg::palette(0), "train");
    p.bars(left, w, masses[1], svg::palette(1), "validation");
    rep.figure("mse_histogram", "Distribution of per-matrix MSE for train and validation matrices.", p.render(),
               io::table_to_csv({"bin_left", "train_mass", "validation_mass"}, {left, masses[0], masses[1]}));
  }

  const auto enc = read_table(out / "latent/encodings.csv");
  const auto feat = read_table(out / "latent/eigen_features.csv");
  const auto mu1 = enc.col("mu1"), mu2 = enc.col("mu2"), group = enc.col("subgroup");
  const auto l1 = feat.col("lambda1"), l2 = feat.col("lambda2");
  const auto time = range_index(mu1.size());
  {  // Latent subgroups, dot size by lambda2
    const double l2max = *std::max_element(l2.begin(), l2.end());
    std::vector<std::string> colors;
    std::vector<double> radii;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      colors.push_back(svg::palette(static_cast<int>(group[i])));
      radii.push_back(2.0 + 5.0 * l2[i] / l2max);
    }
    svg::Plot p("Latent means by subgroup", "mu1", "mu2");
    p.points(mu1, mu2, colors, radii);
    rep.figure("latent_subgroups", "Posterior means colored by rectangular subgroup; dot size follows lambda2.",
               p.render(), io::table_to_csv({"mu1", "mu2", "subgroup", "lambda1", "lambda2"}, {mu1, mu2, group, l1, l2}));
  }
  {
    svg::Plot p("Latent coordinates against the top eigenvalue", "lambda1", "mu");
    p.points(l1, mu1, svg::palette(0), "mu1");
    p.points(l1, mu2, svg::palette(1), "mu2");
    rep.figure("latent_vs_lambda1", "Each latent coordinate plotted against lambda1 of the encoded matrix.", p.render(),
               io::table_to_csv({"lambda1", "mu1", "mu2"}, {l1, mu1, mu2}));
  }
  {
    svg::Plot p("Latent trajectory", "month index", "mu");
    p.line(time, mu1, svg::palette(0), "mu1");
    p.line(time, mu2, svg::palette(1), "mu2");
    rep.figure("latent_timeseries", "Posterior means through time.", p.render(),
               labeled_table("date", enc.text("date"), {"mu1", "mu2"}, {mu1, mu2}));
  }
  {
    const auto a1 = feat.col("alpha1"), a2 = feat.col("alpha2");
    svg::Plot p("Eigen features", "month index", "value");
    p.line(time, l1, svg::palette(2), "lambda1");
    p.line(time, l2, svg::palette(3), "lambda2");
    rep.figure("eigenvalues", "Top two eigenvalues through time.", p.render(),
               labeled_table("date", feat.text("date"), {"lambda1", "lambda2"}, {l1, l2}));
    svg::Plot q("Eigenvector alignment with the time average", "month index", "cosine similarity");
    q.line(time, a1, svg::palette(0), "alpha1");
    q.line(time, a2, svg::palette(1), "alpha2");
    rep.figure("eigenvector_alignment", "Cosine similarity of the top two eigenvectors with their mean.", q.render(),
               labeled_table("date", feat.text("date"), {"alpha1", "alpha2"}, {a1, a2}));
  }

  const auto grid = read_grid(out);
  std::vector<double> g1, g2;
  for (const auto& z : grid.points) g1.push_back(z(0)), g2.push_back(z(1));
  {
    svg::Plot p("Sampling grid over the latent space", "z1", "z2");
    p.points(g1, g2, svg::palette(3), "grid", 3.5);
    p.points(mu1, mu2, svg::palette(0), "historical", 2.0);
    rep.figure("latent_grid", "Grid points used for generation together with the historical means.", p.render(),
               io::table_to_csv({"z1", "z2"}, {g1, g2}));
  }
  {
    const auto synthetic = load_matrix_panel(out / "synthetic");
    for (std::size_t k : {std::size_t(0), synthetic.size() / 2, synthetic.size() - 1}) {
      const auto& m = synthetic.matrices[k];
      const auto order = dendrogram_order(hierarchical_dendrogram(m, cfg.linkage), static_cast<int>(m.dim()));
      const auto r = reorder(m.values(), order);
      std::vector<std::string> labels;
      for (int o : order) labels.push_back(m.labels()[static_cast<std::size_t>(o)]);
      rep.figure("synthetic_matrix_" + std::to_string(k),
                 "Synthetic matrix at grid point " + std::to_string(k) + ", assets in dendrogram order.",
                 svg::heatmap(r, "grid point " + std::to_string(k)), io::matrix_to_csv(labels, r));
    }
  }
  {
    const auto h = read_table(out / "facts/historical_pairwise.csv"), s = read_table(out / "facts/synthetic_pairwise.csv");
    const auto x = h.col("rho");
    const double w = x.size() > 1 ? x[1] - x[0] : 0.05;
    std::vector<double> left;
    for (double c : x) left.push_back(c - w / 2);
    svg::Plot p("Pairwise correlations", "rho", "mass");
    p.bars(left, w, h.col("mass"), svg::palette(0), "historical");
    p.bars(left, w, s.col("mass"), svg::palette(3), "synthetic");
    rep.figure("pairwise_correlations", "Pooled off-diagonal correlations of historical and synthetic matrices.",
               p.render(), io::table_to_csv({"rho", "historical_mass", "synthetic_mass"}, {x, h.col("mass"), s.col("mass")}));
  }
  {
    const auto h = read_table(out / "facts/historical_spectrum.csv"), s = read_table(out / "facts/synthetic_spectrum.csv");
    svg::Plot p("Bulk spectrum and Marchenko-Pastur density", "eigenvalue", "density");
    p.points(h.col("lambda"), h.col("empirical_density"), svg::palette(0), "historical");
    p.points(s.col("lambda"), s.col("empirical_density"), svg::palette(3), "synthetic");
    p.line(h.col("lambda"), h.col("mp_density"), "#000000", "Marchenko-Pastur");
    rep.figure("spectrum", "Density of pooled eigenvalues below the upper edge against the Marchenko-Pastur law.",
               p.render(),
               io::table_to_csv({"lambda", "historical_density", "synthetic_density", "mp_density"},
                                {h.col("lambda"), h.col("empirical_density"), s.col("empirical_density"),
                                 h.col("mp_density")}));
  }
  {
    const auto h = read_table(out / "facts/historical_per_matrix.csv"), s = read_table(out / "facts/synthetic_per_matrix.csv");
    svg::Plot p("Top eigenvector minimum component", "matrix index", "min component");
    p.points(h.col("index"), h.col("perron_min_component"), svg::palette(0), "historical");
    p.points(s.col("index"), s.col("perron_min_component"), svg::palette(3), "synthetic");
    rep.figure("perron", "Smallest component of the sign-normalized top eigenvector per matrix.", p.render(),
               io::read_file(out / "facts/synthetic_per_matrix.csv"));
  }
  {
    const auto hj = json::parse(io::read_file(out / "facts/historical.json"));
    const auto sj = json::parse(io::read_file(out / "facts/synthetic.json"));
    std::vector<double> steps, hh, sh;
    for (const auto& m : hj["hierarchy"]["sample_merges"]) hh.push_back(m["height"].get<double>());
    for (const auto& m : sj["hierarchy"]["sample_merges"]) sh.push_back(m["height"].get<double>());
    steps = range_index(std::min(hh.size(), sh.size()));
    hh.resize(steps.size());
    sh.resize(steps.size());
    svg::Plot p("Dendrogram merge heights", "merge", "height");
    p.line(steps, hh, svg::palette(0), "historical");
    p.line(steps, sh, svg::palette(3), "synthetic");
    rep.figure("dendrogram_heights", "Merge heights of the first historical and synthetic dendrograms.", p.render(),
               io::table_to_csv({"merge", "historical_height", "synthetic_height"}, {steps, hh, sh}));

    auto hd = hj["mst"]["degree_histogram"].get<std::vector<double>>();
    auto sd = sj["mst"]["degree_histogram"].get<std::vector<double>>();
    const std::size_t n = std::max(hd.size(), sd.size());
    hd.resize(n);
    sd.resize(n);
    const auto deg = range_index(n);
    std::vector<double> hl, sl;
    for (double d : deg) hl.push_back(d - 0.4), sl.push_back(d);
    svg::Plot q("MST degree distribution of the mean matrix", "degree", "nodes");
    q.bars(hl, 0.4, hd, svg::palette(0), "historical");
    q.bars(sl, 0.4, sd, svg::palette(3), "synthetic");
    rep.figure("mst_degree", "Node degree counts of the minimum spanning tree of each panel's mean matrix.",
               q.render(), io::table_to_csv({"degree", "historical_nodes", "synthetic_nodes"}, {deg, hd, sd}));
  }

  const auto surface = surface_from_csv(io::read_file(out / "surface/surface.csv"));
  {
    const auto box = bounding_box(surface.points());
    const int res = 48;
    const double w = (box.hi(0) - box.lo(0)) / res, h = (box.hi(1) - box.lo(1)) / res;
    std::vector<double> cx, cy, cv;
    for (int i = 0; i < res; ++i)
      for (int j = 0; j < res; ++j) {
        const Eigen::Vector2d z(box.lo(0) + (i + 0.5) * w, box.lo(1) + (j + 0.5) * h);
        if (!surface.triangulation().inside_hull(z)) continue;
        cx.push_back(z(0));
        cy.push_back(z(1));
        cv.push_back(interpolate_var(surface, z).value);
      }
    const auto [lo, hi] = std::minmax_element(surface.values().begin(), surface.values().end());
    std::vector<std::string> colors;
    for (double v : cv) colors.push_back(svg::diverging((v - *lo) / std::max(1e-300, *hi - *lo)));
    std::vector<double> x0, y0;
    for (std::size_t k = 0; k < cx.size(); ++k) x0.push_back(cx[k] - w / 2), y0.push_back(cy[k] - h / 2);
    svg::Plot p("VaR over the latent space", "z1", "z2");
    p.cells(x0, y0, w, h, colors);
    std::vector<double> n1, n2;
    for (const auto& z : surface.points()) n1.push_back(z(0)), n2.push_back(z(1));
    p.points(n1, n2, "#333333", "grid nodes", 1.5);
    p.line(mu1, mu2, "#000000", "historical path");
    rep.figure("var_surface", "Interpolated VaR across the latent grid hull with the historical latent path.",
               p.render(), io::table_to_csv({"z1", "z2", "var"}, {cx, cy, cv}));
  }
  {
    svg::Plot p("VaR distribution at the bootstrap horizon", "VaR", "fraction of resamples");
    svg::Plot e("Bootstrap endpoints", "z1", "z2");
    std::vector<std::vector<double>> samples;
    std::vector<std::string> header{"bin_left"};
    for (auto scheme : cfg.schemes) {
      const auto t = read_table(out / ("bootstrap/" + to_string(scheme) + "_endpoints.csv"));
      samples.push_back(t.col("var"));
      header.push_back(to_string(scheme) + "_mass");
      e.points(t.col("z1"), t.col("z2"), svg::palette(static_cast<int>(samples.size()) + 1), to_string(scheme), 1.5);
    }
    e.line(mu1, mu2, "#000000", "historical path");
    const auto [left, masses] = shared_histograms(samples, cfg.var_bins);
    const double w = left.size() > 1 ? left[1] - left[0] : 1.0;
    std::vector<std::vector<double>> cols{left};
    for (std::size_t k = 0; k < masses.size(); ++k) {
      p.bars(left, w, masses[k], svg::palette(static_cast<int>(k) + 2), to_string(cfg.schemes[k]));
      cols.push_back(masses[k]);
    }
    rep.figure("var_distribution", "Interpolated VaR at the bootstrapped latent endpoints.", p.render(),
               io::table_to_csv(header, cols));
    std::string endpoints_csv = "scheme,z1,z2\n";
    for (auto scheme : cfg.schemes) {
      const auto t = read_table(out / ("bootstrap/" + to_string(scheme) + "_endpoints.csv"));
      const auto z1 = t.col("z1"), z2 = t.col("z2");
      for (std::size_t i = 0; i < z1.size(); ++i)
        endpoints_csv += to_string(scheme) + "," + fmt(z1[i]) + "," + fmt(z2[i]) + "\n";
    }
    rep.figure("bootstrap_endpoints", "Latent endpoints of the bootstrap resamples.", e.render(), endpoints_csv);
  }

  json summary;
  summary["training"] = json::parse(io::read_file(out / "model/summary.json"));
  summary["latent"] = json::parse(io::read_file(out / "latent/latent_eigen.json"));
  for (const char* kind : {"historical", "synthetic"}) {
    const auto f = json::parse(io::read_file(out / (std::string("facts/") + kind + ".json")));
    summary["facts"][kind] = {{"mean_pairwise", f["pairwise"]["mean"]},
                              {"fraction_lambda1_above_edge", f["marchenko_pastur"]["fraction_lambda1_above_edge"]},
                              {"fraction_perron", f["perron_frobenius"]["fraction_holding"]},
                              {"dendrograms_monotone", f["hierarchy"]["monotone"]},
                              {"all_msts_spanning", f["mst"]["all_spanning"]}};
  }
  for (auto scheme : cfg.schemes)
    summary["bootstrap"][to_string(scheme)] =
        json::parse(io::read_file(out / ("bootstrap/" + to_string(scheme) + ".json")));
  stage.write("report/summary.json", summary.dump(2) + "\n");

  std::string index = "# Run report\n\nRoot seed " + std::to_string(cfg.seed) + ", tool version " + kVersion + ".\n\n";
  for (const auto& [name, caption] : rep.figures)
    index += "- `" + name + ".svg` (data `" + name + ".csv`): " + caption + "\n";
  stage.write("report/index.md", index);
  stage.commit();
  log("report", std::to_string(rep.figures.size()) + " figures in " + stage.path("report").string());
}

void cmd_run(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.data.source == "synthetic") cmd_synthdata(cfg);
  cmd_ingest(cfg);
  cmd_train(cfg);
  cmd_encode(cfg);
  cmd_generate(cfg);
  cmd_facts(cfg);
  cmd_surface(cfg);
  cmd_bootstrap(cfg);
  cmd_report(cfg);
}

}  // namespace corrvae::pipeline
