#include "corrvae/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace pl = corrvae::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Correlation-matrix VAE pipeline: data, training, stylized facts, credit VaR surface, bootstrap"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pl::kVersion);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root seed; overrides the config");
  app.add_option("--out", out, "Output directory; overrides the config");
  app.add_option("--threads", threads, "Worker threads; overrides the config")->check(CLI::PositiveNumber);

  std::string returns;
  std::string matrix;
  std::string portfolio;

  auto* ingest = app.add_subcommand("ingest", "Rolling correlation matrices from a returns CSV");
  ingest->add_option("--returns", returns, "Returns CSV; defaults to the config or the synthdata output");
  app.add_subcommand("synthdata", "Draw synthetic monthly returns from the factor model");
  app.add_subcommand("train", "Train the VAE on the ingested panel");
  app.add_subcommand("encode", "Encode the panel and compute eigen features");
  app.add_subcommand("generate", "Build the latent grid and decode synthetic matrices");
  app.add_subcommand("facts", "Stylized-fact checks on historical and synthetic matrices");
  auto* var = app.add_subcommand("var", "Monte Carlo VaR under one factor correlation matrix");
  var->add_option("--matrix", matrix, "Factor correlation matrix CSV")->required();
  var->add_option("--portfolio", portfolio, "Portfolio JSON; overrides the config");
  auto* surface = app.add_subcommand("surface", "VaR at every grid point");
  surface->add_option("--portfolio", portfolio, "Portfolio JSON; overrides the config");
  app.add_subcommand("bootstrap", "VaR distribution from bootstrapped latent paths");
  app.add_subcommand("report", "Assemble figures and summary");
  auto* run = app.add_subcommand("run", "Every stage in order");
  run->add_option("--portfolio", portfolio, "Portfolio JSON; overrides the config");
  app.add_subcommand("print-config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    pl::RunConfig cfg = config_path.empty() ? pl::RunConfig{} : pl::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (threads) cfg.threads = *threads;
    if (!portfolio.empty()) cfg.portfolio.path = portfolio;
    cfg.validate();

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "ingest") {
      pl::cmd_ingest(cfg, returns.empty() ? std::nullopt : std::optional<std::filesystem::path>(returns));
    } else if (cmd == "synthdata") {
      pl::cmd_synthdata(cfg);
    } else if (cmd == "train") {
      pl::cmd_train(cfg);
    } else if (cmd == "encode") {
      pl::cmd_encode(cfg);
    } else if (cmd == "generate") {
      pl::cmd_generate(cfg);
    } else if (cmd == "facts") {
      pl::cmd_facts(cfg);
    } else if (cmd == "var") {
      pl::cmd_var(cfg, matrix);
    } else if (cmd == "surface") {
      pl::cmd_surface(cfg);
    } else if (cmd == "bootstrap") {
      pl::cmd_bootstrap(cfg);
    } else if (cmd == "report") {
      pl::cmd_report(cfg);
    } else if (cmd == "run") {
      pl::cmd_run(cfg);
    } else if (cmd == "print-config") {
      std::cout << pl::config_to_json(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::exit_code_for(e);
  }
  return 0;
}
