#include "corrvae/creditrisk.hpp"

#include "corrvae/error.hpp"
#include "corrvae/io.hpp"
#include "corrvae/linalg.hpp"
#include "corrvae/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

namespace corrvae {

namespace {

std::atomic<std::uint64_t> g_simulations{0};

double acklam_lower(double p) {
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  const double q = std::sqrt(-2.0 * std::log(p));
  return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double acklam_central(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lower half only; the upper half is mirrored so 1 - p stays exact.
double inv_cdf_lower_half(double p) {
  double x = p < 0.02425 ? acklam_lower(p) : acklam_central(p);
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

struct Prepared {
  Eigen::MatrixXd alpha;              // K x K factor root
  std::vector<double> threshold;      // normal_inv_cdf(pd) per sub-portfolio
  std::vector<double> idio_scale;     // sqrt(1 - loading^2)
};

double conditional_default_probability(const SubPortfolio& s, double threshold, double scale,
                                       double y) {
  if (s.pd <= 0.0) return 0.0;
  if (s.pd >= 1.0) return 1.0;
  return normal_cdf((threshold - s.loading * y) / scale);
}

void simulate_block(const PortfolioSpec& portfolio, const Prepared& prep, const SimConfig& cfg,
                    long block, std::vector<double>& losses) {
  const long begin = block * cfg.block_size;
  const long end = std::min(cfg.paths, begin + cfg.block_size);
  const auto k = static_cast<int>(prep.alpha.rows());
  Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(block)));
  std::normal_distribution<double> normal(0.0, 1.0);
  StratifiedSampler sampler(cfg.strata, k);
  Eigen::VectorXd z(k);
  Eigen::VectorXd y(k);
  for (long p = begin; p < end; ++p) {
    if (cfg.antithetic && (p % 2 == 1)) {
      z = -z;
    } else {
      sampler.draw(p, rng, z);
    }
    y.noalias() = prep.alpha * z;
    double loss = 0.0;
    for (std::size_t j = 0; j < portfolio.sub_portfolios.size(); ++j) {
      const auto& s = portfolio.sub_portfolios[j];
      const double yj = y(s.factor);
      long defaults = 0;
      if (cfg.per_counterparty) {
        for (long c = 0; c < s.counterparties; ++c) {
          const double v = s.loading * yj + prep.idio_scale[j] * normal(rng);
          if (s.pd >= 1.0 || (s.pd > 0.0 && v < prep.threshold[j])) ++defaults;
        }
      } else {
        const double cp = conditional_default_probability(s, prep.threshold[j], prep.idio_scale[j], yj);
        if (cp >= 1.0) {
          defaults = s.counterparties;
        } else if (cp > 0.0) {
          defaults = std::binomial_distribution<long>(s.counterparties, cp)(rng);
        }
      }
      loss += double(defaults) * s.obligor_loss();
    }
    losses[static_cast<std::size_t>(p)] = loss;
  }
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw NumericalError("creditrisk", "normal_inv_cdf: probability outside (0, 1)");
  return p <= 0.5 ? inv_cdf_lower_half(p) : -inv_cdf_lower_half(1.0 - p);
}

double PortfolioSpec::total_exposure() const {
  double s = 0.0;
  for (const auto& p : sub_portfolios) s += p.exposure;
  return s;
}

double PortfolioSpec::max_loss() const {
  double s = 0.0;
  for (const auto& p : sub_portfolios) s += p.exposure * p.lgd;
  return s;
}

void PortfolioSpec::validate(Eigen::Index factors) const {
  if (sub_portfolios.empty()) throw ConfigError("creditrisk", "portfolio has no sub-portfolios");
  for (const auto& s : sub_portfolios) {
    const auto who = "sub-portfolio '" + s.name + "': ";
    if (!(s.exposure >= 0.0) || !std::isfinite(s.exposure))
      throw ConfigError("creditrisk", who + "exposure must be finite and >= 0");
    if (!(s.pd >= 0.0 && s.pd <= 1.0)) throw ConfigError("creditrisk", who + "pd outside [0, 1]");
    if (!(s.lgd >= 0.0 && s.lgd <= 1.0)) throw ConfigError("creditrisk", who + "lgd outside [0, 1]");
    if (!(std::abs(s.loading) < 1.0)) throw ConfigError("creditrisk", who + "|loading| must be < 1");
    if (s.factor < 0 || s.factor >= factors)
      throw ConfigError("creditrisk", who + "factor index " + std::to_string(s.factor) +
                                          " outside the " + std::to_string(factors) + " factors");
    if (s.counterparties < 1) throw ConfigError("creditrisk", who + "needs at least one counterparty");
  }
  if (!(total_exposure() > 0.0)) throw ConfigError("creditrisk", "total exposure must be positive");
}

PortfolioSpec portfolio_from_json(const std::string& text) {
  PortfolioSpec out;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& s : j.at("sub_portfolios")) {
      SubPortfolio sp;
      sp.name = s.value("name", std::string("sub") + std::to_string(out.sub_portfolios.size()));
      sp.exposure = s.at("exposure").get<double>();
      sp.pd = s.at("pd").get<double>();
      sp.lgd = s.value("lgd", 1.0);
      sp.loading = s.at("loading").get<double>();
      sp.factor = s.at("factor").get<int>();
      sp.counterparties = s.value("counterparties", 1L);
      out.sub_portfolios.push_back(std::move(sp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("creditrisk", std::string("bad portfolio JSON: ") + e.what());
  }
  return out;
}

std::string portfolio_to_json(const PortfolioSpec& portfolio) {
  nlohmann::json j;
  auto subs = nlohmann::json::array();
  for (const auto& s : portfolio.sub_portfolios)
    subs.push_back({{"name", s.name},
                    {"exposure", s.exposure},
                    {"pd", s.pd},
                    {"lgd", s.lgd},
                    {"loading", s.loading},
                    {"factor", s.factor},
                    {"counterparties", s.counterparties}});
  j["sub_portfolios"] = subs;
  return j.dump(2) + "\n";
}

PortfolioSpec load_portfolio(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("creditrisk", "portfolio file not found: " + path.string());
  return portfolio_from_json(io::read_file(path));
}

PortfolioSpec demo_portfolio(int factors, long counterparties, double loading) {
  PortfolioSpec p;
  for (int f = 0; f < factors; ++f) {
    SubPortfolio s;
    s.name = "S" + std::to_string(f);
    s.exposure = 100.0 * (1.0 + (f % 5));
    s.pd = 0.005 + 0.005 * (f % 4);
    s.lgd = 0.45;
    s.loading = loading;
    s.factor = f;
    s.counterparties = counterparties;
    p.sub_portfolios.push_back(s);
  }
  return p;
}

void SimConfig::validate() const {
  if (paths < 1) throw ConfigError("creditrisk", "paths must be >= 1");
  if (strata < 1) throw ConfigError("creditrisk", "strata must be >= 1");
  if (paths < strata) throw ConfigError("creditrisk", "paths must be >= strata");
  if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("creditrisk", "quantile must lie in (0, 1)");
  if (block_size < 1) throw ConfigError("creditrisk", "block size must be >= 1");
  if (antithetic && block_size % 2 != 0)
    throw ConfigError("creditrisk", "antithetic sampling needs an even block size");
}

std::string loss_distribution_to_csv(const LossDistribution& dist) {
  return io::table_to_csv({"loss", "weight"}, {dist.losses, dist.weights});
}

StratifiedSampler::StratifiedSampler(long strata, int dimension) : strata_(strata), dimension_(dimension) {
  if (strata < 1) throw ConfigError("creditrisk", "strata must be >= 1");
  if (dimension < 1) throw ConfigError("creditrisk", "sampler dimension must be >= 1");
}

void StratifiedSampler::draw(long path, Rng& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  const long stratum = path % strata_;
  out(0) = normal_inv_cdf((double(stratum) + uniform_open01(rng)) / double(strata_));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 1; i < dimension_; ++i) out(i) = normal(rng);
}

Eigen::MatrixXd stratified_normals(const SimConfig& cfg, int dimension, long count) {
  if (count < 1) throw ConfigError("creditrisk", "count must be >= 1");
  StratifiedSampler sampler(cfg.strata, dimension);
  Eigen::MatrixXd out(dimension, count);
  for (long block = 0; block * cfg.block_size < count; ++block) {
    Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(block)));
    const long end = std::min(count, (block + 1) * cfg.block_size);
    for (long p = block * cfg.block_size; p < end; ++p) sampler.draw(p, rng, out.col(p));
  }
  return out;
}

LossDistribution simulate_losses(const PortfolioSpec& portfolio, const CorrelationMatrix& factors,
                                 const SimConfig& cfg) {
  ++g_simulations;
  cfg.validate();
  portfolio.validate(factors.dim());
  if (auto violation = correlation_violation(factors.values()))
    throw NumericalError("creditrisk", "factor correlation matrix is invalid (" + *violation +
                                           "); repair it with repair_to_correlation first");

  Prepared prep;
  prep.alpha = spectral_root(factors.values()).alpha;
  for (const auto& s : portfolio.sub_portfolios) {
    prep.threshold.push_back(s.pd > 0.0 && s.pd < 1.0 ? normal_inv_cdf(s.pd) : 0.0);
    prep.idio_scale.push_back(std::sqrt(1.0 - s.loading * s.loading));
  }

  std::vector<double> losses(static_cast<std::size_t>(cfg.paths));
  const long blocks = (cfg.paths + cfg.block_size - 1) / cfg.block_size;
  parallel_for(blocks, cfg.threads, [&](long b) { simulate_block(portfolio, prep, cfg, b, losses); });

  std::sort(losses.begin(), losses.end());
  LossDistribution dist;
  dist.losses = std::move(losses);
  dist.weights.assign(dist.losses.size(), 1.0 / double(dist.losses.size()));
  return dist;
}

std::uint64_t simulation_count() { return g_simulations.load(); }

double var_quantile(const LossDistribution& dist, double q) {
  if (dist.losses.empty()) throw DataError("creditrisk", "empty loss distribution");
  if (dist.weights.size() != dist.losses.size())
    throw DataError("creditrisk", "loss and weight counts differ");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("creditrisk", "quantile must lie in [0, 1]");
  double cumulative = 0.0;
  for (std::size_t i = 0; i < dist.losses.size(); ++i) {
    cumulative += dist.weights[i];
    if (cumulative >= q - 1e-12) return dist.losses[i];
  }
  return dist.losses.back();
}

double var_standard_error(const LossDistribution& dist, double q) {
  const double n = double(dist.losses.size());
  const double half_width = std::sqrt(q * (1.0 - q) / n);
  const double lo = var_quantile(dist, std::max(0.0, q - half_width));
  const double hi = var_quantile(dist, std::min(1.0, q + half_width));
  return 0.5 * (hi - lo);
}

double expected_loss(const LossDistribution& dist) {
  if (dist.losses.empty()) throw DataError("creditrisk", "empty loss distribution");
  double s = 0.0;
  for (std::size_t i = 0; i < dist.losses.size(); ++i) s += dist.losses[i] * dist.weights[i];
  return s;
}

double expected_loss_standard_error(const LossDistribution& dist) {
  const double mean = expected_loss(dist);
  double var = 0.0;
  for (std::size_t i = 0; i < dist.losses.size(); ++i)
    var += dist.weights[i] * (dist.losses[i] - mean) * (dist.losses[i] - mean);
  return std::sqrt(var / double(dist.losses.size()));
}

double vasicek_closed_form(double pd, double loading, double q, double lgd, double total_exposure) {
  if (!(pd > 0.0 && pd < 1.0)) throw ConfigError("creditrisk", "vasicek: pd must lie in (0, 1)");
  if (!(std::abs(loading) < 1.0)) throw ConfigError("creditrisk", "vasicek: |loading| must be < 1");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("creditrisk", "vasicek: q must lie in (0, 1)");
  const double x = (normal_inv_cdf(pd) + loading * normal_inv_cdf(q)) / std::sqrt(1.0 - loading * loading);
  return total_exposure * lgd * normal_cdf(x);
}

}  // namespace corrvae
