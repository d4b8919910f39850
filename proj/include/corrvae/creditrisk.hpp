#pragma once

#include "corrvae/correlation.hpp"
#include "corrvae/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corrvae {

double normal_cdf(double x);
/// Rational approximation refined by one Halley step. Domain (0, 1).
double normal_inv_cdf(double p);

/// Homogeneous group of counterparties driven by one systematic factor.
/// Asset value V = loading * Y_factor + sqrt(1 - loading^2) * eps; default
/// when V < normal_inv_cdf(pd). Exposure is the group total, split evenly.
struct SubPortfolio {
  std::string name;
  double exposure = 0.0;
  double pd = 0.0;
  double lgd = 1.0;
  double loading = 0.0;
  int factor = 0;  // zero-based
  long counterparties = 1;

  double obligor_loss() const { return exposure * lgd / double(counterparties); }
};

struct PortfolioSpec {
  std::vector<SubPortfolio> sub_portfolios;

  double total_exposure() const;
  /// Sum of EAD * LGD, the largest possible loss.
  double max_loss() const;
  void validate(Eigen::Index factors) const;
};

PortfolioSpec portfolio_from_json(const std::string& text);
std::string portfolio_to_json(const PortfolioSpec& portfolio);
PortfolioSpec load_portfolio(const std::filesystem::path& path);

/// One sub-portfolio per factor with staggered PDs and exposures.
PortfolioSpec demo_portfolio(int factors, long counterparties = 500, double loading = 0.5);

struct SimConfig {
  long paths = 1'000'000;
  long strata = 1000;
  std::uint64_t seed = 0;
  double quantile = 0.999;
  bool antithetic = false;
  /// Draw every idiosyncratic term instead of the conditional binomial.
  bool per_counterparty = false;
  int threads = 1;
  long block_size = 1 << 14;

  void validate() const;
};

/// Sorted losses with their probability weights.
struct LossDistribution {
  std::vector<double> losses;
  std::vector<double> weights;
};

std::string loss_distribution_to_csv(const LossDistribution& dist);

/// Normal vectors whose first coordinate is stratified: path p falls in
/// stratum p mod strata and takes normal_inv_cdf((stratum + U) / strata).
/// The other coordinates are i.i.d. standard normal.
class StratifiedSampler {
 public:
  StratifiedSampler(long strata, int dimension);

  void draw(long path, Rng& rng, Eigen::Ref<Eigen::VectorXd> out) const;
  long strata() const noexcept { return strata_; }
  int dimension() const noexcept { return dimension_; }

 private:
  long strata_;
  int dimension_;
};

/// `count` draws as columns, generated in seeded blocks exactly as the
/// simulation consumes them.
Eigen::MatrixXd stratified_normals(const SimConfig& cfg, int dimension, long count);

/// Multi-factor Vasicek loss simulation over the factor correlation matrix.
LossDistribution simulate_losses(const PortfolioSpec& portfolio, const CorrelationMatrix& factors,
                                 const SimConfig& cfg);

/// Number of simulate_losses calls made by this process.
std::uint64_t simulation_count();

/// Left-continuous weighted quantile: smallest loss with CDF >= q.
double var_quantile(const LossDistribution& dist, double q);

/// Distribution-free standard error of the q-quantile from the order
/// statistics one binomial standard deviation either side of it.
double var_standard_error(const LossDistribution& dist, double q);

double expected_loss(const LossDistribution& dist);
double expected_loss_standard_error(const LossDistribution& dist);

/// Asymptotic single-factor VaR under the loading convention above.
double vasicek_closed_form(double pd, double loading, double q, double lgd, double total_exposure);

}  // namespace corrvae
