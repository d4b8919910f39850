#pragma once

#include "corrvae/corrdata.hpp"
#include "corrvae/neural.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corrvae {

/// Posterior mean and standard deviation of one encoded matrix.
struct LatentEncoding {
  Eigen::Vector2d mu;
  Eigen::Vector2d sigma;
};

/// Encoder emits (mu1, mu2, log sigma1^2, log sigma2^2); decoder maps a
/// 2-D code to a flattened M x M matrix (column-major).
struct VaeModel {
  Mlp encoder;
  Mlp decoder;
  double beta = 1.0;
  std::vector<std::string> labels;

  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(labels.size()); }
};

/// Deterministic autoencoder; linear when both nets use linear activations
/// with a single layer.
struct AeModel {
  Mlp encoder;
  Mlp decoder;
  std::vector<std::string> labels;

  int latent_dim() const { return encoder.spec.outputs(); }
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(labels.size()); }
};

struct TrainConfig {
  int epochs = 80;
  double learning_rate = 1e-4;
  double beta = 1.0;
  int batch_size = 16;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {512, 250};
  int latent_dim = 2;
};

/// Per-entry MSE (mean over the M^2 entries, averaged over matrices) and
/// mean KL per matrix.
struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double train_kl = 0.0;
  double validation_kl = 0.0;
};

struct TrainReport {
  std::string model_kind;
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  /// Final per-matrix MSE, the data behind the MSE histograms.
  std::vector<double> train_sample_mse;
  std::vector<double> validation_sample_mse;
};

std::string report_to_csv(const TrainReport& report);

struct DatasetSplit {
  MatrixPanel train;
  MatrixPanel validation;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

/// Training gets floor(n * (1 - val_fraction)) matrices (at least one for
/// each side) chosen by a seeded shuffle; both index lists are returned sorted.
DatasetSplit split_dataset(const MatrixPanel& panel, double val_fraction, std::uint64_t seed);

/// Columns are the column-major flattened matrices.
Eigen::MatrixXd flatten(const MatrixPanel& panel);
Eigen::VectorXd flatten(const CorrelationMatrix& m);

struct VaeLoss {
  double total = 0.0;
  double mse = 0.0;  // squared reconstruction error summed over entries
  double kl = 0.0;
};

/// Single-sample loss: ||x - recon||^2 + beta * KL(N(mu, sigma^2) || N(0, I)).
VaeLoss vae_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& reconstruction,
                 const LatentEncoding& encoding, double beta);

/// Batch-mean loss and its parameter gradients for fixed reparameterization
/// noise eps (2 x batch): z = mu + exp(log_var / 2) * eps.
struct VaeGradients {
  double loss = 0.0;
  Gradients encoder;
  Gradients decoder;
};
VaeGradients vae_gradients(const VaeModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps);

struct VaeTraining {
  VaeModel model;
  TrainReport report;
};

struct AeTraining {
  AeModel model;
  TrainReport report;
};

/// `validation` may be empty; its metrics are then reported as zero.
VaeTraining train_vae(const MatrixPanel& train, const MatrixPanel& validation, const TrainConfig& cfg);
AeTraining train_ae(const MatrixPanel& train, const MatrixPanel& validation, const TrainConfig& cfg);
/// No activations; one linear layer each way with cfg.latent_dim in {2, 3}.
AeTraining train_linear_ae(const MatrixPanel& train, const MatrixPanel& validation, const TrainConfig& cfg);

LatentEncoding encode(const VaeModel& model, const CorrelationMatrix& m);
std::vector<LatentEncoding> encode(const VaeModel& model, const MatrixPanel& panel);
/// Raw decoder output; pass it through repair_to_correlation before use.
Eigen::MatrixXd decode(const VaeModel& model, const Eigen::Vector2d& z);

Eigen::VectorXd encode(const AeModel& model, const CorrelationMatrix& m);
Eigen::MatrixXd decode(const AeModel& model, const Eigen::VectorXd& z);

/// Per-entry MSE of the deterministic reconstruction decode(encode(x).mu).
double reconstruction_mse(const VaeModel& model, const CorrelationMatrix& m);
double reconstruction_mse(const AeModel& model, const CorrelationMatrix& m);

/// Per-entry MSE of predicting `reference`'s mean matrix for every matrix of `target`.
double mean_matrix_baseline_mse(const MatrixPanel& reference, const MatrixPanel& target);

/// Optimal rank-k linear reconstruction error (per entry) of the columns of
/// `data` about their mean. Eigenvalues below 1e-12 * largest count as zero.
double pca_oracle(const Eigen::MatrixXd& data, int k);

/// encoder.bin, decoder.bin and model.json under `dir`.
void save_vae_bundle(const VaeModel& model, const std::filesystem::path& dir,
                     std::uint64_t seed, const std::string& data_hash);
VaeModel load_vae_bundle(const std::filesystem::path& dir);

}  // namespace corrvae
