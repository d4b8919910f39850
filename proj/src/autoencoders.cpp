#include "corrvae/autoencoders.hpp"

#include "corrvae/error.hpp"
#include "corrvae/io.hpp"
#include "corrvae/linalg.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace corrvae {

namespace {

MatrixPanel subset(const MatrixPanel& panel, const std::vector<std::size_t>& idx) {
  MatrixPanel out;
  out.window = panel.window;
  out.stride = panel.stride;
  for (auto i : idx) {
    out.matrices.push_back(panel.matrices[i]);
    if (i < panel.dates.size()) out.dates.push_back(panel.dates[i]);
  }
  return out;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& data, const std::vector<std::size_t>& order,
                               std::size_t begin, std::size_t end) {
  Eigen::MatrixXd batch(data.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k)
    batch.col(static_cast<Eigen::Index>(k - begin)) = data.col(static_cast<Eigen::Index>(order[k]));
  return batch;
}

void check_training_inputs(const MatrixPanel& train, const MatrixPanel& validation,
                           const TrainConfig& cfg) {
  if (train.matrices.empty()) throw DataError("autoencoders", "training set is empty");
  if (!validation.matrices.empty() && validation.dim() != train.dim())
    throw DataError("autoencoders", "validation matrices differ in dimension from training");
  if (cfg.epochs < 1) throw ConfigError("autoencoders", "epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("autoencoders", "batch size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("autoencoders", "learning rate must be positive");
  if (!(cfg.beta >= 0.0)) throw ConfigError("autoencoders", "beta must be >= 0");
}

std::vector<int> mirrored(int input, const std::vector<int>& hidden, int latent, bool encoder) {
  std::vector<int> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(latent);
  if (!encoder) std::reverse(sizes.begin(), sizes.end());
  return sizes;
}

struct SampleMetrics {
  std::vector<double> mse;  // per entry
  std::vector<double> kl;
};

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double kl_term(double mu, double log_var) { return -0.5 * (1.0 + log_var - mu * mu - std::exp(log_var)); }

SampleMetrics evaluate_vae(const VaeModel& model, const Eigen::MatrixXd& data) {
  SampleMetrics out;
  if (data.cols() == 0) return out;
  const auto enc = forward(model.encoder, data).output;
  const auto recon = forward(model.decoder, Eigen::MatrixXd(enc.topRows(2))).output;
  const double d = double(data.rows());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    out.mse.push_back((recon.col(c) - data.col(c)).squaredNorm() / d);
    out.kl.push_back(kl_term(enc(0, c), enc(2, c)) + kl_term(enc(1, c), enc(3, c)));
  }
  return out;
}

SampleMetrics evaluate_ae(const AeModel& model, const Eigen::MatrixXd& data) {
  SampleMetrics out;
  if (data.cols() == 0) return out;
  const auto code = forward(model.encoder, data).output;
  const auto recon = forward(model.decoder, code).output;
  const double d = double(data.rows());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    out.mse.push_back((recon.col(c) - data.col(c)).squaredNorm() / d);
    out.kl.push_back(0.0);
  }
  return out;
}

EpochStats epoch_stats(int epoch, const SampleMetrics& train, const SampleMetrics& val) {
  return {epoch, mean_of(train.mse), mean_of(val.mse), mean_of(train.kl), mean_of(val.kl)};
}

[[noreturn]] void diverged(int epoch, const char* kind, const std::string& detail) {
  throw NumericalError("autoencoders", std::string(kind) + " training diverged at epoch " + std::to_string(epoch + 1) +
                                           " (" + detail + ")");
}

void ensure_finite(double loss, int epoch, const char* kind) {
  if (!std::isfinite(loss)) diverged(epoch, kind, "non-finite loss");
}

AeTraining train_deterministic(const MatrixPanel& train, const MatrixPanel& validation,
                               const TrainConfig& cfg, const MlpSpec& enc_spec,
                               const MlpSpec& dec_spec, const std::string& kind) {
  const Eigen::MatrixXd data = flatten(train);
  const Eigen::MatrixXd val_data =
      validation.matrices.empty() ? Eigen::MatrixXd(data.rows(), 0) : flatten(validation);

  Rng init = make_rng(cfg.seed, kind + "-init");
  Rng shuffle = make_rng(cfg.seed, kind + "-shuffle");
  AeTraining result;
  result.model.labels = train.labels();
  result.model.encoder = make_mlp(enc_spec, init);
  result.model.decoder = make_mlp(dec_spec, init);
  auto enc_adam = make_adam(result.model.encoder.params, cfg.learning_rate);
  auto dec_adam = make_adam(result.model.decoder.params, cfg.learning_rate);

  std::vector<std::size_t> order(static_cast<std::size_t>(data.cols()));
  std::iota(order.begin(), order.end(), std::size_t(0));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle);
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += batch) {
        const auto end = std::min(order.size(), begin + batch);
        const Eigen::MatrixXd x = gather_columns(data, order, begin, end);
        const double b = double(x.cols());
        auto enc = forward(result.model.encoder, x);
        auto dec = forward(result.model.decoder, enc.output);
        const Eigen::MatrixXd residual = dec.output - x;
        if (!std::isfinite(residual.squaredNorm())) throw NumericalError("autoencoders", "non-finite loss");
        auto dec_grad = backward(result.model.decoder, dec.tape, (2.0 / b) * residual);
        auto enc_grad = backward(result.model.encoder, enc.tape, dec_grad.input);
        adam_step(result.model.decoder.params, dec_grad, dec_adam);
        adam_step(result.model.encoder.params, enc_grad, enc_adam);
      }
      result.report.epochs.push_back(epoch_stats(epoch + 1, evaluate_ae(result.model, data),
                                                 evaluate_ae(result.model, val_data)));
    } catch (const NumericalError& e) {
      diverged(epoch, kind.c_str(), e.what());
    }
    ensure_finite(result.report.epochs.back().train_mse, epoch, kind.c_str());
  }
  result.report.model_kind = kind;
  result.report.seed = cfg.seed;
  result.report.train_sample_mse = evaluate_ae(result.model, data).mse;
  result.report.validation_sample_mse = evaluate_ae(result.model, val_data).mse;
  return result;
}

nlohmann::json spec_to_json(const MlpSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes},
          {"hidden_activation", to_string(spec.hidden)},
          {"output_activation", to_string(spec.output)}};
}

}  // namespace

std::string report_to_csv(const TrainReport& report) {
  std::vector<double> epoch, tm, vm, tk, vk;
  for (const auto& e : report.epochs) {
    epoch.push_back(e.epoch);
    tm.push_back(e.train_mse);
    vm.push_back(e.validation_mse);
    tk.push_back(e.train_kl);
    vk.push_back(e.validation_kl);
  }
  return io::table_to_csv({"epoch", "train_mse", "validation_mse", "train_kl", "validation_kl"},
                          {epoch, tm, vm, tk, vk});
}

DatasetSplit split_dataset(const MatrixPanel& panel, double val_fraction, std::uint64_t seed) {
  if (panel.size() < 2) throw DataError("autoencoders", "need at least 2 matrices to split");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("autoencoders", "validation fraction must lie in (0, 1)");
  const auto n = panel.size();
  auto n_train = static_cast<std::size_t>(std::floor(double(n) * (1.0 - val_fraction) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  Rng rng = make_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  split.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.validation_indices.begin(), split.validation_indices.end());
  split.train = subset(panel, split.train_indices);
  split.validation = subset(panel, split.validation_indices);
  return split;
}

Eigen::VectorXd flatten(const CorrelationMatrix& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.values().data(), m.values().size());
}

Eigen::MatrixXd flatten(const MatrixPanel& panel) {
  if (panel.matrices.empty()) return {};
  const auto d = panel.dim() * panel.dim();
  Eigen::MatrixXd out(d, static_cast<Eigen::Index>(panel.size()));
  for (std::size_t k = 0; k < panel.size(); ++k) {
    if (panel.matrices[k].dim() * panel.matrices[k].dim() != d)
      throw DataError("autoencoders", "panel matrices differ in dimension");
    out.col(static_cast<Eigen::Index>(k)) = flatten(panel.matrices[k]);
  }
  return out;
}

VaeLoss vae_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& reconstruction,
                 const LatentEncoding& encoding, double beta) {
  if (x.size() != reconstruction.size())
    throw DataError("autoencoders", "vae_loss: input and reconstruction lengths differ");
  if (!x.allFinite() || !reconstruction.allFinite() || !encoding.mu.allFinite() ||
      !encoding.sigma.allFinite() || !std::isfinite(beta))
    throw NumericalError("autoencoders", "vae_loss: non-finite input");
  if ((encoding.sigma.array() <= 0.0).any())
    throw NumericalError("autoencoders", "vae_loss: sigma must be positive");
  VaeLoss loss;
  loss.mse = (x - reconstruction).squaredNorm();
  for (int k = 0; k < 2; ++k) {
    const double var = encoding.sigma(k) * encoding.sigma(k);
    loss.kl += -0.5 * (1.0 + std::log(var) - encoding.mu(k) * encoding.mu(k) - var);
  }
  loss.total = loss.mse + beta * loss.kl;
  return loss;
}

VaeGradients vae_gradients(const VaeModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& eps) {
  if (eps.rows() != 2 || eps.cols() != x.cols())
    throw DataError("autoencoders", "vae_gradients: noise must be 2 x batch");
  const double b = double(x.cols());
  auto enc = forward(model.encoder, x);
  const Eigen::MatrixXd mu = enc.output.topRows(2);
  const Eigen::MatrixXd log_var = enc.output.bottomRows(2);
  const Eigen::MatrixXd sigma = (0.5 * log_var.array()).exp().matrix();
  const Eigen::MatrixXd z = mu + sigma.cwiseProduct(eps);

  auto dec = forward(model.decoder, z);
  const Eigen::MatrixXd residual = dec.output - x;
  const double kl = (-0.5 * (1.0 + log_var.array() - mu.array().square() - log_var.array().exp())).sum();

  VaeGradients g;
  g.loss = (residual.squaredNorm() + model.beta * kl) / b;
  g.decoder = backward(model.decoder, dec.tape, (2.0 / b) * residual);
  const Eigen::MatrixXd& dz = g.decoder.input;
  Eigen::MatrixXd enc_out_grad(4, x.cols());
  enc_out_grad.topRows(2) = dz + (model.beta / b) * mu;
  enc_out_grad.bottomRows(2) = (0.5 * dz.array() * sigma.array() * eps.array() +
                                (model.beta / b) * 0.5 * (log_var.array().exp() - 1.0))
                                   .matrix();
  g.encoder = backward(model.encoder, enc.tape, enc_out_grad);
  return g;
}

VaeTraining train_vae(const MatrixPanel& train, const MatrixPanel& validation, const TrainConfig& cfg) {
  check_training_inputs(train, validation, cfg);
  const Eigen::MatrixXd data = flatten(train);
  const Eigen::MatrixXd val_data =
      validation.matrices.empty() ? Eigen::MatrixXd(data.rows(), 0) : flatten(validation);
  const int d = static_cast<int>(data.rows());

  Rng init = make_rng(cfg.seed, "vae-init");
  Rng shuffle = make_rng(cfg.seed, "vae-shuffle");
  Rng noise = make_rng(cfg.seed, "vae-reparam");
  std::normal_distribution<double> normal(0.0, 1.0);

  VaeTraining result;
  result.model.beta = cfg.beta;
  result.model.labels = train.labels();
  result.model.encoder = make_mlp({mirrored(d, cfg.hidden, 4, true)}, init);
  result.model.decoder = make_mlp({mirrored(d, cfg.hidden, 2, false)}, init);
  auto enc_adam = make_adam(result.model.encoder.params, cfg.learning_rate);
  auto dec_adam = make_adam(result.model.decoder.params, cfg.learning_rate);

  std::vector<std::size_t> order(static_cast<std::size_t>(data.cols()));
  std::iota(order.begin(), order.end(), std::size_t(0));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle);
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += batch) {
        const auto end = std::min(order.size(), begin + batch);
        const Eigen::MatrixXd x = gather_columns(data, order, begin, end);
        Eigen::MatrixXd eps(2, x.cols());
        for (Eigen::Index c = 0; c < eps.cols(); ++c)
          for (Eigen::Index r = 0; r < 2; ++r) eps(r, c) = normal(noise);
        auto g = vae_gradients(result.model, x, eps);
        if (!std::isfinite(g.loss)) throw NumericalError("autoencoders", "non-finite loss");
        adam_step(result.model.decoder.params, g.decoder, dec_adam);
        adam_step(result.model.encoder.params, g.encoder, enc_adam);
      }
      result.report.epochs.push_back(epoch_stats(epoch + 1, evaluate_vae(result.model, data),
                                                 evaluate_vae(result.model, val_data)));
    } catch (const NumericalError& e) {
      diverged(epoch, "vae", e.what());
    }
    ensure_finite(result.report.epochs.back().train_mse + result.report.epochs.back().train_kl,
                  epoch, "vae");
  }
  result.report.model_kind = "vae";
  result.report.seed = cfg.seed;
  result.report.train_sample_mse = evaluate_vae(result.model, data).mse;
  result.report.validation_sample_mse = evaluate_vae(result.model, val_data).mse;
  return result;
}

AeTraining train_ae(const MatrixPanel& train, const MatrixPanel& validation, const TrainConfig& cfg) {
  check_training_inputs(train, validation, cfg);
  const int d = static_cast<int>(train.dim() * train.dim());
  return train_deterministic(train, validation, cfg, {mirrored(d, cfg.hidden, 2, true)},
                             {mirrored(d, cfg.hidden, 2, false)}, "ae");
}

AeTraining train_linear_ae(const MatrixPanel& train, const MatrixPanel& validation,
                           const TrainConfig& cfg) {
  check_training_inputs(train, validation, cfg);
  if (cfg.latent_dim != 2 && cfg.latent_dim != 3)
    throw ConfigError("autoencoders", "linear autoencoder latent_dim must be 2 or 3");
  const int d = static_cast<int>(train.dim() * train.dim());
  const MlpSpec enc{{d, cfg.latent_dim}, Activation::linear, Activation::linear};
  const MlpSpec dec{{cfg.latent_dim, d}, Activation::linear, Activation::linear};
  return train_deterministic(train, validation, cfg, enc, dec,
                             "linear_ae_" + std::to_string(cfg.latent_dim) + "d");
}

LatentEncoding encode(const VaeModel& model, const CorrelationMatrix& m) {
  if (m.dim() != model.dim())
    throw DataError("autoencoders", "encode: matrix dimension does not match model");
  const Eigen::VectorXd out = predict(model.encoder, flatten(m));
  return {out.head<2>(), (0.5 * out.tail<2>().array()).exp().matrix()};
}

std::vector<LatentEncoding> encode(const VaeModel& model, const MatrixPanel& panel) {
  std::vector<LatentEncoding> out;
  if (panel.matrices.empty()) return out;
  if (panel.dim() != model.dim())
    throw DataError("autoencoders", "encode: matrix dimension does not match model");
  const auto enc = forward(model.encoder, flatten(panel)).output;
  for (Eigen::Index c = 0; c < enc.cols(); ++c)
    out.push_back({enc.col(c).head<2>(), (0.5 * enc.col(c).tail<2>().array()).exp().matrix()});
  return out;
}

Eigen::MatrixXd decode(const VaeModel& model, const Eigen::Vector2d& z) {
  if (!z.allFinite()) throw NumericalError("autoencoders", "decode: non-finite latent point");
  const Eigen::VectorXd out = predict(model.decoder, z);
  const auto m = model.dim();
  if (out.size() != m * m) throw DataError("autoencoders", "decode: decoder output size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(out.data(), m, m);
}

Eigen::VectorXd encode(const AeModel& model, const CorrelationMatrix& m) {
  if (m.dim() != model.dim())
    throw DataError("autoencoders", "encode: matrix dimension does not match model");
  return predict(model.encoder, flatten(m));
}

Eigen::MatrixXd decode(const AeModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.latent_dim()) throw DataError("autoencoders", "decode: latent size mismatch");
  const Eigen::VectorXd out = predict(model.decoder, z);
  const auto m = model.dim();
  return Eigen::Map<const Eigen::MatrixXd>(out.data(), m, m);
}

double reconstruction_mse(const VaeModel& model, const CorrelationMatrix& m) {
  const auto enc = encode(model, m);
  return (decode(model, enc.mu) - m.values()).squaredNorm() / double(m.values().size());
}

double reconstruction_mse(const AeModel& model, const CorrelationMatrix& m) {
  return (decode(model, encode(model, m)) - m.values()).squaredNorm() / double(m.values().size());
}

double mean_matrix_baseline_mse(const MatrixPanel& reference, const MatrixPanel& target) {
  if (reference.matrices.empty() || target.matrices.empty())
    throw DataError("autoencoders", "baseline needs nonempty panels");
  const Eigen::VectorXd mean = flatten(reference).rowwise().mean();
  const Eigen::MatrixXd t = flatten(target);
  return (t.colwise() - mean).squaredNorm() / double(t.size());
}

double pca_oracle(const Eigen::MatrixXd& data, int k) {
  const auto d = data.rows();
  const auto n = data.cols();
  if (n == 0 || d == 0) throw DataError("autoencoders", "pca_oracle: empty data");
  if (k < 0) throw ConfigError("autoencoders", "pca_oracle: k must be >= 0");
  const Eigen::MatrixXd centered = data.colwise() - data.rowwise().mean();
  // The nonzero spectrum of X X^T and X^T X coincide; use the smaller one.
  const Eigen::MatrixXd gram = n <= d ? Eigen::MatrixXd(centered.transpose() * centered)
                                      : Eigen::MatrixXd(centered * centered.transpose());
  const Eigen::VectorXd eig = eigh_symmetric(gram).eigenvalues;
  const double cutoff = 1e-12 * std::max(eig.size() > 0 ? eig(0) : 0.0, 0.0);
  double residual = 0.0;
  for (Eigen::Index i = k; i < eig.size(); ++i)
    if (eig(i) > cutoff) residual += eig(i);
  return residual / double(n * d);
}

void save_vae_bundle(const VaeModel& model, const std::filesystem::path& dir, std::uint64_t seed,
                     const std::string& data_hash) {
  std::filesystem::create_directories(dir);
  save_weights(model.encoder, dir / "encoder.bin");
  save_weights(model.decoder, dir / "decoder.bin");
  nlohmann::json meta;
  meta["format"] = "corrvae-vae-bundle";
  meta["version"] = 1;
  meta["beta"] = model.beta;
  meta["labels"] = model.labels;
  meta["encoder"] = spec_to_json(model.encoder.spec);
  meta["decoder"] = spec_to_json(model.decoder.spec);
  meta["seed"] = seed;
  meta["data_hash"] = data_hash;
  io::write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
}

VaeModel load_vae_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.json"))
    throw DataError("autoencoders", "model bundle not found in " + dir.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(dir / "model.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("autoencoders", std::string("bad model.json: ") + e.what());
  }
  VaeModel model;
  model.beta = meta.at("beta").get<double>();
  model.labels = meta.at("labels").get<std::vector<std::string>>();
  model.encoder = load_weights(dir / "encoder.bin");
  model.decoder = load_weights(dir / "decoder.bin");
  const auto d = model.dim() * model.dim();
  if (model.encoder.spec.inputs() != d || model.encoder.spec.outputs() != 4 ||
      model.decoder.spec.inputs() != 2 || model.decoder.spec.outputs() != d)
    throw DataError("autoencoders", "model bundle shapes do not match its labels");
  return model;
}

}  // namespace corrvae
