#pragma once

#include "corrvae/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corrvae {

enum class Activation : std::uint8_t { linear = 0, relu = 1, tanh = 2 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  std::vector<int> layer_sizes;
  Activation hidden = Activation::relu;
  Activation output = Activation::linear;

  void validate() const;
  std::size_t layers() const noexcept { return layer_sizes.size() - 1; }
  int inputs() const { return layer_sizes.front(); }
  int outputs() const { return layer_sizes.back(); }
  Activation activation(std::size_t layer) const { return layer + 1 == layers() ? output : hidden; }
  bool operator==(const MlpSpec&) const = default;
};

/// Weights and biases per layer. `id` and `version` identify the parameter
/// state a Tape was recorded against; adam_step bumps the version.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::uint64_t id = 0;
  std::uint64_t version = 0;

  std::size_t parameter_count() const;
};

struct Mlp {
  MlpSpec spec;
  MlpParams params;
};

/// Uniform He-style initialization, U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
Mlp make_mlp(const MlpSpec& spec, Rng& rng);

/// Activations recorded by forward; columns are samples.
struct Tape {
  std::vector<Eigen::MatrixXd> inputs;       // input to each layer
  std::vector<Eigen::MatrixXd> preactivation;
  std::uint64_t params_id = 0;
  std::uint64_t params_version = 0;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd input;  // d loss / d network input

  static Gradients zeros_like(const MlpParams& params);
  Gradients& operator+=(const Gradients& other);
};

struct ForwardResult {
  Eigen::MatrixXd output;
  Tape tape;
};

/// Batched forward pass, one sample per column.
ForwardResult forward(const Mlp& net, const Eigen::MatrixXd& x);
Eigen::VectorXd predict(const Mlp& net, const Eigen::VectorXd& x);

/// Reverse pass for d loss / d output (same shape as the forward output).
Gradients backward(const Mlp& net, const Tape& tape, const Eigen::MatrixXd& output_gradient);

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  long step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const MlpParams& params, double learning_rate);

/// Bias-corrected Adam update in place; increments state.step and params.version.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state);

/// Binary weight container, see docs/formats.md.
std::string serialize_weights(const Mlp& net);
Mlp deserialize_weights(const std::string& bytes);
void save_weights(const Mlp& net, const std::filesystem::path& path);
Mlp load_weights(const std::filesystem::path& path);

}  // namespace corrvae
