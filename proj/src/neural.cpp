#include "corrvae/neural.hpp"

#include "corrvae/error.hpp"
#include "corrvae/io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>

namespace corrvae {

namespace {

std::uint64_t next_params_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

void apply_activation(Activation a, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::linear:
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// d activation / d preactivation, multiplied into `grad` in place.
void apply_activation_derivative(Activation a, const Eigen::MatrixXd& pre, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::linear:
      break;
    case Activation::relu:
      grad = (pre.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::tanh:
      grad = grad.cwiseProduct((1.0 - pre.array().tanh().square()).matrix());
      break;
  }
}

void check_shapes(const MlpSpec& spec, const MlpParams& params, const char* what) {
  if (params.weights.size() != spec.layers() || params.biases.size() != spec.layers())
    throw DataError("neural", std::string(what) + ": parameter layer count does not match spec");
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    if (params.weights[l].rows() != spec.layer_sizes[l + 1] ||
        params.weights[l].cols() != spec.layer_sizes[l] ||
        params.biases[l].size() != spec.layer_sizes[l + 1])
      throw DataError("neural", std::string(what) + ": layer " + std::to_string(l) +
                                    " shape does not match spec");
  }
}

// Little-endian byte stream helpers.
class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes_.append(s); }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("neural", "weight file is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "CVMLP\0\0\0";
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear:
      return "linear";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("neural", "unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("neural", "an MLP needs at least 2 layers");
  for (int s : layer_sizes)
    if (s <= 0) throw ConfigError("neural", "layer sizes must be positive");
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Mlp make_mlp(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Mlp net;
  net.spec = spec;
  net.params.id = next_params_id();
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
    net.params.weights.push_back(std::move(w));
    net.params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

Gradients Gradients::zeros_like(const MlpParams& params) {
  Gradients g;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

ForwardResult forward(const Mlp& net, const Eigen::MatrixXd& x) {
  check_shapes(net.spec, net.params, "forward");
  if (x.rows() != net.spec.inputs())
    throw DataError("neural", "forward: input has " + std::to_string(x.rows()) +
                                  " rows, network expects " + std::to_string(net.spec.inputs()));
  ForwardResult result;
  result.tape.params_id = net.params.id;
  result.tape.params_version = net.params.version;
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < net.spec.layers(); ++l) {
    Eigen::MatrixXd z = net.params.weights[l] * a;
    z.colwise() += net.params.biases[l];
    result.tape.inputs.push_back(std::move(a));
    a = z;
    apply_activation(net.spec.activation(l), a);
    if (!a.allFinite())
      throw NumericalError("neural", "non-finite activation in layer " + std::to_string(l));
    result.tape.preactivation.push_back(std::move(z));
  }
  result.output = std::move(a);
  return result;
}

Eigen::VectorXd predict(const Mlp& net, const Eigen::VectorXd& x) {
  return forward(net, Eigen::MatrixXd(x)).output.col(0);
}

Gradients backward(const Mlp& net, const Tape& tape, const Eigen::MatrixXd& output_gradient) {
  check_shapes(net.spec, net.params, "backward");
  if (tape.params_id != net.params.id || tape.params_version != net.params.version)
    throw DataError("neural", "backward: tape was recorded against different parameters");
  const auto layers = net.spec.layers();
  if (tape.inputs.size() != layers || tape.preactivation.size() != layers)
    throw DataError("neural", "backward: tape depth does not match network");
  const auto batch = tape.inputs.front().cols();
  if (output_gradient.rows() != net.spec.outputs() || output_gradient.cols() != batch)
    throw DataError("neural", "backward: output gradient shape does not match forward output");

  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd delta = output_gradient;
  for (std::size_t l = layers; l-- > 0;) {
    apply_activation_derivative(net.spec.activation(l), tape.preactivation[l], delta);
    g.weights[l].noalias() = delta * tape.inputs[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    delta = net.params.weights[l].transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

AdamState make_adam(const MlpParams& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    s.v_weights.push_back(s.m_weights.back());
    s.m_biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    s.v_biases.push_back(s.m_biases.back());
  }
  return s;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state) {
  const auto layers = params.weights.size();
  if (grads.weights.size() != layers || grads.biases.size() != layers ||
      state.m_weights.size() != layers || state.m_biases.size() != layers)
    throw DataError("neural", "adam_step: layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() ||
        grads.weights[l].cols() != params.weights[l].cols() ||
        grads.biases[l].size() != params.biases[l].size() ||
        state.m_weights[l].rows() != params.weights[l].rows() ||
        state.m_weights[l].cols() != params.weights[l].cols() ||
        state.m_biases[l].size() != params.biases[l].size())
      throw DataError("neural", "adam_step: shape mismatch in layer " + std::to_string(l));
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
    p.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < layers; ++l) {
    update(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    update(params.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l]);
  }
  ++params.version;
}

std::string serialize_weights(const Mlp& net) {
  net.spec.validate();
  check_shapes(net.spec, net.params, "serialize_weights");
  Writer w;
  w.raw(kMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(net.spec.layer_sizes.size()));
  for (int s : net.spec.layer_sizes) w.u64(static_cast<std::uint64_t>(s));
  w.u8(static_cast<std::uint8_t>(net.spec.hidden));
  w.u8(static_cast<std::uint8_t>(net.spec.output));
  for (std::size_t l = 0; l < net.spec.layers(); ++l) {
    const auto& wt = net.params.weights[l];
    for (Eigen::Index i = 0; i < wt.rows(); ++i)
      for (Eigen::Index j = 0; j < wt.cols(); ++j) w.f64(wt(i, j));
    for (Eigen::Index i = 0; i < net.params.biases[l].size(); ++i) w.f64(net.params.biases[l](i));
  }
  w.u64(io::hash_bytes(w.bytes()));
  return std::move(w.bytes());
}

Mlp deserialize_weights(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw DataError("neural", "not a weight file (bad magic)");
  if (r.u32() != kFormatVersion) throw DataError("neural", "unsupported weight file version");
  const auto count = r.u32();
  if (count < 2 || count > 64) throw DataError("neural", "corrupt weight file header");
  Mlp net;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto s = r.u64();
    if (s == 0 || s > (1u << 24)) throw DataError("neural", "corrupt layer size in header");
    net.spec.layer_sizes.push_back(static_cast<int>(s));
  }
  const auto hidden = r.u8();
  const auto output = r.u8();
  if (hidden > 2 || output > 2) throw DataError("neural", "corrupt activation in header");
  net.spec.hidden = static_cast<Activation>(hidden);
  net.spec.output = static_cast<Activation>(output);

  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < net.spec.layer_sizes.size(); ++l)
    expected += std::size_t(net.spec.layer_sizes[l + 1]) * (std::size_t(net.spec.layer_sizes[l]) + 1);
  if (r.remaining() != expected * 8 + 8)
    throw DataError("neural", "weight file size does not match header shapes");

  for (std::size_t l = 0; l < net.spec.layers(); ++l) {
    Eigen::MatrixXd wt(net.spec.layer_sizes[l + 1], net.spec.layer_sizes[l]);
    for (Eigen::Index i = 0; i < wt.rows(); ++i)
      for (Eigen::Index j = 0; j < wt.cols(); ++j) wt(i, j) = r.f64();
    Eigen::VectorXd b(net.spec.layer_sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = r.f64();
    net.params.weights.push_back(std::move(wt));
    net.params.biases.push_back(std::move(b));
  }
  const auto payload = r.position();
  if (r.u64() != io::hash_bytes(std::string_view(bytes).substr(0, payload)))
    throw DataError("neural", "weight file checksum mismatch");
  net.params.id = next_params_id();
  return net;
}

void save_weights(const Mlp& net, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_weights(net));
}

Mlp load_weights(const std::filesystem::path& path) { return deserialize_weights(io::read_file(path)); }

}  // namespace corrvae
