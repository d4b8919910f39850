#include "corrvae/error.hpp"
#include "corrvae/neural.hpp"
#include "gradcheck.hpp"

#include <doctest.h>

#include <filesystem>

using namespace corrvae;

namespace {

// Naive forward pass: explicit loops, no Eigen products.
Eigen::VectorXd naive_forward(const Mlp& net, const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < net.spec.layers(); ++l) {
    const auto& w = net.params.weights[l];
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = net.params.biases[l](i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[std::size_t(j)];
      switch (net.spec.activation(l)) {
        case Activation::relu: s = s > 0 ? s : 0; break;
        case Activation::tanh: s = std::tanh(s); break;
        case Activation::linear: break;
      }
      next[std::size_t(i)] = s;
    }
    a = std::move(next);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), Eigen::Index(a.size()));
}

Mlp random_net(const MlpSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  auto net = make_mlp(spec, rng);
  std::normal_distribution<double> nd;
  for (auto& b : net.params.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.2 * nd(rng);
  return net;
}

}  // namespace

TEST_CASE("forward: zero network and identity passthrough") {
  Rng rng(1);
  auto zero = make_mlp({{3, 4, 2}, Activation::relu, Activation::linear}, rng);
  for (auto& w : zero.params.weights) w.setZero();
  CHECK(predict(zero, Eigen::Vector3d(1, -2, 3)).isZero(0.0));

  auto id = make_mlp({{3, 3}, Activation::relu, Activation::linear}, rng);
  id.params.weights[0].setIdentity();
  const Eigen::Vector3d x(0.5, -1.5, 2.0);
  CHECK(predict(id, x) == x);
}

TEST_CASE("forward: matches naive oracle for every activation") {
  for (auto h : {Activation::linear, Activation::relu, Activation::tanh})
    for (auto o : {Activation::linear, Activation::relu, Activation::tanh}) {
      const auto net = random_net({{6, 8, 5, 3}, h, o}, 17);
      Rng rng(3);
      std::normal_distribution<double> nd;
      Eigen::MatrixXd x(6, 4);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
      const auto out = forward(net, x).output;
      for (Eigen::Index c = 0; c < 4; ++c) CHECK((out.col(c) - naive_forward(net, x.col(c))).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("forward: shape mismatch and non-finite activations") {
  auto net = random_net({{3, 4, 2}, Activation::relu, Activation::linear}, 2);
  CHECK_THROWS_AS(forward(net, Eigen::MatrixXd::Ones(4, 1)), DataError);
  net.params.biases[1](0) = std::numeric_limits<double>::infinity();
  try {
    forward(net, Eigen::MatrixXd::Ones(3, 1));
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("backward: analytic gradient of a linear layer under squared loss") {
  auto net = random_net({{3, 2}, Activation::relu, Activation::linear}, 4);
  const Eigen::Vector3d x(0.3, -0.7, 1.1);
  const Eigen::Vector2d y(0.2, -0.4);
  const auto fwd = forward(net, x);
  const Eigen::Vector2d r = net.params.weights[0] * x + net.params.biases[0] - y;
  const auto g = backward(net, fwd.tape, 2.0 * (fwd.output - y));
  CHECK((g.weights[0] - 2.0 * r * x.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((g.biases[0] - 2.0 * r).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((g.input - 2.0 * net.params.weights[0].transpose() * r).cwiseAbs().maxCoeff() < 1e-14);

  const auto zero = backward(net, fwd.tape, Eigen::Vector2d::Zero());
  CHECK(zero.weights[0].isZero(0.0));
  CHECK(zero.biases[0].isZero(0.0));
}

TEST_CASE("backward: central finite differences for every activation pair") {
  for (auto h : {Activation::linear, Activation::relu, Activation::tanh})
    for (auto o : {Activation::linear, Activation::relu, Activation::tanh}) {
      CAPTURE(to_string(h));
      CAPTURE(to_string(o));
      const auto r = gradcheck::mlp_check(h, o, 100, 1000 + 10 * int(h) + int(o));
      CHECK(r.checked == 100);
      CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("vae_gradients: central finite differences through the reparameterization") {
  const auto r = gradcheck::vae_check(150, 77);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("backward: stale tape is rejected") {
  auto net = random_net({{3, 2}, Activation::relu, Activation::linear}, 5);
  const auto fwd = forward(net, Eigen::Vector3d(1, 2, 3));
  auto adam = make_adam(net.params, 1e-3);
  adam_step(net.params, Gradients::zeros_like(net.params), adam);
  CHECK_THROWS_AS(backward(net, fwd.tape, Eigen::Vector2d::Ones()), DataError);
  auto other = random_net({{3, 2}, Activation::relu, Activation::linear}, 5);
  CHECK_THROWS_AS(backward(other, forward(net, Eigen::Vector3d(1, 2, 3)).tape, Eigen::Vector2d::Ones()),
                  DataError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto net = random_net({{4, 3, 2}, Activation::relu, Activation::linear}, 6);
  const auto before = net.params;
  auto adam = make_adam(net.params, 1e-3);
  for (int i = 0; i < 5; ++i) adam_step(net.params, Gradients::zeros_like(net.params), adam);
  for (std::size_t l = 0; l < before.weights.size(); ++l) {
    CHECK(net.params.weights[l] == before.weights[l]);
    CHECK(net.params.biases[l] == before.biases[l]);
  }
  CHECK(adam.step == 5);
}

TEST_CASE("adam: first step and constant-gradient limit") {
  MlpParams p;
  p.weights = {Eigen::MatrixXd::Zero(1, 1)};
  p.biases = {Eigen::VectorXd::Zero(1)};
  Gradients g = Gradients::zeros_like(p);
  const double grad = 0.5, lr = 1e-3, eps = 1e-8;
  g.weights[0](0, 0) = grad;
  auto adam = make_adam(p, lr);

  // Bias-corrected moments after one step are exactly g and g^2.
  adam_step(p, g, adam);
  CHECK(p.weights[0](0, 0) == doctest::Approx(-lr * grad / (std::abs(grad) + eps)).epsilon(1e-15));

  double previous = p.weights[0](0, 0);
  double last_step = 0.0;
  for (int i = 1; i < 1000; ++i) {
    adam_step(p, g, adam);
    last_step = p.weights[0](0, 0) - previous;
    previous = p.weights[0](0, 0);
  }
  CHECK(last_step == doctest::Approx(-lr).epsilon(1e-6));
  CHECK(p.weights[0](0, 0) == doctest::Approx(-1000 * lr).epsilon(1e-6));
}

TEST_CASE("weights: round trip, full-size network, corruption") {
  const auto net = random_net({{1936, 512, 250, 4}, Activation::relu, Activation::linear}, 8);
  const auto bytes = serialize_weights(net);
  const auto back = deserialize_weights(bytes);
  CHECK(back.spec == net.spec);
  CHECK(back.params.parameter_count() == 1936 * 512 + 512 + 512 * 250 + 250 + 250 * 4 + 4);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(back.params.weights[l] == net.params.weights[l]);
    CHECK(back.params.biases[l] == net.params.biases[l]);
  }

  CHECK_THROWS_AS(deserialize_weights(bytes.substr(0, bytes.size() / 2)), DataError);
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(deserialize_weights(flipped), DataError);
  CHECK_THROWS_AS(deserialize_weights("not a weight file at all"), DataError);

  const auto path = std::filesystem::temp_directory_path() / "corrvae_test_weights.bin";
  save_weights(net, path);
  CHECK(serialize_weights(load_weights(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("spec validation and activation names") {
  CHECK_THROWS_AS(MlpSpec{{3}}.validate(), ConfigError);
  CHECK_THROWS_AS(MlpSpec({{3, 0, 2}}).validate(), ConfigError);
  for (auto a : {Activation::linear, Activation::relu, Activation::tanh})
    CHECK(activation_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(activation_from_string("sigmoid"), ConfigError);
}

TEST_CASE("initialization is seeded and bounded") {
  Rng a(9), b(9);
  const MlpSpec spec{{50, 20, 3}};
  const auto n1 = make_mlp(spec, a), n2 = make_mlp(spec, b);
  CHECK(n1.params.weights[0] == n2.params.weights[0]);
  CHECK(n1.params.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 50.0));
  CHECK(n1.params.biases[0].isZero(0.0));
  CHECK(n1.params.id != n2.params.id);
}
