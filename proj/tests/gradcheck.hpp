#pragma once

// Central finite-difference checks of backward() and vae_gradients(),
// shared by the unit tests and the acceptance suite.

#include "corrvae/autoencoders.hpp"
#include "corrvae/neural.hpp"
#include "corrvae/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace gradcheck {

using namespace corrvae;

inline constexpr double kStep = 1e-5;

struct Result {
  int checked = 0;
  int skipped_kinks = 0;
  double max_rel_error = 0.0;
};

// Gradients below 1e-6 are compared on an absolute scale: their central
// difference is dominated by roundoff.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

struct ParamRef {
  std::size_t layer;
  bool bias;
  Eigen::Index row, col;
};

inline double& param(Mlp& net, const ParamRef& p) {
  return p.bias ? net.params.biases[p.layer](p.row) : net.params.weights[p.layer](p.row, p.col);
}

inline double grad(const Gradients& g, const ParamRef& p) {
  return p.bias ? g.biases[p.layer](p.row) : g.weights[p.layer](p.row, p.col);
}

inline ParamRef random_param(const Mlp& net, Rng& rng) {
  std::uniform_int_distribution<std::size_t> layer(0, net.spec.layers() - 1);
  ParamRef p{layer(rng), false, 0, 0};
  const auto& w = net.params.weights[p.layer];
  std::uniform_int_distribution<Eigen::Index> pick(0, w.size() + w.rows() - 1);
  const auto k = pick(rng);
  if (k >= w.size()) {
    p.bias = true;
    p.row = k - w.size();
  } else {
    p.row = k % w.rows();
    p.col = k / w.rows();
  }
  return p;
}

// Sign pattern of every ReLU preactivation; a perturbation that flips one
// crosses a kink where the derivative does not exist.
inline std::vector<bool> relu_pattern(const Mlp& net, const Eigen::MatrixXd& x) {
  const auto tape = forward(net, x).tape;
  std::vector<bool> out;
  for (std::size_t l = 0; l < net.spec.layers(); ++l) {
    if (net.spec.activation(l) != Activation::relu) continue;
    const auto& z = tape.preactivation[l];
    for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z.data()[i] > 0.0);
  }
  return out;
}

// L = sum(c .* out) + 0.5 * ||out||^2 on a small random net.
inline Result mlp_check(Activation hidden, Activation output, int samples, std::uint64_t seed) {
  Rng rng(seed);
  MlpSpec spec{{5, 7, 6, 4}, hidden, output};
  Mlp net = make_mlp(spec, rng);
  std::normal_distribution<double> nd;
  for (auto& b : net.params.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * nd(rng);
  Eigen::MatrixXd x(5, 3), c(4, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = nd(rng);

  auto loss = [&](const Mlp& m) {
    const auto out = forward(m, x).output;
    return (c.array() * out.array()).sum() + 0.5 * out.squaredNorm();
  };
  const auto fwd = forward(net, x);
  const auto g = backward(net, fwd.tape, c + fwd.output);
  const auto base = relu_pattern(net, x);

  Result r;
  while (r.checked < samples) {
    const auto p = random_param(net, rng);
    const double saved = param(net, p);
    param(net, p) = saved + kStep;
    const double up = loss(net);
    const bool kink_up = relu_pattern(net, x) != base;
    param(net, p) = saved - kStep;
    const double down = loss(net);
    const bool kink_down = relu_pattern(net, x) != base;
    param(net, p) = saved;
    if (kink_up || kink_down) {
      ++r.skipped_kinks;
      continue;
    }
    r.max_rel_error = std::max(r.max_rel_error, relative_error(grad(g, p), (up - down) / (2.0 * kStep)));
    ++r.checked;
  }
  return r;
}

// Full VAE objective (reconstruction + beta * KL) with fixed noise.
inline Result vae_check(int samples, std::uint64_t seed) {
  Rng rng(seed);
  VaeModel model;
  model.beta = 0.7;
  model.encoder = make_mlp({{9, 6, 5, 4}, Activation::relu, Activation::linear}, rng);
  model.decoder = make_mlp({{2, 5, 6, 9}, Activation::relu, Activation::linear}, rng);
  std::normal_distribution<double> nd;
  for (auto* net : {&model.encoder, &model.decoder})
    for (auto& b : net->params.biases)
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * nd(rng);
  Eigen::MatrixXd x(9, 4), eps(2, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 0.5 * nd(rng);
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = nd(rng);

  const auto g = vae_gradients(model, x, eps);
  auto pattern = [&]() {
    auto a = relu_pattern(model.encoder, x);
    const auto enc = forward(model.encoder, x).output;
    const Eigen::MatrixXd z =
        enc.topRows(2) + (0.5 * enc.bottomRows(2).array()).exp().matrix().cwiseProduct(eps);
    const auto b = relu_pattern(model.decoder, z);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const auto base = pattern();

  Result r;
  while (r.checked < samples) {
    const bool in_encoder = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    Mlp& net = in_encoder ? model.encoder : model.decoder;
    const auto p = random_param(net, rng);
    const double saved = param(net, p);
    param(net, p) = saved + kStep;
    const double up = vae_gradients(model, x, eps).loss;
    const bool kink_up = pattern() != base;
    param(net, p) = saved - kStep;
    const double down = vae_gradients(model, x, eps).loss;
    const bool kink_down = pattern() != base;
    param(net, p) = saved;
    if (kink_up || kink_down) {
      ++r.skipped_kinks;
      continue;
    }
    const double analytic = grad(in_encoder ? g.encoder : g.decoder, p);
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic, (up - down) / (2.0 * kStep)));
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck
