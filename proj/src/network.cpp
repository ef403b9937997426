#include "pdelearn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pdelearn {

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "sigmoid"; }

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

void NetworkConfig::validate() const {
  if (input_dim < 1 || output_dim < 1 || hidden_layers < 1 || hidden_width < 1)
    throw std::invalid_argument("network dimensions must be >= 1");
}

int NetworkConfig::param_count() const {
  validate();
  int count = 0;
  int fan_in = input_dim;
  for (int l = 0; l < hidden_layers; ++l) {
    count += fan_in * hidden_width + hidden_width;
    fan_in = hidden_width;
  }
  count += fan_in * output_dim + output_dim;
  return count;
}

ParamVector init_xavier(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParamVector theta;
  theta.reserve(config.param_count());
  auto layer = [&](int fan_in, int fan_out) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < fan_in * fan_out; ++i) theta.push_back(dist(rng));
    for (int i = 0; i < fan_out; ++i) theta.push_back(0.0);
  };
  int fan_in = config.input_dim;
  for (int l = 0; l < config.hidden_layers; ++l) {
    layer(fan_in, config.hidden_width);
    fan_in = config.hidden_width;
  }
  layer(fan_in, config.output_dim);
  return theta;
}

std::vector<std::int32_t> forward_graph(Graph& g, const NetworkConfig& config,
                                        std::span<const std::int32_t> theta,
                                        std::span<const std::int32_t> x) {
  config.validate();
  if (static_cast<int>(x.size()) != config.input_dim)
    throw std::invalid_argument("input dimension mismatch");
  if (static_cast<int>(theta.size()) != config.param_count())
    throw std::invalid_argument("parameter vector length mismatch");

  std::vector<std::int32_t> act(x.begin(), x.end());
  std::size_t p = 0;
  auto affine = [&](int fan_in, int fan_out, bool linear_out) {
    std::vector<std::int32_t> next(fan_out);
    for (int j = 0; j < fan_out; ++j) {
      std::int32_t acc = -1;
      for (int i = 0; i < fan_in; ++i) {
        std::int32_t term = g.emit(Op::Mul, theta[p + j * fan_in + i], act[i]);
        acc = acc < 0 ? term : g.emit(Op::Add, acc, term);
      }
      std::int32_t bias = theta[p + fan_in * fan_out + j];
      acc = acc < 0 ? bias : g.emit(Op::Add, acc, bias);
      if (!linear_out)
        acc = g.emit(config.activation == Activation::Tanh ? Op::Tanh : Op::Sigmoid, acc);
      next[j] = acc;
    }
    p += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
    act = std::move(next);
  };
  int fan_in = config.input_dim;
  for (int l = 0; l < config.hidden_layers; ++l) {
    affine(fan_in, config.hidden_width, false);
    fan_in = config.hidden_width;
  }
  affine(fan_in, config.output_dim, true);
  return act;
}

std::vector<double> forward_values(const NetworkConfig& config, const ParamVector& theta,
                                   std::span<const double> x) {
  Graph g;
  std::vector<std::int32_t> tl, xl;
  tl.reserve(theta.size());
  for (double v : theta) tl.push_back(g.leaf(v));
  for (double v : x) xl.push_back(g.leaf(v));
  auto outs = forward_graph(g, config, tl, xl);
  std::vector<double> vals;
  vals.reserve(outs.size());
  for (auto id : outs) vals.push_back(g.value(id));
  return vals;
}

}  // namespace pdelearn
