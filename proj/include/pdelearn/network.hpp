#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdelearn/autodiff.hpp"

namespace pdelearn {

enum class Activation { Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected feed-forward network. Hidden layers share one width and
// activation; the output layer is linear.
struct NetworkConfig {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_layers = 1;
  int hidden_width = 1;
  Activation activation = Activation::Tanh;

  void validate() const;
  int param_count() const;
};

using ParamVector = std::vector<double>;

// Weights uniform on +-sqrt(6/(fan_in+fan_out)), biases zero. Layout per
// layer: weight matrix row-major (rows = output neurons), then bias.
ParamVector init_xavier(const NetworkConfig& config, std::uint64_t seed);

// Builds the forward pass on a graph. theta are leaf/node ids in ParamVector
// layout; x are node ids for the inputs. Returns output node ids.
std::vector<std::int32_t> forward_graph(Graph& g, const NetworkConfig& config,
                                        std::span<const std::int32_t> theta,
                                        std::span<const std::int32_t> x);

// Convenience numeric forward for a single point.
std::vector<double> forward_values(const NetworkConfig& config, const ParamVector& theta,
                                   std::span<const double> x);

}  // namespace pdelearn
