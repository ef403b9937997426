#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "pdelearn/diagnostics.hpp"
#include "pdelearn/network.hpp"

using namespace pdelearn;

namespace {

// Norm of one neuron's incoming weights + bias in ParamVector layout.
double block_norm(const ParamVector& v, const NetworkConfig& cfg, int layer, int neuron) {
  std::size_t offset = 0;
  int fan_in = cfg.input_dim;
  for (int l = 0; l < layer; ++l) {
    int width = l == cfg.hidden_layers ? cfg.output_dim : cfg.hidden_width;
    offset += static_cast<std::size_t>(width) * fan_in + width;
    fan_in = width;
  }
  int width = layer == cfg.hidden_layers ? cfg.output_dim : cfg.hidden_width;
  std::size_t row = offset + static_cast<std::size_t>(neuron) * fan_in;
  std::size_t bias = offset + static_cast<std::size_t>(width) * fan_in + neuron;
  double s = 0;
  for (int j = 0; j < fan_in; ++j) s += v[row + j] * v[row + j];
  s += v[bias] * v[bias];
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("perturb is deterministic and scale zero is the identity") {
  NetworkConfig cfg{1, 1, 2, 8, Activation::Tanh};
  auto theta = init_xavier(cfg, 4);
  CHECK(perturb(theta, cfg, 0.0, 1) == theta);
  auto a = perturb(theta, cfg, 0.05, 1);
  auto b = perturb(theta, cfg, 0.05, 1);
  CHECK(a == b);
  CHECK(a != theta);
  CHECK(perturb(theta, cfg, 0.05, 2) != a);
  CHECK_THROWS(perturb(theta, cfg, -0.1, 1));
}

TEST_CASE("perturbation blocks are filter-normalized to theta's block norms") {
  NetworkConfig cfg{1, 1, 2, 8, Activation::Tanh};
  auto theta = init_xavier(cfg, 4);
  // Give biases nonzero values so no block is degenerate.
  for (auto& v : theta) v += 0.01;
  double scale = 0.05;
  auto tilde = perturb(theta, cfg, scale, 9);
  ParamVector delta(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) delta[i] = tilde[i] - theta[i];

  for (int layer = 0; layer <= cfg.hidden_layers; ++layer) {
    int width = layer == cfg.hidden_layers ? cfg.output_dim : cfg.hidden_width;
    for (int n = 0; n < width; ++n) {
      double nt = block_norm(theta, cfg, layer, n);
      double nd = block_norm(delta, cfg, layer, n);
      // Sum of two directions, each rescaled to ||theta block||: the result
      // lies within 2 scale ||theta block|| and is almost surely nonzero.
      CHECK(nd > 0.0);
      CHECK(nd <= 2.0 * scale * nt * (1 + 1e-12));
    }
  }
}

TEST_CASE("zero-parameter blocks keep the raw scaled Gaussian draw") {
  NetworkConfig cfg{1, 1, 1, 4, Activation::Tanh};
  ParamVector zeros(cfg.param_count(), 0.0);
  auto tilde = perturb(zeros, cfg, 0.05, 3);
  double norm = 0;
  for (double v : tilde) norm += v * v;
  CHECK(norm > 0.0);  // degenerate blocks still move
}

TEST_CASE("amplification report with identical parameters is all zeros") {
  auto spec = poisson1d_spec();
  spec.n_interior = 32;
  auto theta = init_xavier(spec.net, 6);
  auto rep = amplification_report(spec, theta, theta, 100);
  for (double v : rep.delta_u) CHECK(v == 0.0);
  for (double v : rep.delta_ux) CHECK(v == 0.0);
  for (double v : rep.delta_uxx) CHECK(v == 0.0);
  CHECK(rep.summary.grad_clean_inf == rep.summary.grad_perturbed_inf);
  CHECK_FALSE(rep.summary.monotone_mean);
  CHECK_FALSE(rep.summary.grad_increased);
}

TEST_CASE("amplification report series share the grid length") {
  auto spec = poisson1d_spec();
  spec.n_interior = 32;
  auto theta = init_xavier(spec.net, 6);
  auto tilde = perturb(theta, spec.net, 0.05, 11);
  auto rep = amplification_report(spec, theta, tilde, 200);
  CHECK(rep.grid.size() == 200);
  CHECK(rep.delta_u.size() == 200);
  CHECK(rep.delta_ux.size() == 200);
  CHECK(rep.delta_uxx.size() == 200);
  for (double v : rep.delta_u) CHECK(v >= 0.0);
  CHECK(rep.grad_clean.size() == theta.size());
}

TEST_CASE("histogram bins") {
  std::vector<double> flat = {0.0, 0.0, 0.0};
  auto [edges1, counts1] = histogram(flat, 1);
  CHECK(counts1[0] == 3);

  std::vector<double> ramp = {0.0, 1.0, 2.0, 3.0};
  auto [edges2, counts2] = histogram(ramp, 2);
  REQUIRE(counts2.size() == 2);
  CHECK(counts2[0] == 2);
  CHECK(counts2[1] == 2);

  std::vector<double> many(1000);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = std::sin(0.1 * i);
  for (int bins : {1, 7, 64}) {
    auto [edges, counts] = histogram(many, bins);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0L) == 1000);
  }
  CHECK_THROWS(histogram(std::vector<double>{}, 3));
  CHECK_THROWS(histogram(flat, 0));
}

TEST_CASE("perturbation report files are written") {
  auto spec = poisson1d_spec();
  spec.n_interior = 32;
  auto theta = init_xavier(spec.net, 6);
  auto tilde = perturb(theta, spec.net, 0.05, 11);
  auto rep = amplification_report(spec, theta, tilde, 50);
  auto dir = (std::filesystem::temp_directory_path() / "pdelearn_diag_test").string();
  write_perturbation_report(rep, dir);
  for (const char* f : {"series.csv", "gradients.csv", "summary.json", "grad_clean_hist.csv"})
    CHECK(std::filesystem::exists(std::filesystem::path(dir) / f));
  std::filesystem::remove_all(dir);
}
