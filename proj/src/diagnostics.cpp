#include "pdelearn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "pdelearn/alm.hpp"
#include "pdelearn/sampling.hpp"

namespace pdelearn {

namespace {

// Per-neuron blocks in ParamVector layout: each hidden/output neuron owns its
// incoming weight row plus its bias entry.
double block_norm(const ParamVector& v, std::size_t row, std::size_t bias, std::size_t fan_in) {
  double s = 0.0;
  for (std::size_t j = 0; j < fan_in; ++j) s += v[row + j] * v[row + j];
  s += v[bias] * v[bias];
  return std::sqrt(s);
}

}  // namespace

ParamVector perturb(const ParamVector& theta, const NetworkConfig& config, double scale,
                    std::uint64_t seed) {
  config.validate();
  if (static_cast<int>(theta.size()) != config.param_count())
    throw std::invalid_argument("theta size does not match the network");
  if (scale < 0.0) throw std::invalid_argument("perturbation scale must be non-negative");

  ParamVector out = theta;
  if (scale == 0.0) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int dir = 0; dir < 2; ++dir) {
    ParamVector d(theta.size());
    for (double& v : d) v = gauss(rng);
    std::size_t offset = 0;
    int fan_in = config.input_dim;
    for (int layer = 0; layer <= config.hidden_layers; ++layer) {
      const int width =
          layer == config.hidden_layers ? config.output_dim : config.hidden_width;
      const std::size_t w0 = offset;
      const std::size_t b0 = offset + static_cast<std::size_t>(width) * fan_in;
      for (int neuron = 0; neuron < width; ++neuron) {
        const std::size_t row = w0 + static_cast<std::size_t>(neuron) * fan_in;
        const std::size_t bias = b0 + neuron;
        const double nt = block_norm(theta, row, bias, fan_in);
        const double nd = block_norm(d, row, bias, fan_in);
        // Filter normalization: match theta's block norm; a dead block keeps
        // the raw Gaussian draw.
        const double factor = (nt > 0.0 && nd > 0.0) ? nt / nd : 1.0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(fan_in); ++j)
          out[row + j] += scale * factor * d[row + j];
        out[bias] += scale * factor * d[bias];
      }
      offset = b0 + width;
      fan_in = width;
    }
  }
  return out;
}

PerturbationReport amplification_report(const ProblemSpec& spec, const ParamVector& theta,
                                        const ParamVector& theta_tilde, int grid_n) {
  if (theta.size() != theta_tilde.size())
    throw std::invalid_argument("clean and perturbed parameter vectors differ in length");
  if (spec.net.input_dim != 1)
    throw std::invalid_argument("amplification report expects a one-dimensional problem");
  if (grid_n < 2) throw std::invalid_argument("grid needs at least two points");

  PerturbationReport rep;
  rep.grid.resize(grid_n);
  for (int i = 0; i < grid_n; ++i)
    rep.grid[i] = spec.domain[0][0] + (spec.domain[0][1] - spec.domain[0][0]) * i / (grid_n - 1);

  // One graph evaluating u, u_x, u_xx; swept for both parameter sets.
  Graph g;
  std::vector<std::int32_t> theta_ids;
  for (std::size_t i = 0; i < theta.size(); ++i) theta_ids.push_back(g.leaf(0.0));
  std::int32_t x = g.leaf(0.0);
  auto outs = forward_graph(g, spec.net, theta_ids, std::span<const std::int32_t>(&x, 1));
  std::int32_t u = outs[0];
  std::int32_t ux = g.input_derivative(u, x, 1);
  std::int32_t uxx = g.input_derivative(u, x, 2);

  auto sweep = [&](const ParamVector& th) {
    BlockEval be(g);
    for (std::size_t i = 0; i < th.size(); ++i) be.broadcast(theta_ids[i], th[i]);
    std::vector<std::array<double, 3>> vals(grid_n);
    constexpr int L = BlockEval::kLanes;
    for (int b = 0; b < grid_n; b += L) {
      const int valid = std::min(L, grid_n - b);
      for (int lane = 0; lane < L; ++lane)
        be.set(x, lane, rep.grid[b + (lane < valid ? lane : 0)]);
      be.forward(g.size() - 1);
      for (int lane = 0; lane < valid; ++lane)
        vals[b + lane] = {be.value(u, lane), be.value(ux, lane), be.value(uxx, lane)};
    }
    return vals;
  };
  auto clean = sweep(theta);
  auto noisy = sweep(theta_tilde);
  rep.delta_u.resize(grid_n);
  rep.delta_ux.resize(grid_n);
  rep.delta_uxx.resize(grid_n);
  for (int i = 0; i < grid_n; ++i) {
    rep.delta_u[i] = std::abs(clean[i][0] - noisy[i][0]);
    rep.delta_ux[i] = std::abs(clean[i][1] - noisy[i][1]);
    rep.delta_uxx[i] = std::abs(clean[i][2] - noisy[i][2]);
  }

  CollocationSet points = sample_problem(spec, 0);
  CompiledObjective obj(spec, points);
  MultiplierSet m = obj.make_multipliers(spec.mu_max);
  obj.evaluate(theta, m, rep.grad_clean);
  obj.evaluate(theta_tilde, m, rep.grad_perturbed);

  auto stats = [](const std::vector<double>& v, double& mx, double& mean) {
    mx = 0.0;
    double s = 0.0;
    for (double x : v) {
      mx = std::max(mx, x);
      s += x;
    }
    mean = s / static_cast<double>(v.size());
  };
  auto& s = rep.summary;
  stats(rep.delta_u, s.max_du, s.mean_du);
  stats(rep.delta_ux, s.max_dux, s.mean_dux);
  stats(rep.delta_uxx, s.max_duxx, s.mean_duxx);
  for (double gi : rep.grad_clean) s.grad_clean_inf = std::max(s.grad_clean_inf, std::abs(gi));
  for (double gi : rep.grad_perturbed)
    s.grad_perturbed_inf = std::max(s.grad_perturbed_inf, std::abs(gi));
  s.monotone_mean = s.mean_du < s.mean_dux && s.mean_dux < s.mean_duxx;
  s.grad_increased = s.grad_clean_inf < s.grad_perturbed_inf;
  return rep;
}

std::pair<std::vector<double>, std::vector<long>> histogram(std::span<const double> values,
                                                            int bins) {
  if (values.empty()) throw std::invalid_argument("histogram of an empty series");
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b) edges[b] = lo + (hi - lo) * b / bins;
  std::vector<long> counts(bins, 0);
  const double width = hi - lo;
  for (double v : values) {
    int b = width == 0.0 ? 0 : static_cast<int>((v - lo) / width * bins);
    counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  return {std::move(edges), std::move(counts)};
}

void write_perturbation_report(const PerturbationReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create " + root.string() + ": " + ec.message());

  auto open = [](const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
    os.precision(17);
    return os;
  };

  {
    auto os = open(root / "series.csv");
    os << "x,delta_u,delta_ux,delta_uxx\n";
    for (std::size_t i = 0; i < report.grid.size(); ++i)
      os << report.grid[i] << ',' << report.delta_u[i] << ',' << report.delta_ux[i] << ','
         << report.delta_uxx[i] << '\n';
  }
  {
    auto os = open(root / "gradients.csv");
    os << "index,grad_clean,grad_perturbed\n";
    for (std::size_t i = 0; i < report.grad_clean.size(); ++i)
      os << i << ',' << report.grad_clean[i] << ',' << report.grad_perturbed[i] << '\n';
  }
  auto dump_hist = [&](const fs::path& p, std::span<const double> values) {
    auto [edges, counts] = histogram(values, 40);
    auto os = open(p);
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < counts.size(); ++b)
      os << edges[b] << ',' << edges[b + 1] << ',' << counts[b] << '\n';
  };
  dump_hist(root / "grad_clean_hist.csv", report.grad_clean);
  dump_hist(root / "grad_perturbed_hist.csv", report.grad_perturbed);

  const auto& s = report.summary;
  nlohmann::json summary{{"max_delta_u", s.max_du},
                         {"mean_delta_u", s.mean_du},
                         {"max_delta_ux", s.max_dux},
                         {"mean_delta_ux", s.mean_dux},
                         {"max_delta_uxx", s.max_duxx},
                         {"mean_delta_uxx", s.mean_duxx},
                         {"ratio_max_ux_u", s.max_du > 0 ? s.max_dux / s.max_du : 0.0},
                         {"ratio_max_uxx_ux", s.max_dux > 0 ? s.max_duxx / s.max_dux : 0.0},
                         {"grad_clean_inf", s.grad_clean_inf},
                         {"grad_perturbed_inf", s.grad_perturbed_inf},
                         {"monotone_mean", s.monotone_mean},
                         {"grad_increased", s.grad_increased}};
  open(root / "summary.json") << summary.dump(2) << '\n';
}

}  // namespace pdelearn
