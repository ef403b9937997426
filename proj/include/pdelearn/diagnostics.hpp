#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdelearn/network.hpp"
#include "pdelearn/problems.hpp"

namespace pdelearn {

struct PerturbationReport {
  std::vector<double> grid;
  std::vector<double> delta_u, delta_ux, delta_uxx;  // pointwise |clean - perturbed|
  std::vector<double> grad_clean, grad_perturbed;    // full objective gradients

  struct Summary {
    double max_du = 0.0, mean_du = 0.0;
    double max_dux = 0.0, mean_dux = 0.0;
    double max_duxx = 0.0, mean_duxx = 0.0;
    double grad_clean_inf = 0.0, grad_perturbed_inf = 0.0;
    bool monotone_mean = false;  // mean(du) < mean(dux) < mean(duxx)
    bool grad_increased = false;
  } summary;
};

// theta + scale * (d1 + d2), d1 and d2 Gaussian directions rescaled so each
// neuron's incoming-weight-and-bias block has the same norm as theta's block.
// Zero-norm blocks keep the raw Gaussian draw scaled by `scale`.
ParamVector perturb(const ParamVector& theta, const NetworkConfig& config, double scale,
                    std::uint64_t seed);

// Evaluates u, u_x, u_xx on a uniform grid for both parameter sets and the
// objective gradient (fresh multipliers) at both.
PerturbationReport amplification_report(const ProblemSpec& spec, const ParamVector& theta,
                                        const ParamVector& theta_tilde, int grid_n = 1000);

// Equal-width bins spanning [min, max]; counts sum to |values|.
std::pair<std::vector<double>, std::vector<long>> histogram(std::span<const double> values,
                                                            int bins);

// series.csv (grid + delta series), gradients.csv, summary.json,
// histogram CSVs for parameters and gradients.
void write_perturbation_report(const PerturbationReport& report, const std::string& dir);

}  // namespace pdelearn
