#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdelearn/alm.hpp"
#include "pdelearn/network.hpp"

namespace pdelearn {

// ||pred - exact||_2 / ||exact||_2; throws when ||exact|| = 0.
double rel_l2(std::span<const double> pred, std::span<const double> exact);

// max_i |pred_i - exact_i|.
double linf(std::span<const double> pred, std::span<const double> exact);

// (1/n) sum |pred_i - exact_i|.
double mae(std::span<const double> pred, std::span<const double> exact);

// (1/n) sum (pred_i - exact_i)^2; recorded alongside MAE.
double mse(std::span<const double> pred, std::span<const double> exact);

// Writes manifest.json, history.csv, checkpoint.json, multipliers.csv and
// solution.csv into dir (created if missing).
void save_run(const RunRecord& record, const std::string& dir);

// Restores a network checkpoint; forward passes reproduce the saved model
// bit-exactly.
std::pair<NetworkConfig, ParamVector> load_checkpoint(const std::string& path);

}  // namespace pdelearn
