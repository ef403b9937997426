#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pdelearn/autodiff.hpp"
#include "pdelearn/network.hpp"
#include "pdelearn/optimizer.hpp"
#include "pdelearn/problems.hpp"
#include "pdelearn/sampling.hpp"

namespace pdelearn {

struct HuberConfig {
  double delta = 1.0;

  void validate() const;
};

// phi(r): 1/2 r^2 for |r| <= delta, else delta(|r| - delta/2).
double huber_value(double r, const HuberConfig& cfg = {});

// One Lagrange multiplier per constraint point, plus the shared penalty.
struct MultiplierSet {
  std::vector<double> lambda_F, lambda_B, lambda_N, lambda_I;
  double mu = 1.0;
  double mu_max = 1e4;
};

// Huber distances of each constraint family at every collocation point.
struct ConstraintValues {
  std::vector<double> phi_F, phi_B, phi_N, phi_I;
};

// Dual ascent: lambda_F += phi(F) (no mu factor); lambda_B/N/I += mu phi.
void update_multipliers(MultiplierSet& m, const ConstraintValues& phi);

// mu <- min(2 mu, mu_max).
void update_penalty(MultiplierSet& m);

struct LossComponents {
  double total = 0.0;
  double data = 0.0;       // sum D^2
  double flux = 0.0;       // sum lambda_F phi(F) + 1/2 phi(F)^2
  double dirichlet = 0.0;  // sum lambda_B phi(B) + mu/2 phi(B)^2
  double neumann = 0.0;
  double initial = 0.0;
};

// A residual evaluation produced a non-finite value.
struct NonFiniteResidual : std::runtime_error {
  NonFiniteResidual(std::string family_, int point_, std::vector<double> coords_);
  std::string family;
  int point;
  std::vector<double> coords;
};

// Compiles one residual graph per constraint family against a fixed
// collocation set and sweeps it over the points in vector lanes. Parameters,
// coordinates, data, multipliers, and the penalty all enter as leaves, so one
// compilation serves the whole run.
class CompiledObjective {
 public:
  CompiledObjective(const ProblemSpec& spec, const CollocationSet& points,
                    const HuberConfig& huber = {});
  ~CompiledObjective();
  CompiledObjective(CompiledObjective&&) noexcept;

  int param_count() const;

  // Augmented Lagrangian loss and its full parameter gradient. Also captures
  // per-point constraint distances and loss components for the same theta.
  double evaluate(std::span<const double> theta, const MultiplierSet& m,
                  std::vector<double>& grad);

  const ConstraintValues& constraint_values() const;  // from the last evaluate
  const LossComponents& components() const;           // from the last evaluate

  // Network outputs at arbitrary points via the compiled primal graph.
  std::vector<std::vector<double>> predict(std::span<const double> theta,
                                           std::span<const std::vector<double>> points) const;

  // Zero-initialized multipliers sized for the collocation set.
  MultiplierSet make_multipliers(double mu_max) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience single-shot form of the augmented Lagrangian.
std::pair<double, std::vector<double>> objective(std::span<const double> theta,
                                                 const MultiplierSet& m, const ProblemSpec& spec,
                                                 const CollocationSet& points,
                                                 const HuberConfig& huber = {});

struct EpochRow {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_data = 0.0;
  double loss_flux = 0.0;
  double loss_dirichlet = 0.0;
  double loss_neumann = 0.0;
  double loss_initial = 0.0;
  double mu = 1.0;       // penalty used by this epoch's primal step
  double mu_next = 1.0;  // penalty after this epoch's dual update
  double max_lambda_F = 0.0;
  double max_lambda_B = 0.0;
  double max_lambda_N = 0.0;
  double max_lambda_I = 0.0;
  double grad_inf = 0.0;
  int inner_iters = 0;
  int func_evals = 0;
  bool rejected = false;
  // Error norms vs the exact/reference solution; NaN on epochs where metric
  // evaluation is skipped.
  double rel_l2_u = 0.0, rel_l2_sigma = 0.0, linf_u = 0.0, mae_u = 0.0, mse_u = 0.0;
};

struct TrainConfig {
  int epochs = -1;       // -1: use the problem preset
  std::uint64_t seed = 0;
  double mu_max = -1.0;  // -1: use the problem preset
  HuberConfig huber;
  LbfgsOptions lbfgs;
  int metric_every = 1;  // evaluate error norms every N epochs (always on the last)
  std::function<void(const EpochRow&)> hook;
};

struct RunRecord {
  std::string problem;
  int epochs = 0;
  std::uint64_t seed = 0;
  double mu_max = 0.0;
  double huber_delta = 1.0;
  NetworkConfig net;
  std::string start_time, end_time;

  std::vector<EpochRow> history;
  ParamVector theta;
  MultiplierSet multipliers;

  EvalGrid grid;  // evaluation points with exact/reference values
  std::vector<std::vector<double>> predictions;

  bool failed = false;
  std::string failure;

  const EpochRow& final_row() const;
};

// Algorithm: per epoch, one L-BFGS step on the augmented Lagrangian (primal),
// then penalty doubling and multiplier ascent (dual).
RunRecord train(const ProblemSpec& spec, const TrainConfig& config = {});

// Distinct deterministic RNG streams derived from one base seed.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace pdelearn
