#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace pdelearn {

// Returns (loss, gradient) at the given parameters.
using Closure = std::function<double(std::span<const double> theta, std::vector<double>& grad)>;

struct WolfeParams {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_evals = 25;

  void validate() const;
};

struct LbfgsOptions {
  int history = 100;
  int max_inner = 20;    // inner iterations per step (one step = one epoch)
  int max_evals = 25;    // function evaluations per step
  double grad_tol = 1e-7;
  double change_tol = 1e-9;
  WolfeParams wolfe;
};

struct LbfgsState {
  struct Pair {
    std::vector<double> s, y;
    double rho = 0.0;  // 1 / (s.y)
  };
  std::deque<Pair> history;
  std::vector<double> prev_grad;
  std::vector<double> direction;
  double prev_loss = 0.0;
  double step = 0.0;
  double h_diag = 1.0;
  long eval_count = 0;
  bool initialized = false;

  void reset();
};

struct StepReport {
  double loss = 0.0;
  int inner_iters = 0;
  int func_evals = 0;
  bool converged_grad = false;
  bool converged_change = false;
  bool rejected = false;  // non-finite loss; state was reset
};

// Two-loop recursion. With empty history returns -grad (gamma = 1).
std::vector<double> two_loop_direction(const LbfgsState& state, std::span<const double> grad);

// Strong Wolfe line search on f(x + alpha d); returns the accepted step.
// Throws std::invalid_argument when d is not a descent direction.
double strong_wolfe_search(const Closure& closure, std::span<const double> x,
                           std::span<const double> direction, const WolfeParams& params);

// One epoch of L-BFGS: up to max_inner direction/line-search/update rounds.
// theta is updated in place; state persists across epochs.
StepReport lbfgs_step(const Closure& closure, std::vector<double>& theta, LbfgsState& state,
                      const LbfgsOptions& options = {});

}  // namespace pdelearn
