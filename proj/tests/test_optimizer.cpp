#include <cmath>
#include <limits>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "pdelearn/optimizer.hpp"

using namespace pdelearn;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Dense BFGS inverse-Hessian oracle: H0 = gamma I (gamma from the newest
// pair), then H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T applied
// oldest-to-newest. The two-loop recursion must produce -H g.
std::vector<double> dense_bfgs_direction(const LbfgsState& state, const std::vector<double>& g) {
  const std::size_t n = g.size();
  const auto& newest = state.history.back();
  double gamma = dot(newest.s, newest.y) / dot(newest.y, newest.y);
  std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) H[i][i] = gamma;
  for (const auto& p : state.history) {
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    // A = (I - rho s y^T) H
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double v = H[i][j];
        for (std::size_t k = 0; k < n; ++k) v -= p.rho * p.s[i] * p.y[k] * H[k][j];
        A[i][j] = v;
      }
    // H = A (I - rho y s^T) + rho s s^T
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double v = A[i][j];
        for (std::size_t k = 0; k < n; ++k) v -= p.rho * A[i][k] * p.y[k] * p.s[j];
        H[i][j] = v + p.rho * p.s[i] * p.s[j];
      }
  }
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] -= H[i][j] * g[j];
  return d;
}

Closure rosenbrock() {
  return [](std::span<const double> x, std::vector<double>& grad) {
    double a = 1.0 - x[0];
    double b = x[1] - x[0] * x[0];
    grad.assign(2, 0.0);
    grad[0] = -2.0 * a - 400.0 * x[0] * b;
    grad[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
}

}  // namespace

TEST_CASE("two-loop with empty history is steepest descent") {
  LbfgsState state;
  std::vector<double> g = {1.0, -2.0, 0.5};
  auto d = two_loop_direction(state, g);
  CHECK(d[0] == -1.0);
  CHECK(d[1] == 2.0);
  CHECK(d[2] == -0.5);
}

TEST_CASE("two-loop recursion matches the dense BFGS oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const std::size_t n = 4;
  LbfgsState state;
  // SPD map y = A s guarantees curvature s.y > 0.
  double A[4][4] = {{4, 1, 0, 0}, {1, 3, 1, 0}, {0, 1, 5, 1}, {0, 0, 1, 2}};
  for (int k = 0; k < 3; ++k) {
    LbfgsState::Pair p;
    p.s.resize(n);
    p.y.assign(n, 0.0);
    for (auto& v : p.s) v = unif(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p.y[i] += A[i][j] * p.s[j];
    p.rho = 1.0 / dot(p.s, p.y);
    state.history.push_back(std::move(p));
  }
  std::vector<double> g(n);
  for (auto& v : g) v = unif(rng);
  auto fast = two_loop_direction(state, g);
  auto dense = dense_bfgs_direction(state, g);
  for (std::size_t i = 0; i < n; ++i) CHECK(fast[i] == doctest::Approx(dense[i]).epsilon(1e-12));
}

TEST_CASE("strong Wolfe search satisfies both conditions") {
  // Nonquadratic convex function with minimum away from the start.
  Closure f = [](std::span<const double> x, std::vector<double>& grad) {
    grad.assign(1, 0.0);
    grad[0] = 2.0 * (x[0] - 3.0) + std::cosh(x[0] - 3.0) * 0.1;
    return (x[0] - 3.0) * (x[0] - 3.0) + 0.1 * std::sinh(x[0] - 3.0);
  };
  std::vector<double> x0 = {0.0}, g0;
  double f0 = f(x0, g0);
  std::vector<double> d = {-g0[0]};
  WolfeParams params;
  double t = strong_wolfe_search(f, x0, d, params);
  std::vector<double> xt = {x0[0] + t * d[0]}, gt;
  double ft = f(xt, gt);
  double gtd0 = g0[0] * d[0];
  CHECK(ft <= f0 + params.c1 * t * gtd0);                 // sufficient decrease
  CHECK(std::abs(gt[0] * d[0]) <= params.c2 * std::abs(gtd0));  // curvature
}

TEST_CASE("strong Wolfe search rejects ascent directions") {
  Closure f = [](std::span<const double> x, std::vector<double>& grad) {
    grad.assign(1, 2.0 * x[0]);
    return x[0] * x[0];
  };
  std::vector<double> x0 = {1.0};
  std::vector<double> uphill = {1.0};  // gradient is +2 here, so +1 ascends
  CHECK_THROWS_AS(strong_wolfe_search(f, x0, uphill, {}), std::invalid_argument);
}

TEST_CASE("L-BFGS minimizes Rosenbrock from the standard start") {
  std::vector<double> x = {-1.2, 1.0};
  LbfgsState state;
  LbfgsOptions opts;
  double loss = 1e300;
  for (int epoch = 0; epoch < 50; ++epoch) {
    auto rep = lbfgs_step(rosenbrock(), x, state, opts);
    CHECK(rep.loss <= loss + 1e-12);  // monotone across epochs
    loss = rep.loss;
    if (rep.converged_grad) break;
  }
  CHECK(loss < 1e-9);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("state persists across epochs and runs are deterministic") {
  auto run = [](int epochs) {
    std::vector<double> x = {-1.2, 1.0};
    LbfgsState state;
    std::vector<double> losses;
    for (int e = 0; e < epochs; ++e) losses.push_back(lbfgs_step(rosenbrock(), x, state, {}).loss);
    return std::pair(x, losses);
  };
  auto [xa, la] = run(5);
  auto [xb, lb] = run(5);
  CHECK(xa == xb);  // bit-identical
  CHECK(la == lb);
  LbfgsState state;
  std::vector<double> x = {-1.2, 1.0};
  lbfgs_step(rosenbrock(), x, state, {});
  CHECK(!state.history.empty());  // curvature pairs retained for the next epoch
}

TEST_CASE("non-finite loss rejects the step and resets state") {
  Closure f = [](std::span<const double> x, std::vector<double>& grad) {
    grad.assign(1, 0.0);
    if (x[0] > 0.5) return std::numeric_limits<double>::quiet_NaN();
    grad[0] = 2.0 * (x[0] - 5.0);
    return (x[0] - 5.0) * (x[0] - 5.0);
  };
  std::vector<double> x = {0.0};
  LbfgsState state;
  auto rep = lbfgs_step(f, x, state, {});
  CHECK(rep.rejected);
  CHECK(x[0] == 0.0);  // restored
  CHECK(state.history.empty());
  CHECK_FALSE(state.initialized);
}

TEST_CASE("gradient and parameter-change convergence flags") {
  Closure quad = [](std::span<const double> x, std::vector<double>& grad) {
    grad.assign(2, 0.0);
    grad[0] = 2.0 * x[0];
    grad[1] = 8.0 * x[1];
    return x[0] * x[0] + 4.0 * x[1] * x[1];
  };
  std::vector<double> x = {1.0, -1.0};
  LbfgsState state;
  bool converged = false;
  for (int e = 0; e < 20 && !converged; ++e) {
    auto rep = lbfgs_step(quad, x, state, {});
    converged = rep.converged_grad || rep.converged_change;
  }
  CHECK(converged);
  CHECK(std::abs(x[0]) < 1e-5);
  CHECK(std::abs(x[1]) < 1e-5);
}

TEST_CASE("option validation") {
  CHECK_THROWS(WolfeParams{0.9, 0.1, 25}.validate());  // c1 < c2 required
  CHECK_THROWS(WolfeParams{1e-4, 0.9, 0}.validate());
}
