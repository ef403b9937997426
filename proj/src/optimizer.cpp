#include "pdelearn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdelearn {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double abs_max(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

double abs_sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::fabs(v);
  return s;
}

bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

struct NonFiniteLoss : std::runtime_error {
  NonFiniteLoss() : std::runtime_error("non-finite loss from closure") {}
};

// Minimizer of the cubic through (x1,f1,g1), (x2,f2,g2), clamped to bounds.
double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2,
                         double lo, double hi) {
  double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  double d2sq = d1 * d1 - g1 * g2;
  if (d2sq >= 0.0) {
    double d2 = std::sqrt(d2sq);
    double min_pos;
    if (x1 <= x2)
      min_pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
    else
      min_pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    return std::min(std::max(min_pos, lo), hi);
  }
  return (lo + hi) / 2.0;
}

double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2) {
  double lo = std::min(x1, x2), hi = std::max(x1, x2);
  return cubic_interpolate(x1, f1, g1, x2, f2, g2, lo, hi);
}

struct WolfeResult {
  double f;
  std::vector<double> g;
  double t;
  int evals;
};

// Bracketing strong Wolfe search with cubic interpolation and a zoom phase.
WolfeResult strong_wolfe(const std::function<double(double, std::vector<double>&)>& eval_at,
                         double t, std::span<const double> d, double f,
                         std::span<const double> g0, double gtd, const WolfeParams& p,
                         double change_tol) {
  const double c1 = p.c1, c2 = p.c2;
  const int max_ls = p.max_line_evals;
  const double d_norm = abs_max(d);

  std::vector<double> g_new;
  double f_new = eval_at(t, g_new);
  int evals = 1;
  double gtd_new = dot(g_new, d);

  double t_prev = 0.0, f_prev = f, gtd_prev = gtd;
  std::vector<double> g_prev(g0.begin(), g0.end());

  double br_t[2], br_f[2], br_gtd[2];
  std::vector<double> br_g[2];
  bool done = false;
  int ls_iter = 0;
  bool bracketed = false;

  while (ls_iter < max_ls) {
    if (f_new > f + c1 * t * gtd || (ls_iter > 1 && f_new >= f_prev)) {
      br_t[0] = t_prev; br_t[1] = t;
      br_f[0] = f_prev; br_f[1] = f_new;
      br_g[0] = g_prev; br_g[1] = g_new;
      br_gtd[0] = gtd_prev; br_gtd[1] = gtd_new;
      bracketed = true;
      break;
    }
    if (std::fabs(gtd_new) <= -c2 * gtd) {
      return {f_new, std::move(g_new), t, evals};
    }
    if (gtd_new >= 0.0) {
      br_t[0] = t_prev; br_t[1] = t;
      br_f[0] = f_prev; br_f[1] = f_new;
      br_g[0] = g_prev; br_g[1] = g_new;
      br_gtd[0] = gtd_prev; br_gtd[1] = gtd_new;
      bracketed = true;
      break;
    }
    double min_step = t + 0.01 * (t - t_prev);
    double max_step = t * 10.0;
    double tmp = t;
    t = cubic_interpolate(t_prev, f_prev, gtd_prev, t, f_new, gtd_new, min_step, max_step);
    t_prev = tmp;
    f_prev = f_new;
    g_prev = g_new;
    gtd_prev = gtd_new;
    f_new = eval_at(t, g_new);
    ++evals;
    gtd_new = dot(g_new, d);
    ++ls_iter;
  }
  if (!bracketed) {
    br_t[0] = 0.0; br_t[1] = t;
    br_f[0] = f; br_f[1] = f_new;
    br_g[0].assign(g0.begin(), g0.end()); br_g[1] = g_new;
    br_gtd[0] = gtd; br_gtd[1] = gtd_new;
  }

  bool insuf_progress = false;
  int low = br_f[0] <= br_f[1] ? 0 : 1;
  int high = 1 - low;
  while (!done && ls_iter < max_ls) {
    if (std::fabs(br_t[1] - br_t[0]) * d_norm < change_tol) break;
    t = cubic_interpolate(br_t[0], br_f[0], br_gtd[0], br_t[1], br_f[1], br_gtd[1]);
    double tmax = std::max(br_t[0], br_t[1]);
    double tmin = std::min(br_t[0], br_t[1]);
    double eps = 0.1 * (tmax - tmin);
    if (std::min(tmax - t, t - tmin) < eps) {
      if (insuf_progress || t >= tmax || t <= tmin) {
        t = std::fabs(t - tmax) < std::fabs(t - tmin) ? tmax - eps : tmin + eps;
        insuf_progress = false;
      } else {
        insuf_progress = true;
      }
    } else {
      insuf_progress = false;
    }
    f_new = eval_at(t, g_new);
    ++evals;
    gtd_new = dot(g_new, d);
    ++ls_iter;
    if (f_new > f + c1 * t * gtd || f_new >= br_f[low]) {
      br_t[high] = t;
      br_f[high] = f_new;
      br_g[high] = g_new;
      br_gtd[high] = gtd_new;
      low = br_f[0] <= br_f[1] ? 0 : 1;
      high = 1 - low;
    } else {
      if (std::fabs(gtd_new) <= -c2 * gtd) {
        done = true;
      } else if (gtd_new * (br_t[high] - br_t[low]) >= 0.0) {
        br_t[high] = br_t[low];
        br_f[high] = br_f[low];
        br_g[high] = br_g[low];
        br_gtd[high] = br_gtd[low];
      }
      br_t[low] = t;
      br_f[low] = f_new;
      br_g[low] = g_new;
      br_gtd[low] = gtd_new;
    }
  }
  return {br_f[low], std::move(br_g[low]), br_t[low], evals};
}

}  // namespace

void WolfeParams::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw std::invalid_argument("require 0 < c1 < c2 < 1");
  if (max_line_evals < 1) throw std::invalid_argument("max_line_evals must be >= 1");
}

void LbfgsState::reset() { *this = LbfgsState{}; }

std::vector<double> two_loop_direction(const LbfgsState& state, std::span<const double> grad) {
  if (!all_finite(grad)) throw std::invalid_argument("non-finite gradient");
  const auto& hist = state.history;
  std::vector<double> q(grad.begin(), grad.end());
  for (auto& v : q) v = -v;
  std::vector<double> alpha(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    const auto& p = hist[k];
    alpha[k] = dot(p.s, q) * p.rho;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * p.y[i];
  }
  double gamma = state.h_diag;
  if (!state.history.empty()) {
    const auto& last = hist.back();
    gamma = (1.0 / last.rho) / dot(last.y, last.y);
  }
  for (auto& v : q) v *= gamma;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const auto& p = hist[k];
    double beta = dot(p.y, q) * p.rho;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * p.s[i];
  }
  return q;
}

double strong_wolfe_search(const Closure& closure, std::span<const double> x,
                           std::span<const double> direction, const WolfeParams& params) {
  params.validate();
  std::vector<double> g;
  std::vector<double> x0(x.begin(), x.end());
  double f = closure(x0, g);
  double gtd = dot(g, direction);
  if (!(gtd < 0.0)) throw std::invalid_argument("direction is not a descent direction");
  std::vector<double> xt(x.size());
  auto eval_at = [&](double t, std::vector<double>& grad_out) {
    for (std::size_t i = 0; i < x0.size(); ++i) xt[i] = x0[i] + t * direction[i];
    return closure(xt, grad_out);
  };
  auto res = strong_wolfe(eval_at, 1.0, direction, f, g, gtd, params, 1e-9);
  return res.t;
}

StepReport lbfgs_step(const Closure& closure, std::vector<double>& theta, LbfgsState& state,
                      const LbfgsOptions& options) {
  options.wolfe.validate();
  StepReport report;
  const std::vector<double> theta_start = theta;

  auto guarded = [&](std::span<const double> x, std::vector<double>& g) {
    double loss = closure(x, g);
    ++state.eval_count;
    if (!std::isfinite(loss)) throw NonFiniteLoss{};
    return loss;
  };

  try {
    std::vector<double> grad;
    double loss = guarded(theta, grad);
    int current_evals = 1;
    report.loss = loss;
    report.func_evals = 1;
    if (abs_max(grad) <= options.grad_tol) {
      report.converged_grad = true;
      return report;
    }

    int n_iter = 0;
    while (n_iter < options.max_inner) {
      ++n_iter;
      report.inner_iters = n_iter;
      bool first_ever = !state.initialized;
      if (first_ever) {
        state.direction = two_loop_direction(LbfgsState{}, grad);  // -grad
        state.h_diag = 1.0;
        state.initialized = true;
      } else {
        // Curvature pair from the previous accepted move.
        std::vector<double> y(grad.size()), s(grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) {
          y[i] = grad[i] - state.prev_grad[i];
          s[i] = state.step * state.direction[i];
        }
        double ys = dot(y, s);
        if (ys > 1e-10) {
          if (static_cast<int>(state.history.size()) >= options.history)
            state.history.pop_front();
          state.h_diag = ys / dot(y, y);
          state.history.push_back({std::move(s), std::move(y), 1.0 / ys});
        }
        state.direction = two_loop_direction(state, grad);
      }
      state.prev_grad = grad;
      state.prev_loss = loss;

      double t = first_ever ? std::min(1.0, 1.0 / abs_sum(grad)) : 1.0;
      double gtd = dot(grad, state.direction);
      if (gtd >= 0.0) {
        // A stored history that no longer models the (shifted) objective can
        // produce a non-descent direction; discard it and fall back to
        // steepest descent before giving up on the step.
        if (!state.history.empty()) {
          state.history.clear();
          state.h_diag = 1.0;
          state.direction = two_loop_direction(state, grad);
          state.prev_grad = grad;
          gtd = dot(grad, state.direction);
        }
        if (gtd >= 0.0) {
          report.converged_change = true;
          break;
        }
      }

      auto eval_at = [&](double step, std::vector<double>& g_out) {
        std::vector<double> xt(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) xt[i] = theta[i] + step * state.direction[i];
        return guarded(xt, g_out);
      };
      auto res = strong_wolfe(eval_at, t, state.direction, loss, grad, gtd, options.wolfe,
                              options.change_tol);
      loss = res.f;
      grad = std::move(res.g);
      t = res.t;
      state.step = t;
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += t * state.direction[i];
      current_evals += res.evals;
      report.func_evals = current_evals;
      report.loss = loss;

      if (n_iter == options.max_inner) break;
      if (current_evals >= options.max_evals) break;
      if (abs_max(grad) <= options.grad_tol) {
        report.converged_grad = true;
        break;
      }
      double max_move = std::fabs(t) * abs_max(state.direction);
      if (max_move <= options.change_tol) {
        report.converged_change = true;
        break;
      }
    }
  } catch (const NonFiniteLoss&) {
    theta = theta_start;
    long evals = state.eval_count;
    state.reset();
    state.eval_count = evals;
    report.rejected = true;
  }
  return report;
}

}  // namespace pdelearn
