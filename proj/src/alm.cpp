#include "pdelearn/alm.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>

#include "pdelearn/metrics_io.hpp"

namespace pdelearn {

void HuberConfig::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("huber delta must be positive");
}

double huber_value(double r, const HuberConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(r)) throw std::invalid_argument("huber requires a finite residual");
  double a = std::abs(r);
  return a <= cfg.delta ? 0.5 * r * r : cfg.delta * (a - 0.5 * cfg.delta);
}

namespace {
void ascend(std::vector<double>& lambda, const std::vector<double>& phi, double factor,
            const char* family) {
  if (lambda.size() != phi.size())
    throw std::invalid_argument(std::string("multiplier/constraint size mismatch for ") + family);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] < 0.0)
      throw std::invalid_argument(std::string("negative constraint distance for ") + family);
    lambda[i] += factor * phi[i];
  }
}
}  // namespace

void update_multipliers(MultiplierSet& m, const ConstraintValues& phi) {
  ascend(m.lambda_F, phi.phi_F, 1.0, "flux");  // the flux ascent carries no penalty factor
  ascend(m.lambda_B, phi.phi_B, m.mu, "dirichlet");
  ascend(m.lambda_N, phi.phi_N, m.mu, "neumann");
  ascend(m.lambda_I, phi.phi_I, m.mu, "initial");
}

void update_penalty(MultiplierSet& m) {
  if (!(m.mu >= 1.0)) throw std::invalid_argument("penalty must satisfy mu >= 1");
  m.mu = std::min(2.0 * m.mu, m.mu_max);
}

NonFiniteResidual::NonFiniteResidual(std::string family_, int point_, std::vector<double> coords_)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "non-finite residual in family '" << family_ << "' at point " << point_ << " (";
        for (std::size_t j = 0; j < coords_.size(); ++j) os << (j ? "," : "") << coords_[j];
        os << ")";
        return os.str();
      }()),
      family(std::move(family_)),
      point(point_),
      coords(std::move(coords_)) {}

// ---------------------------------------------------------------------------

namespace {

enum class FamilyKind { Interior, Dirichlet, Neumann, Initial };

struct Family {
  FamilyKind kind;
  std::string name;
  Graph graph;
  std::vector<std::int32_t> theta, coords, data;
  std::int32_t lambda = -1, mask = -1, mu = -1;
  std::int32_t term = -1, d_sq = -1, phi = -1, lag = -1;
  std::unique_ptr<BlockEval> eval;
  const std::vector<PointData>* points = nullptr;
};

void remap(std::int32_t& id, const std::vector<std::int32_t>& map) {
  if (id >= 0) id = map[id];
}
void remap_all(std::vector<std::int32_t>& ids, const std::vector<std::int32_t>& map) {
  for (auto& id : ids) id = map[id];
}

}  // namespace

struct CompiledObjective::Impl {
  ProblemSpec spec;
  CollocationSet points;
  HuberConfig huber;
  int n_params = 0;

  std::vector<std::unique_ptr<Family>> families;
  ConstraintValues last_phi;
  LossComponents last_components;

  // Primal graph for prediction.
  Graph primal;
  std::vector<std::int32_t> primal_theta, primal_inputs, primal_outputs;
  std::unique_ptr<BlockEval> primal_eval;

  void compile_family(FamilyKind kind, const std::string& name,
                      const std::vector<PointData>& pts) {
    if (pts.empty()) return;
    auto fam_ptr = std::make_unique<Family>();
    Family& fam = *fam_ptr;
    fam.kind = kind;
    fam.name = name;
    fam.points = &pts;
    Graph& g = fam.graph;
    for (int i = 0; i < n_params; ++i) fam.theta.push_back(g.leaf(0.0));
    for (double c : pts[0].coords) fam.coords.push_back(g.leaf(c));
    for (double d : pts[0].data) fam.data.push_back(g.leaf(d));
    fam.mask = g.leaf(1.0);

    NetBuildCtx ctx(g, spec.net, fam.theta);
    Expr inner = g.const_expr(0.0);
    if (kind == FamilyKind::Interior) {
      InteriorTerms terms = spec.interior(ctx, fam.coords, fam.data);
      if (terms.data_residual) {
        Expr dsq = square(*terms.data_residual);
        fam.d_sq = dsq.id;
        inner = inner + dsq;
      }
      if (terms.flux_constraint) {
        fam.lambda = g.leaf(0.0);
        Expr phi = g.expr(g.emit(Op::Huber, terms.flux_constraint->id, -1, huber.delta));
        fam.phi = phi.id;
        Expr lag = g.expr(fam.lambda) * phi + 0.5 * phi * phi;  // unit penalty weight
        fam.lag = lag.id;
        inner = inner + lag;
      }
    } else {
      const ConstraintBuilder& builder = kind == FamilyKind::Dirichlet ? spec.dirichlet
                                         : kind == FamilyKind::Neumann ? spec.neumann
                                                                       : spec.initial;
      Expr r = builder(ctx, fam.coords, fam.data);
      fam.lambda = g.leaf(0.0);
      fam.mu = g.leaf(1.0);
      Expr phi = g.expr(g.emit(Op::Huber, r.id, -1, huber.delta));
      fam.phi = phi.id;
      Expr lag = g.expr(fam.lambda) * phi + 0.5 * g.expr(fam.mu) * phi * phi;
      fam.lag = lag.id;
      inner = lag;
    }
    Expr term = g.expr(fam.mask) * inner;
    fam.term = term.id;

    std::vector<std::int32_t> roots = {fam.term};
    if (fam.d_sq >= 0) roots.push_back(fam.d_sq);
    if (fam.phi >= 0) roots.push_back(fam.phi);
    if (fam.lag >= 0) roots.push_back(fam.lag);
    auto map = g.compact(roots);
    remap_all(fam.theta, map);
    remap_all(fam.coords, map);
    remap_all(fam.data, map);
    remap(fam.lambda, map);
    remap(fam.mask, map);
    remap(fam.mu, map);
    remap(fam.term, map);
    remap(fam.d_sq, map);
    remap(fam.phi, map);
    remap(fam.lag, map);
    fam.eval = std::make_unique<BlockEval>(g);
    families.push_back(std::move(fam_ptr));
  }

  const std::vector<double>& lambdas_for(FamilyKind kind, const MultiplierSet& m) const {
    switch (kind) {
      case FamilyKind::Interior: return m.lambda_F;
      case FamilyKind::Dirichlet: return m.lambda_B;
      case FamilyKind::Neumann: return m.lambda_N;
      case FamilyKind::Initial: return m.lambda_I;
    }
    throw std::logic_error("unreachable");
  }

  std::vector<double>& phi_for(FamilyKind kind) {
    switch (kind) {
      case FamilyKind::Interior: return last_phi.phi_F;
      case FamilyKind::Dirichlet: return last_phi.phi_B;
      case FamilyKind::Neumann: return last_phi.phi_N;
      case FamilyKind::Initial: return last_phi.phi_I;
    }
    throw std::logic_error("unreachable");
  }
};

CompiledObjective::CompiledObjective(const ProblemSpec& spec, const CollocationSet& points,
                                     const HuberConfig& huber)
    : impl_(std::make_unique<Impl>()) {
  spec.net.validate();
  huber.validate();
  impl_->spec = spec;
  impl_->points = points;
  impl_->huber = huber;
  impl_->n_params = spec.net.param_count();

  impl_->compile_family(FamilyKind::Interior, "interior", impl_->points.interior);
  if (spec.dirichlet)
    impl_->compile_family(FamilyKind::Dirichlet, "dirichlet", impl_->points.dirichlet);
  if (spec.neumann) impl_->compile_family(FamilyKind::Neumann, "neumann", impl_->points.neumann);
  if (spec.initial) impl_->compile_family(FamilyKind::Initial, "initial", impl_->points.initial);

  // Primal graph for grid prediction.
  Graph& g = impl_->primal;
  for (int i = 0; i < impl_->n_params; ++i) impl_->primal_theta.push_back(g.leaf(0.0));
  for (int j = 0; j < spec.net.input_dim; ++j) impl_->primal_inputs.push_back(g.leaf(0.0));
  impl_->primal_outputs = forward_graph(g, spec.net, impl_->primal_theta, impl_->primal_inputs);
  impl_->primal_eval = std::make_unique<BlockEval>(g);
}

CompiledObjective::~CompiledObjective() = default;
CompiledObjective::CompiledObjective(CompiledObjective&&) noexcept = default;

int CompiledObjective::param_count() const { return impl_->n_params; }

double CompiledObjective::evaluate(std::span<const double> theta, const MultiplierSet& m,
                                   std::vector<double>& grad) {
  Impl& im = *impl_;
  if (static_cast<int>(theta.size()) != im.n_params)
    throw std::invalid_argument("theta size does not match the network");
  grad.assign(im.n_params, 0.0);
  im.last_components = {};
  im.last_phi = {};

  constexpr int L = BlockEval::kLanes;
  for (const auto& fam_ptr : im.families) {
    Family& fam = *fam_ptr;
    const std::vector<PointData>& pts = *fam.points;
    const int n = static_cast<int>(pts.size());
    const std::vector<double>& lambdas = im.lambdas_for(fam.kind, m);
    if (fam.lambda >= 0 && static_cast<int>(lambdas.size()) != n)
      throw std::invalid_argument("multiplier count does not match points for " + fam.name);
    std::vector<double>& phis = im.phi_for(fam.kind);
    if (fam.phi >= 0) phis.resize(n);

    BlockEval& be = *fam.eval;
    for (int i = 0; i < im.n_params; ++i) be.broadcast(fam.theta[i], theta[i]);
    if (fam.mu >= 0) be.broadcast(fam.mu, m.mu);

    double* comp_lag = nullptr;
    switch (fam.kind) {
      case FamilyKind::Interior: comp_lag = &im.last_components.flux; break;
      case FamilyKind::Dirichlet: comp_lag = &im.last_components.dirichlet; break;
      case FamilyKind::Neumann: comp_lag = &im.last_components.neumann; break;
      case FamilyKind::Initial: comp_lag = &im.last_components.initial; break;
    }

    for (int b = 0; b < n; b += L) {
      const int valid = std::min(L, n - b);
      for (int lane = 0; lane < L; ++lane) {
        const int idx = b + (lane < valid ? lane : 0);
        const PointData& p = pts[idx];
        for (std::size_t j = 0; j < fam.coords.size(); ++j)
          be.set(fam.coords[j], lane, p.coords[j]);
        for (std::size_t j = 0; j < fam.data.size(); ++j) be.set(fam.data[j], lane, p.data[j]);
        if (fam.lambda >= 0) be.set(fam.lambda, lane, lambdas[idx]);
        be.set(fam.mask, lane, lane < valid ? 1.0 : 0.0);
      }
      be.forward(fam.graph.size() - 1);
      for (int lane = 0; lane < valid; ++lane)
        if (!std::isfinite(be.value(fam.term, lane)))
          throw NonFiniteResidual(fam.name, b + lane, pts[b + lane].coords);
      be.backward(fam.term);

      for (int i = 0; i < im.n_params; ++i) {
        const double* adj = be.lane_adjoints(fam.theta[i]);
        double s = 0.0;
        for (int lane = 0; lane < L; ++lane) s += adj[lane];
        grad[i] += s;
      }
      for (int lane = 0; lane < valid; ++lane) {
        if (fam.d_sq >= 0) im.last_components.data += be.value(fam.d_sq, lane);
        if (fam.lag >= 0) *comp_lag += be.value(fam.lag, lane);
        if (fam.phi >= 0) phis[b + lane] = be.value(fam.phi, lane);
      }
    }
  }

  LossComponents& c = im.last_components;
  c.total = c.data + c.flux + c.dirichlet + c.neumann + c.initial;
  return c.total;
}

const ConstraintValues& CompiledObjective::constraint_values() const { return impl_->last_phi; }
const LossComponents& CompiledObjective::components() const { return impl_->last_components; }

std::vector<std::vector<double>> CompiledObjective::predict(
    std::span<const double> theta, std::span<const std::vector<double>> points) const {
  Impl& im = *impl_;
  if (static_cast<int>(theta.size()) != im.n_params)
    throw std::invalid_argument("theta size does not match the network");
  BlockEval& be = *im.primal_eval;
  for (int i = 0; i < im.n_params; ++i) be.broadcast(im.primal_theta[i], theta[i]);

  constexpr int L = BlockEval::kLanes;
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<double>> out(n);
  for (int b = 0; b < n; b += L) {
    const int valid = std::min(L, n - b);
    for (int lane = 0; lane < L; ++lane) {
      const auto& pt = points[b + (lane < valid ? lane : 0)];
      if (static_cast<int>(pt.size()) != static_cast<int>(im.primal_inputs.size()))
        throw std::invalid_argument("prediction point dimension mismatch");
      for (std::size_t j = 0; j < im.primal_inputs.size(); ++j)
        be.set(im.primal_inputs[j], lane, pt[j]);
    }
    be.forward(im.primal.size() - 1);
    for (int lane = 0; lane < valid; ++lane) {
      std::vector<double> y(im.primal_outputs.size());
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = be.value(im.primal_outputs[k], lane);
      out[b + lane] = std::move(y);
    }
  }
  return out;
}

MultiplierSet CompiledObjective::make_multipliers(double mu_max) const {
  if (!(mu_max >= 1.0)) throw std::invalid_argument("mu_max must be >= 1");
  MultiplierSet m;
  m.mu = 1.0;
  m.mu_max = mu_max;
  for (const auto& fam_ptr : impl_->families) {
    const Family& fam = *fam_ptr;
    if (fam.lambda < 0) continue;
    std::vector<double> zeros(fam.points->size(), 0.0);
    switch (fam.kind) {
      case FamilyKind::Interior: m.lambda_F = std::move(zeros); break;
      case FamilyKind::Dirichlet: m.lambda_B = std::move(zeros); break;
      case FamilyKind::Neumann: m.lambda_N = std::move(zeros); break;
      case FamilyKind::Initial: m.lambda_I = std::move(zeros); break;
    }
  }
  return m;
}

std::pair<double, std::vector<double>> objective(std::span<const double> theta,
                                                 const MultiplierSet& m, const ProblemSpec& spec,
                                                 const CollocationSet& points,
                                                 const HuberConfig& huber) {
  CompiledObjective obj(spec, points, huber);
  std::vector<double> grad;
  double loss = obj.evaluate(theta, m, grad);
  return {loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Training loop.

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 of (base, stream) so distinct streams are decorrelated.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, int j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(j));
  return out;
}

double max_or_zero(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

}  // namespace

const EpochRow& RunRecord::final_row() const {
  if (history.empty()) throw std::logic_error("run has no history");
  return history.back();
}

RunRecord train(const ProblemSpec& spec, const TrainConfig& config) {
  const int epochs = config.epochs > 0 ? config.epochs : spec.epochs;
  if (epochs < 1) throw std::invalid_argument("training requires epochs >= 1");
  const double mu_max = config.mu_max > 0.0 ? config.mu_max : spec.mu_max;
  if (config.metric_every < 1) throw std::invalid_argument("metric_every must be >= 1");

  RunRecord rec;
  rec.problem = spec.name;
  rec.epochs = epochs;
  rec.seed = config.seed;
  rec.mu_max = mu_max;
  rec.huber_delta = config.huber.delta;
  rec.net = spec.net;
  rec.start_time = utc_now();

  CollocationSet points = sample_problem(spec, config.seed);
  CompiledObjective obj(spec, points, config.huber);
  ParamVector theta = init_xavier(spec.net, stream_seed(config.seed, 0));
  MultiplierSet m = obj.make_multipliers(mu_max);
  rec.grid = spec.make_eval_grid();

  const auto closure = [&](std::span<const double> th, std::vector<double>& grad) -> double {
    try {
      return obj.evaluate(th, m, grad);
    } catch (const NonFiniteResidual&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  LbfgsState state;
  std::vector<double> grad;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    for (int epoch = 1; epoch <= epochs; ++epoch) {
      StepReport report = lbfgs_step(closure, theta, state, config.lbfgs);

      EpochRow row;
      row.epoch = epoch;
      row.mu = m.mu;
      row.inner_iters = report.inner_iters;
      row.func_evals = report.func_evals;
      row.rejected = report.rejected;

      // Components and constraint distances at the epoch-end parameters.
      row.loss_total = obj.evaluate(theta, m, grad);
      const LossComponents& c = obj.components();
      row.loss_data = c.data;
      row.loss_flux = c.flux;
      row.loss_dirichlet = c.dirichlet;
      row.loss_neumann = c.neumann;
      row.loss_initial = c.initial;
      for (double gi : grad) row.grad_inf = std::max(row.grad_inf, std::abs(gi));

      update_penalty(m);
      update_multipliers(m, obj.constraint_values());
      row.mu_next = m.mu;
      row.max_lambda_F = max_or_zero(m.lambda_F);
      row.max_lambda_B = max_or_zero(m.lambda_B);
      row.max_lambda_N = max_or_zero(m.lambda_N);
      row.max_lambda_I = max_or_zero(m.lambda_I);

      row.rel_l2_u = row.rel_l2_sigma = row.linf_u = row.mae_u = row.mse_u = nan;
      if (epoch % config.metric_every == 0 || epoch == epochs) {
        auto preds = obj.predict(theta, rec.grid.points);
        auto pred_u = column(preds, 0);
        auto exact_u = column(rec.grid.exact, 0);
        row.rel_l2_u = rel_l2(pred_u, exact_u);
        row.linf_u = linf(pred_u, exact_u);
        row.mae_u = mae(pred_u, exact_u);
        row.mse_u = mse(pred_u, exact_u);
        if (spec.has_flux_output)
          row.rel_l2_sigma = rel_l2(column(preds, 1), column(rec.grid.exact, 1));
        if (epoch == epochs) rec.predictions = std::move(preds);
      }

      if (config.hook) config.hook(row);
      rec.history.push_back(row);
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
  }

  rec.theta = std::move(theta);
  rec.multipliers = std::move(m);
  rec.end_time = utc_now();
  return rec;
}

}  // namespace pdelearn
