#include "pdelearn/problems.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "pdelearn/sampling.hpp"

namespace pdelearn {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Probes

class NetProbe : public Probe {
 public:
  NetProbe(Graph& g, std::vector<std::int32_t> outputs, std::vector<std::int32_t> coords)
      : g_(&g), outputs_(std::move(outputs)), coords_(std::move(coords)) {}

  Expr u(int output) override { return g_->expr(outputs_.at(output)); }

  Expr d(int output, int coord, int order) override {
    return g_->expr(g_->input_derivative(outputs_.at(output), coords_.at(coord), order));
  }

 private:
  Graph* g_;
  std::vector<std::int32_t> outputs_;
  std::vector<std::int32_t> coords_;
};

class ExactProbe : public Probe {
 public:
  ExactProbe(Graph& g, const ProblemSpec& spec, std::vector<double> pt)
      : g_(&g), spec_(&spec), pt_(std::move(pt)) {}

  Expr u(int output) override { return g_->const_expr(spec_->exact(pt_).at(output)); }

  Expr d(int output, int coord, int order) override {
    return g_->const_expr(spec_->exact_deriv(pt_, coord, order).at(output));
  }

 private:
  Graph* g_;
  const ProblemSpec* spec_;
  std::vector<double> pt_;
};

// Backs the builders with the exact solution instead of a network, so the
// residual expressions collapse to (near-)constants the gate can inspect.
class ExactBuildCtx : public BuildCtx {
 public:
  ExactBuildCtx(Graph& g, const ProblemSpec& spec) : BuildCtx(g), spec_(&spec) {}

  Probe& probe(std::vector<std::int32_t> coord_nodes) override {
    std::vector<double> pt(coord_nodes.size());
    for (std::size_t j = 0; j < coord_nodes.size(); ++j) pt[j] = graph.value(coord_nodes[j]);
    probes_.push_back(std::make_unique<ExactProbe>(graph, *spec_, std::move(pt)));
    return *probes_.back();
  }

 private:
  const ProblemSpec* spec_;
  std::vector<std::unique_ptr<Probe>> probes_;
};

std::vector<std::vector<double>> uniform_grid_1d(double lo, double hi, int n) {
  std::vector<std::vector<double>> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back({lo + (hi - lo) * i / (n - 1)});
  return pts;
}

}  // namespace

// Residual builders run against a network forward pass during training.
NetBuildCtx::NetBuildCtx(Graph& g, const NetworkConfig& net, std::span<const std::int32_t> theta)
    : BuildCtx(g), net_(net), theta_(theta.begin(), theta.end()) {}

Probe& NetBuildCtx::probe(std::vector<std::int32_t> coord_nodes) {
  auto outputs = forward_graph(graph, net_, theta_, coord_nodes);
  probes_.push_back(
      std::make_unique<NetProbe>(graph, std::move(outputs), std::move(coord_nodes)));
  return *probes_.back();
}

NetBuildCtx::~NetBuildCtx() = default;

// ---------------------------------------------------------------------------
// Poisson 1d: -u'' = f with u* = sin(5 pi x), second-order form, data residual
// only.

ProblemSpec poisson1d_spec() {
  ProblemSpec s;
  s.name = "poisson1d";
  s.space_dim = 1;
  s.domain = {{0.0, 1.0}};
  s.net = {1, 1, 2, 20, Activation::Tanh};
  s.n_interior = 256;
  s.n_dirichlet = 2;
  s.epochs = 1000;

  s.interior = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                  std::span<const std::int32_t> data) {
    auto& p = ctx.probe({coords[0]});
    InteriorTerms terms;
    terms.data_residual = p.d(0, 0, 2) - ctx.graph.expr(data[0]);
    return terms;
  };
  s.interior_data = [](std::span<const double> pt) {
    return std::vector<double>{-25.0 * kPi * kPi * std::sin(5.0 * kPi * pt[0])};
  };

  s.dirichlet = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                   std::span<const std::int32_t> data) {
    auto& p = ctx.probe({coords[0]});
    return p.u(0) - ctx.graph.expr(data[0]);
  };
  s.dirichlet_data = [](std::span<const double>) { return std::vector<double>{0.0}; };

  s.exact = [](std::span<const double> pt) {
    return std::vector<double>{std::sin(5.0 * kPi * pt[0])};
  };
  s.exact_deriv = [](std::span<const double> pt, int coord, int order) {
    if (coord != 0) throw std::invalid_argument("poisson1d has one coordinate");
    double w = 5.0 * kPi;
    if (order == 1) return std::vector<double>{w * std::cos(w * pt[0])};
    if (order == 2) return std::vector<double>{-w * w * std::sin(w * pt[0])};
    throw std::invalid_argument("derivative order must be 1 or 2");
  };

  auto exact = s.exact;
  s.make_eval_grid = [exact]() {
    EvalGrid grid;
    grid.points = uniform_grid_1d(0.0, 1.0, 1000);
    for (const auto& pt : grid.points) grid.exact.push_back(exact(pt));
    return grid;
  };
  return s;
}

// ---------------------------------------------------------------------------
// Composite heat transfer: piecewise conductivity a(x) = {1, k}, first-order
// system u, sigma with sigma = -a u_x, d sigma/dx = f.

ProblemSpec composite_heat_spec(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("conductivity ratio k must be positive");
  ProblemSpec s;
  s.name = "composite_heat";
  s.space_dim = 1;
  s.domain = {{0.0, 1.0}};
  s.net = {1, 2, 1, 32, Activation::Sigmoid};
  s.n_interior = 500;
  s.n_dirichlet = 2;
  s.epochs = 20000;
  s.has_flux_output = true;

  s.interior = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                  std::span<const std::int32_t> data) {
    auto& p = ctx.probe({coords[0]});
    InteriorTerms terms;
    terms.data_residual = p.d(1, 0, 1) - ctx.graph.expr(data[0]);
    terms.flux_constraint = p.u(1) + ctx.graph.expr(data[1]) * p.d(0, 0, 1);
    return terms;
  };
  // Source consistent with the piecewise-quadratic exact solution; the flux
  // is continuous across the interface and both branches satisfy sigma_x = f.
  s.interior_data = [k](std::span<const double> pt) {
    double x = pt[0];
    double f = x < 0.5 ? 8.0 * k * (3.0 * x - 1.0) : 4.0 * k * (k + 1.0);
    double a = x < 0.5 ? 1.0 : k;
    return std::vector<double>{f, a};
  };

  s.dirichlet = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                   std::span<const std::int32_t> data) {
    auto& p = ctx.probe({coords[0]});
    return p.u(0) - ctx.graph.expr(data[0]);
  };
  s.dirichlet_data = [](std::span<const double>) { return std::vector<double>{0.0}; };

  s.exact = [k](std::span<const double> pt) {
    double x = pt[0];
    if (x < 0.5) {
      double u = 4.0 * k * x * x * (1.0 - x);
      double ux = 4.0 * k * (2.0 * x - 3.0 * x * x);
      return std::vector<double>{u, -ux};  // a = 1
    }
    double u = (2.0 * (k + 1.0) * x - 1.0) * (1.0 - x);
    double ux = 2.0 * (k + 1.0) * (1.0 - 2.0 * x) + 1.0;
    return std::vector<double>{u, -k * ux};
  };
  s.exact_deriv = [k](std::span<const double> pt, int coord, int order) {
    if (coord != 0 || order != 1)
      throw std::invalid_argument("composite_heat provides first x-derivatives only");
    double x = pt[0];
    if (x < 0.5) {
      double ux = 4.0 * k * (2.0 * x - 3.0 * x * x);
      double sx = -4.0 * k * (2.0 - 6.0 * x);
      return std::vector<double>{ux, sx};
    }
    double ux = 2.0 * (k + 1.0) * (1.0 - 2.0 * x) + 1.0;
    double sx = 4.0 * k * (k + 1.0);
    return std::vector<double>{ux, sx};
  };

  auto exact = s.exact;
  s.make_eval_grid = [exact]() {
    EvalGrid grid;
    grid.points = uniform_grid_1d(0.0, 1.0, 1000);
    for (const auto& pt : grid.points) grid.exact.push_back(exact(pt));
    return grid;
  };
  return s;
}

// ---------------------------------------------------------------------------
// Convection-diffusion boundary layer: v u_x = alpha u_xx with v = 1,
// first-order system sigma = -alpha u_x.

double convection_diffusion_exact(double x, double alpha, double v) {
  // u = (e^{-v x / alpha} - e^{-v/alpha}) / (1 - e^{-v/alpha}) - 1/2, written
  // so the denominator never cancels for small alpha.
  double denom = -std::expm1(-v / alpha);
  return (std::exp(-v * x / alpha) - std::exp(-v / alpha)) / denom - 0.5;
}

double convection_diffusion_exact_deriv(double x, double alpha, double v) {
  double denom = -std::expm1(-v / alpha);
  return -(v / alpha) * std::exp(-v * x / alpha) / denom;
}

ProblemSpec convection_diffusion_spec(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("diffusivity alpha must lie in (0, 1]");
  ProblemSpec s;
  s.name = "convection_diffusion";
  s.space_dim = 1;
  s.domain = {{0.0, 1.0}};
  s.net = {1, 2, 4, 20, Activation::Tanh};
  s.n_interior = 2048;
  s.n_dirichlet = 2;
  s.epochs = 2000;
  s.has_flux_output = true;

  const double v = 1.0;
  // The flux constraint carries alpha per point so one compiled graph serves
  // any diffusivity.
  s.interior_data = [alpha](std::span<const double>) { return std::vector<double>{alpha}; };
  s.interior = [v](BuildCtx& ctx, std::span<const std::int32_t> coords,
                   std::span<const std::int32_t> data) {
    auto& p = ctx.probe({coords[0]});
    InteriorTerms terms;
    terms.data_residual = v * p.d(0, 0, 1) - p.d(1, 0, 1);
    terms.flux_constraint = p.u(1) + ctx.graph.expr(data[0]) * p.d(0, 0, 1);
    return terms;
  };

  s.dirichlet = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                   std::span<const std::int32_t> data) {
    auto& p = ctx.probe({coords[0]});
    return p.u(0) - ctx.graph.expr(data[0]);
  };
  s.dirichlet_data = [alpha, v](std::span<const double> pt) {
    return std::vector<double>{convection_diffusion_exact(pt[0], alpha, v)};
  };

  s.exact = [alpha, v](std::span<const double> pt) {
    double ux = convection_diffusion_exact_deriv(pt[0], alpha, v);
    return std::vector<double>{convection_diffusion_exact(pt[0], alpha, v), -alpha * ux};
  };
  s.exact_deriv = [alpha, v](std::span<const double> pt, int coord, int order) {
    if (coord != 0 || order != 1)
      throw std::invalid_argument("convection_diffusion provides first x-derivatives only");
    double x = pt[0];
    double ux = convection_diffusion_exact_deriv(x, alpha, v);
    // sigma_x = -alpha u_xx = v u_x for the homogeneous equation.
    return std::vector<double>{ux, v * ux};
  };

  auto exact = s.exact;
  s.make_eval_grid = [exact]() {
    EvalGrid grid;
    grid.points = uniform_grid_1d(0.0, 1.0, 1000);
    for (const auto& pt : grid.points) grid.exact.push_back(exact(pt));
    return grid;
  };
  return s;
}

// ---------------------------------------------------------------------------
// Reaction-diffusion (Fisher): u_t = nu u_xx + rho u (1 - u) on [0,2pi]x[0,1],
// periodic in x, Gaussian initial hump. Entire PDE residual is treated as an
// equality constraint; there is no data-fit term.

namespace {
double rd_initial(double x) {
  double s = kPi / 4.0;
  double z = (x - kPi) / s;
  return std::exp(-0.5 * z * z);
}
}  // namespace

ProblemSpec reaction_diffusion_spec() {
  ProblemSpec s;
  s.name = "reaction_diffusion";
  s.space_dim = 2;
  s.domain = {{0.0, 2.0 * kPi}, {0.0, 1.0}};
  s.periodic_x = true;
  s.net = {2, 1, 4, 50, Activation::Tanh};
  s.n_interior = 1024;
  s.n_dirichlet = 128;
  s.n_neumann = 128;
  s.n_initial = 128;
  s.epochs = 500;

  const double nu = 6.0, rho = 5.0;
  s.interior = [nu, rho](BuildCtx& ctx, std::span<const std::int32_t> coords,
                         std::span<const std::int32_t>) {
    auto& p = ctx.probe({coords[0], coords[1]});
    InteriorTerms terms;
    Expr u = p.u(0);
    terms.flux_constraint = p.d(0, 1, 1) - nu * p.d(0, 0, 2) - rho * u * (1.0 - u);
    return terms;
  };

  // Periodic value matching u(0,t) = u(2pi,t); coords carry only t.
  s.dirichlet = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                   std::span<const std::int32_t>) {
    auto x0 = ctx.graph.leaf(0.0);
    auto x1 = ctx.graph.leaf(2.0 * kPi);
    auto& a = ctx.probe({x0, coords[0]});
    auto& b = ctx.probe({x1, coords[0]});
    return a.u(0) - b.u(0);
  };

  // Periodic slope matching u_x(0,t) = u_x(2pi,t).
  s.neumann = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                 std::span<const std::int32_t>) {
    auto x0 = ctx.graph.leaf(0.0);
    auto x1 = ctx.graph.leaf(2.0 * kPi);
    auto& a = ctx.probe({x0, coords[0]});
    auto& b = ctx.probe({x1, coords[0]});
    return a.d(0, 0, 1) - b.d(0, 0, 1);
  };

  s.initial = [](BuildCtx& ctx, std::span<const std::int32_t> coords,
                 std::span<const std::int32_t> data) {
    auto t0 = ctx.graph.leaf(0.0);
    auto& p = ctx.probe({coords[0], t0});
    return p.u(0) - ctx.graph.expr(data[0]);
  };
  s.initial_data = [](std::span<const double> pt) { return std::vector<double>{rd_initial(pt[0])}; };

  s.make_eval_grid = []() {
    const ReferenceField& ref = reaction_diffusion_reference();
    EvalGrid grid;
    // 256 x-points (every other reference column) by all 101 time slices.
    for (int it = 0; it < ref.nt; ++it)
      for (int ix = 0; ix < ref.nx; ix += 2) {
        grid.points.push_back({ref.x[ix], ref.t[it]});
        grid.exact.push_back({ref.at(it, ix)});
      }
    return grid;
  };
  return s;
}

ProblemSpec problem_by_name(const std::string& name, double k, double alpha) {
  if (name == "poisson1d") return poisson1d_spec();
  if (name == "composite_heat") return composite_heat_spec(k);
  if (name == "convection_diffusion") return convection_diffusion_spec(alpha);
  if (name == "reaction_diffusion") return reaction_diffusion_spec();
  throw std::invalid_argument("unknown problem: " + name);
}

// ---------------------------------------------------------------------------
// Strang-splitting reference for the reaction-diffusion benchmark.

ReferenceField reference_reaction_diffusion(int nx, int nt, int nt_out, double nu, double rho,
                                            const std::function<double(double)>& initial) {
  if (nx < 2 || (nx & (nx - 1)) != 0) throw std::invalid_argument("nx must be a power of two");
  if (nt_out < 2 || nt % (nt_out - 1) != 0)
    throw std::invalid_argument("nt must be divisible by nt_out - 1");
  const double dt = 1.0 / nt;
  const int stride = nt / (nt_out - 1);

  ReferenceField field;
  field.nx = nx;
  field.nt = nt_out;
  field.x.resize(nx);
  field.t.resize(nt_out);
  field.values.resize(static_cast<std::size_t>(nt_out) * nx);
  for (int i = 0; i < nx; ++i) field.x[i] = 2.0 * kPi * i / nx;
  for (int j = 0; j < nt_out; ++j) field.t[j] = static_cast<double>(j) / (nt_out - 1);
  {
    std::ostringstream os;
    os << "strang_splitting nx=" << nx << " nt=" << nt << " nu=" << nu << " rho=" << rho;
    field.provenance = os.str();
  }

  std::vector<double> u(nx);
  for (int i = 0; i < nx; ++i) u[i] = initial ? initial(field.x[i]) : rd_initial(field.x[i]);

  fftw_complex* spec = fftw_alloc_complex(nx / 2 + 1);
  double* buf = fftw_alloc_real(nx);
  fftw_plan fwd = fftw_plan_dft_r2c_1d(nx, buf, spec, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_c2r_1d(nx, spec, buf, FFTW_ESTIMATE);

  // Exact logistic flow for u' = rho u (1 - u) over a half step.
  const double growth = std::exp(rho * dt / 2.0);
  auto react_half = [&](std::vector<double>& w) {
    for (double& v : w) {
      double g = v * growth;
      v = g / (g + (1.0 - v));
    }
  };
  // Exact heat flow in Fourier space over a full step; modes on [0,2pi] have
  // integer wavenumbers.
  std::vector<double> decay(nx / 2 + 1);
  for (int m = 0; m <= nx / 2; ++m) decay[m] = std::exp(-nu * m * m * dt) / nx;
  auto diffuse_full = [&](std::vector<double>& w) {
    std::copy(w.begin(), w.end(), buf);
    fftw_execute(fwd);
    for (int m = 0; m <= nx / 2; ++m) {
      spec[m][0] *= decay[m];
      spec[m][1] *= decay[m];
    }
    fftw_execute(bwd);
    std::copy(buf, buf + nx, w.begin());
  };

  std::copy(u.begin(), u.end(), field.values.begin());
  for (int step = 1; step <= nt; ++step) {
    react_half(u);
    diffuse_full(u);
    react_half(u);
    if (step % stride == 0)
      std::copy(u.begin(), u.end(), field.values.begin() + static_cast<std::size_t>(step / stride) * nx);
  }

  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  fftw_free(spec);
  fftw_free(buf);
  return field;
}

const ReferenceField& reaction_diffusion_reference() {
  static const ReferenceField field = reference_reaction_diffusion(512, 10000, 101);
  return field;
}

void write_reference_csv(const ReferenceField& field, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(17);
  os << "# " << field.provenance << '\n';
  os << "t,x,u\n";
  for (int it = 0; it < field.nt; ++it)
    for (int ix = 0; ix < field.nx; ++ix)
      os << field.t[it] << ',' << field.x[ix] << ',' << field.at(it, ix) << '\n';
}

ReferenceField read_reference_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  ReferenceField field;
  std::string line;
  std::vector<double> ts, xs, us;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      field.provenance = line.substr(line.find_first_not_of("# "));
      continue;
    }
    if (line.rfind("t,", 0) == 0) continue;
    std::istringstream ls(line);
    double t, x, u;
    char c1, c2;
    if (!(ls >> t >> c1 >> x >> c2 >> u)) throw std::runtime_error("malformed row in " + path);
    ts.push_back(t);
    xs.push_back(x);
    us.push_back(u);
  }
  if (us.empty()) throw std::runtime_error("no data rows in " + path);
  // Row-major [it][ix]: count the columns of the first time slice.
  std::size_t nx = 1;
  while (nx < ts.size() && ts[nx] == ts[0]) ++nx;
  if (ts.size() % nx != 0) throw std::runtime_error("ragged grid in " + path);
  field.nx = static_cast<int>(nx);
  field.nt = static_cast<int>(ts.size() / nx);
  field.x.assign(xs.begin(), xs.begin() + nx);
  for (int it = 0; it < field.nt; ++it) field.t.push_back(ts[static_cast<std::size_t>(it) * nx]);
  field.values = std::move(us);
  return field;
}

// ---------------------------------------------------------------------------
// Condition numbers.

std::vector<double> condition_number(const std::function<double(double)>& G,
                                     const std::function<double(double)>& Gp,
                                     std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    double g = G(x);
    if (g == 0.0) {
      std::cerr << "condition_number: skipping x=" << x << " where G(x)=0\n";
      continue;
    }
    out.push_back(std::abs(Gp(x)) * std::abs(x) / std::abs(g));
  }
  return out;
}

double condition_number_vector(const std::function<double(double)>& G,
                               const std::function<double(double)>& Gp,
                               std::span<const double> xs) {
  double ng = 0.0, ngp = 0.0, nx = 0.0;
  for (double x : xs) {
    double g = G(x), gp = Gp(x);
    ng += g * g;
    ngp += gp * gp;
    nx += x * x;
  }
  if (ng == 0.0) throw std::invalid_argument("condition number undefined: ||G|| = 0");
  return std::sqrt(ngp) * std::sqrt(nx) / std::sqrt(ng);
}

double convection_diffusion_condition(double alpha) {
  std::vector<double> xs;
  for (int i = 0; i < 100; ++i) xs.push_back(i / 99.0);
  auto G = [alpha](double x) { return convection_diffusion_exact(x, alpha); };
  auto Gp = [alpha](double x) { return convection_diffusion_exact_deriv(x, alpha); };
  return condition_number_vector(G, Gp, xs);
}

// ---------------------------------------------------------------------------
// Self-consistency gate.

double ConsistencyReport::max_all() const {
  return std::max({data_residual, flux_constraint, dirichlet, neumann, initial});
}

namespace {

// Builds one family residual at one point against the exact solution and
// returns |residual|.
double exact_residual(const ProblemSpec& spec, const ConstraintBuilder& builder,
                      const std::vector<double>& coords, const PointFn& data_fn) {
  Graph g;
  std::vector<std::int32_t> coord_ids, data_ids;
  for (double c : coords) coord_ids.push_back(g.leaf(c));
  if (data_fn) {
    std::vector<double> full = coords;
    for (double d : data_fn(full)) data_ids.push_back(g.leaf(d));
  }
  ExactBuildCtx ctx(g, spec);
  Expr r = builder(ctx, coord_ids, data_ids);
  return std::abs(g.value(r.id));
}

}  // namespace

ConsistencyReport self_consistency(const ProblemSpec& spec, int n_points) {
  ConsistencyReport report;

  if (!spec.exact) {
    // Reference-field problems: check the field's boundary/initial structure.
    const ReferenceField& ref = reaction_diffusion_reference();
    for (int ix = 0; ix < ref.nx; ++ix)
      report.initial = std::max(report.initial, std::abs(ref.at(0, ix) - rd_initial(ref.x[ix])));
    // The spectral solver is periodic by construction; verify the stored grid
    // covers [0, 2pi) exactly once so column 0 doubles as x = 2pi.
    report.dirichlet = std::abs(ref.x.front());
    report.neumann = std::abs(ref.x.back() + ref.x[1] - 2.0 * kPi);
    return report;
  }

  auto interior_points = sobol(n_points, spec.space_dim, 1);
  for (const auto& unit : interior_points) {
    std::vector<double> pt(unit.size());
    for (std::size_t j = 0; j < unit.size(); ++j)
      pt[j] = spec.domain[j][0] + unit[j] * (spec.domain[j][1] - spec.domain[j][0]);

    Graph g;
    std::vector<std::int32_t> coord_ids, data_ids;
    for (double c : pt) coord_ids.push_back(g.leaf(c));
    if (spec.interior_data)
      for (double d : spec.interior_data(pt)) data_ids.push_back(g.leaf(d));
    ExactBuildCtx ctx(g, spec);
    InteriorTerms terms = spec.interior(ctx, coord_ids, data_ids);
    if (terms.data_residual)
      report.data_residual = std::max(report.data_residual, std::abs(g.value(terms.data_residual->id)));
    if (terms.flux_constraint)
      report.flux_constraint =
          std::max(report.flux_constraint, std::abs(g.value(terms.flux_constraint->id)));
  }

  if (spec.dirichlet && spec.space_dim == 1)
    for (double xb : {spec.domain[0][0], spec.domain[0][1]})
      report.dirichlet = std::max(
          report.dirichlet, exact_residual(spec, spec.dirichlet, {xb}, spec.dirichlet_data));

  return report;
}

}  // namespace pdelearn
