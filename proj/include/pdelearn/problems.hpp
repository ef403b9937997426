#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdelearn/autodiff.hpp"
#include "pdelearn/network.hpp"

namespace pdelearn {

// View of one solution evaluation used by residual/constraint builders.
// Training backs this with a network forward pass; the self-consistency gate
// backs it with the problem's exact solution and its analytic derivatives.
class Probe {
 public:
  virtual ~Probe() = default;
  virtual Expr u(int output) = 0;
  virtual Expr d(int output, int coord, int order) = 0;
};

class BuildCtx {
 public:
  explicit BuildCtx(Graph& g) : graph(g) {}
  virtual ~BuildCtx() = default;
  virtual Probe& probe(std::vector<std::int32_t> coord_nodes) = 0;
  Graph& graph;
};

// BuildCtx backed by a network forward pass; every probe instantiates the
// network on the shared graph at the given coordinate nodes.
class NetBuildCtx : public BuildCtx {
 public:
  NetBuildCtx(Graph& g, const NetworkConfig& net, std::span<const std::int32_t> theta);
  ~NetBuildCtx() override;
  Probe& probe(std::vector<std::int32_t> coord_nodes) override;

 private:
  NetworkConfig net_;
  std::vector<std::int32_t> theta_;
  std::vector<std::unique_ptr<Probe>> probes_;
};

struct InteriorTerms {
  std::optional<Expr> data_residual;    // D, enters as sum of squares
  std::optional<Expr> flux_constraint;  // F, enters via multipliers + 1/2 penalty
};

using InteriorBuilder = std::function<InteriorTerms(
    BuildCtx&, std::span<const std::int32_t> coords, std::span<const std::int32_t> data)>;
using ConstraintBuilder = std::function<Expr(
    BuildCtx&, std::span<const std::int32_t> coords, std::span<const std::int32_t> data)>;
using PointFn = std::function<std::vector<double>(std::span<const double> pt)>;

// Space-time field from an independent reference solver, row-major [it][ix].
struct ReferenceField {
  int nx = 0;
  int nt = 0;  // output time slices
  std::vector<double> x, t;
  std::vector<double> values;
  std::string provenance;

  double at(int it, int ix) const { return values[static_cast<std::size_t>(it) * nx + ix]; }
};

struct EvalGrid {
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> exact;  // per point: u (and sigma when present)
};

struct ProblemSpec {
  std::string name;
  int space_dim = 1;  // coordinates per collocation point
  std::vector<std::array<double, 2>> domain;
  bool periodic_x = false;  // 2d space-time rectangle with periodic x facets
  NetworkConfig net;
  int n_interior = 0, n_dirichlet = 0, n_neumann = 0, n_initial = 0;
  int epochs = 0;
  double mu_max = 1e4;

  InteriorBuilder interior;
  ConstraintBuilder dirichlet, neumann, initial;

  PointFn interior_data;   // coefficient/source values carried per point
  PointFn dirichlet_data;  // g_D
  PointFn neumann_data;    // g_N
  PointFn initial_data;    // h

  PointFn exact;  // u (and sigma for two-output problems); null when only a
                  // reference field exists
  std::function<std::vector<double>(std::span<const double> pt, int coord, int order)>
      exact_deriv;  // analytic derivatives of exact, per output
  bool has_flux_output = false;

  std::function<EvalGrid()> make_eval_grid;
  std::shared_ptr<ReferenceField> reference;  // set for reaction-diffusion
};

ProblemSpec poisson1d_spec();
ProblemSpec composite_heat_spec(double k = 2.0);
ProblemSpec convection_diffusion_spec(double alpha);
ProblemSpec reaction_diffusion_spec();
ProblemSpec problem_by_name(const std::string& name, double k, double alpha);

// Strang splitting on [0,2pi]x[0,1]: closed-form logistic reaction half-steps
// around exact Fourier-space diffusion steps. nx must be a power of two.
ReferenceField reference_reaction_diffusion(
    int nx, int nt, int nt_out = 101, double nu = 6.0, double rho = 5.0,
    const std::function<double(double)>& initial = nullptr);

// Cached reference for the benchmark configuration (nx=512, nt=10000).
const ReferenceField& reaction_diffusion_reference();

void write_reference_csv(const ReferenceField& field, const std::string& path);
ReferenceField read_reference_csv(const std::string& path);

// Pointwise relative condition number |G'(x)| |x| / |G(x)|; samples where
// G(x) = 0 are skipped with a warning on stderr.
std::vector<double> condition_number(const std::function<double(double)>& G,
                                     const std::function<double(double)>& Gp,
                                     std::span<const double> xs);

// Vector-norm form: ||G'(x)|| ||x|| / ||G(x)|| over the whole sample vector.
double condition_number_vector(const std::function<double(double)>& G,
                               const std::function<double(double)>& Gp,
                               std::span<const double> xs);

// kappa of the convection-diffusion solution on a uniform 100-point grid.
double convection_diffusion_condition(double alpha);

// Underflow-safe boundary-layer solution and its derivative.
double convection_diffusion_exact(double x, double alpha, double v = 1.0);
double convection_diffusion_exact_deriv(double x, double alpha, double v = 1.0);

// Max |residual| of each populated operator when the exact solution is
// substituted for the network, evaluated at Sobol points. For the
// reaction-diffusion problem this checks the reference field's periodicity
// and initial-condition consistency instead.
struct ConsistencyReport {
  double data_residual = 0.0;
  double flux_constraint = 0.0;
  double dirichlet = 0.0;
  double neumann = 0.0;
  double initial = 0.0;
  double max_all() const;
};
ConsistencyReport self_consistency(const ProblemSpec& spec, int n_points = 100);

}  // namespace pdelearn
