#include <cmath>
#include <vector>

#include "doctest.h"
#include "pdelearn/alm.hpp"
#include "pdelearn/metrics_io.hpp"

using namespace pdelearn;

TEST_CASE("huber distance branches") {
  CHECK(huber_value(0.0) == 0.0);
  CHECK(huber_value(0.5) == doctest::Approx(0.125));
  CHECK(huber_value(-0.5) == doctest::Approx(0.125));
  CHECK(huber_value(2.0) == doctest::Approx(1.5));
  CHECK(huber_value(-2.0) == doctest::Approx(1.5));
  CHECK(huber_value(0.1, {0.05}) == doctest::Approx(0.05 * (0.1 - 0.025)));
  CHECK_THROWS(huber_value(1.0, {0.0}));
  CHECK_THROWS(huber_value(std::nan("")));
}

TEST_CASE("multiplier updates follow the dual-ascent rules") {
  MultiplierSet m;
  m.lambda_F = {1.0};
  m.lambda_B = {0.0, 0.5};
  m.mu = 2.0;
  ConstraintValues phi;
  phi.phi_F = {0.25};
  phi.phi_B = {0.3, 0.0};
  update_multipliers(m, phi);
  CHECK(m.lambda_F[0] == doctest::Approx(1.25));  // no mu factor on the flux family
  CHECK(m.lambda_B[0] == doctest::Approx(0.6));   // mu * phi
  CHECK(m.lambda_B[1] == doctest::Approx(0.5));   // phi = 0 leaves it unchanged

  ConstraintValues bad;
  bad.phi_F = {-0.1};
  bad.phi_B = {0.0, 0.0};
  CHECK_THROWS(update_multipliers(m, bad));
  ConstraintValues mismatched;
  mismatched.phi_F = {0.0, 0.0};
  CHECK_THROWS(update_multipliers(m, mismatched));
}

TEST_CASE("penalty doubles until the cap") {
  MultiplierSet m;
  m.mu = 1.0;
  m.mu_max = 1e4;
  update_penalty(m);
  CHECK(m.mu == 2.0);
  m.mu = 8192.0;
  update_penalty(m);
  CHECK(m.mu == 1e4);
  update_penalty(m);
  CHECK(m.mu == 1e4);  // fixed point
  m.mu = 0.5;
  CHECK_THROWS(update_penalty(m));
}

TEST_CASE("objective matches an independently summed evaluation") {
  // Independent oracle: evaluate every residual with the scalar graph path
  // (one graph per point) and sum the augmented Lagrangian by hand.
  auto spec = composite_heat_spec(2.0);
  spec.n_interior = 40;
  auto points = sample_problem(spec, 0);
  CompiledObjective obj(spec, points, {});
  auto theta = init_xavier(spec.net, 17);
  MultiplierSet m = obj.make_multipliers(100.0);
  for (std::size_t i = 0; i < m.lambda_F.size(); ++i) m.lambda_F[i] = 0.01 * i;
  for (std::size_t i = 0; i < m.lambda_B.size(); ++i) m.lambda_B[i] = 0.2 + 0.1 * i;
  m.mu = 4.0;

  std::vector<double> grad;
  double loss = obj.evaluate(theta, m, grad);

  double expected = 0.0;
  for (std::size_t p = 0; p < points.interior.size(); ++p) {
    const auto& pt = points.interior[p];
    Graph g;
    std::vector<std::int32_t> tids;
    for (double v : theta) tids.push_back(g.leaf(v));
    std::int32_t x = g.leaf(pt.coords[0]);
    auto outs = forward_graph(g, spec.net, tids, std::span<const std::int32_t>(&x, 1));
    double ux = g.value(g.input_derivative(outs[0], x, 1));
    double sx = g.value(g.input_derivative(outs[1], x, 1));
    double D = sx - pt.data[0];
    double F = g.value(outs[1]) + pt.data[1] * ux;
    expected += D * D + m.lambda_F[p] * huber_value(F) + 0.5 * huber_value(F) * huber_value(F);
  }
  for (std::size_t p = 0; p < points.dirichlet.size(); ++p) {
    const auto& pt = points.dirichlet[p];
    double u = forward_values(spec.net, theta, pt.coords)[0];
    double B = u - pt.data[0];
    expected += m.lambda_B[p] * huber_value(B) + 0.5 * m.mu * huber_value(B) * huber_value(B);
  }
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));

  // Component bookkeeping adds up.
  const auto& c = obj.components();
  CHECK(c.total == loss);
  CHECK(c.data + c.flux + c.dirichlet + c.neumann + c.initial == doctest::Approx(loss));
  CHECK(c.neumann == 0.0);
  CHECK(c.initial == 0.0);

  // Constraint distances returned for the dual update are the huber values.
  const auto& cv = obj.constraint_values();
  REQUIRE(cv.phi_F.size() == points.interior.size());
  REQUIRE(cv.phi_B.size() == 2);
  for (double v : cv.phi_F) CHECK(v >= 0.0);
}

TEST_CASE("objective gradient matches central finite differences") {
  auto spec = composite_heat_spec(2.0);
  spec.n_interior = 24;
  auto points = sample_problem(spec, 0);
  CompiledObjective obj(spec, points, {});
  auto theta = init_xavier(spec.net, 5);
  MultiplierSet m = obj.make_multipliers(100.0);
  for (auto& v : m.lambda_F) v = 0.05;
  for (auto& v : m.lambda_B) v = 0.3;
  m.mu = 8.0;

  std::vector<double> grad;
  obj.evaluate(theta, m, grad);
  std::vector<double> scratch;
  for (int i = 0; i < static_cast<int>(theta.size()); i += 7) {  // 19 coordinates
    double h = 1e-6;
    auto tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    double fp = obj.evaluate(tp, m, scratch);
    double fm = obj.evaluate(tm, m, scratch);
    double fd = (fp - fm) / (2 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("with zero multipliers and zero penalty the objective is the data term") {
  auto spec = poisson1d_spec();
  spec.n_interior = 32;
  auto points = sample_problem(spec, 0);
  CompiledObjective obj(spec, points, {});
  auto theta = init_xavier(spec.net, 2);
  MultiplierSet m = obj.make_multipliers(100.0);
  m.mu = 0.0;  // boundary penalty off

  std::vector<double> grad;
  double loss = obj.evaluate(theta, m, grad);
  double data = 0.0;
  for (const auto& pt : points.interior) {
    Graph g;
    std::vector<std::int32_t> tids;
    for (double v : theta) tids.push_back(g.leaf(v));
    std::int32_t x = g.leaf(pt.coords[0]);
    auto outs = forward_graph(g, spec.net, tids, std::span<const std::int32_t>(&x, 1));
    double D = g.value(g.input_derivative(outs[0], x, 2)) - pt.data[0];
    data += D * D;
  }
  CHECK(loss == doctest::Approx(data).epsilon(1e-12));
  CHECK(obj.components().flux == 0.0);
}

TEST_CASE("free objective function agrees with the compiled form") {
  auto spec = poisson1d_spec();
  spec.n_interior = 16;
  auto points = sample_problem(spec, 0);
  auto theta = init_xavier(spec.net, 9);
  CompiledObjective obj(spec, points, {});
  MultiplierSet m = obj.make_multipliers(100.0);
  std::vector<double> grad;
  double loss = obj.evaluate(theta, m, grad);
  auto [loss2, grad2] = objective(theta, m, spec, points, {});
  CHECK(loss == loss2);
  CHECK(grad == grad2);
}

TEST_CASE("training smoke run: mu trace, multiplier monotonicity, reproducibility") {
  auto spec = poisson1d_spec();
  spec.n_interior = 64;
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 3;
  cfg.mu_max = 1e4;

  auto rec = train(spec, cfg);
  REQUIRE_FALSE(rec.failed);
  REQUIRE(static_cast<int>(rec.history.size()) == 30);

  // mu doubles each epoch until the cap: used values 1,2,4,...
  double expect = 1.0;
  for (const auto& row : rec.history) {
    CHECK(row.mu == expect);
    expect = std::min(2.0 * expect, 1e4);
    CHECK(row.mu_next == expect);
  }

  // Boundary multipliers are non-decreasing across epochs.
  double prev_max = -1.0;
  for (const auto& row : rec.history) {
    CHECK(row.max_lambda_B >= prev_max);
    prev_max = row.max_lambda_B;
  }
  CHECK(prev_max > 0.0);

  // Bit-identical loss trace on a rerun.
  auto rec2 = train(spec, cfg);
  REQUIRE(rec2.history.size() == rec.history.size());
  for (std::size_t i = 0; i < rec.history.size(); ++i) {
    CHECK(rec.history[i].loss_total == rec2.history[i].loss_total);
    CHECK(rec.history[i].rel_l2_u == rec2.history[i].rel_l2_u);
  }
  CHECK(rec.theta == rec2.theta);

  // The short run already improves the solution substantially.
  CHECK(rec.final_row().rel_l2_u < rec.history.front().rel_l2_u);
}

TEST_CASE("train validates its configuration") {
  auto spec = poisson1d_spec();
  TrainConfig cfg;
  cfg.epochs = 0;
  spec.epochs = 0;
  CHECK_THROWS(train(spec, cfg));
}

TEST_CASE("stream seeds decorrelate") {
  CHECK(stream_seed(1, 0) != stream_seed(1, 1));
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
  CHECK(stream_seed(7, 3) == stream_seed(7, 3));
}
