#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "pdelearn/problems.hpp"

using namespace pdelearn;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("self-consistency gates: exact solutions satisfy every operator") {
  for (const auto& spec :
       {poisson1d_spec(), composite_heat_spec(2.0), convection_diffusion_spec(1e-2)}) {
    auto report = self_consistency(spec, 100);
    INFO(spec.name);
    CHECK(report.max_all() < 1e-9);
  }
}

TEST_CASE("self-consistency gate: reaction-diffusion reference field structure") {
  auto report = self_consistency(reaction_diffusion_spec(), 100);
  CHECK(report.initial < 1e-12);    // t=0 slice equals the Gaussian hump
  CHECK(report.dirichlet < 1e-12);  // grid covers [0, 2pi) exactly
  CHECK(report.neumann < 1e-12);
}

TEST_CASE("poisson exact solution hits the boundary data") {
  auto spec = poisson1d_spec();
  double x0[] = {0.0}, x1[] = {1.0};
  CHECK(std::abs(spec.exact(x0)[0]) < 1e-15);
  CHECK(std::abs(spec.exact(x1)[0]) < 1e-14);
  CHECK(spec.net.param_count() == 481);
}

TEST_CASE("composite heat: continuity, flux matching, and slope jump at the interface") {
  double k = 2.0;
  auto spec = composite_heat_spec(k);
  double eps = 1e-9;
  double xl[] = {0.5 - eps}, xr[] = {0.5 + eps}, x0[] = {0.0}, x1[] = {1.0};
  auto left = spec.exact(xl);
  auto right = spec.exact(xr);
  CHECK(left[0] == doctest::Approx(right[0]).epsilon(1e-7));   // u continuous
  CHECK(left[1] == doctest::Approx(right[1]).epsilon(1e-7));   // sigma continuous
  auto dl = spec.exact_deriv(xl, 0, 1);
  auto dr = spec.exact_deriv(xr, 0, 1);
  CHECK(std::abs(dl[0] - dr[0]) > 0.1);  // u_x jumps
  CHECK(std::abs(spec.exact(x0)[0]) < 1e-15);
  CHECK(std::abs(spec.exact(x1)[0]) < 1e-12);
  CHECK_THROWS(composite_heat_spec(0.0));
}

TEST_CASE("convection-diffusion exact solution is a stable boundary layer") {
  for (double alpha : {1e-1, 1e-2, 1e-3, 1e-4}) {
    CHECK(convection_diffusion_exact(0.0, alpha) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(convection_diffusion_exact(1.0, alpha) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::isfinite(convection_diffusion_exact_deriv(0.0, alpha)));
    // Centered finite-difference check away from the layer edge.
    double x = 3.0 * alpha, h = alpha * 1e-3;
    double fd = (convection_diffusion_exact(x + h, alpha) -
                 convection_diffusion_exact(x - h, alpha)) /
                (2 * h);
    CHECK(convection_diffusion_exact_deriv(x, alpha) == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK_THROWS(convection_diffusion_spec(0.0));
  CHECK_THROWS(convection_diffusion_spec(2.0));
}

TEST_CASE("condition number grows as the boundary layer sharpens") {
  double prev = 0.0;
  for (double alpha : {1e-1, 1e-2, 1e-3, 1e-4}) {
    double kappa = convection_diffusion_condition(alpha);
    CHECK(kappa > prev);
    prev = kappa;
  }
  CHECK(prev > 1e3);  // alpha = 1e-4 is severely ill-conditioned
}

TEST_CASE("pointwise condition number skips roots of G") {
  auto G = [](double x) { return x - 0.5; };
  auto Gp = [](double) { return 1.0; };
  double xs[] = {0.25, 0.5, 0.75};
  auto kappa = condition_number(G, Gp, xs);
  REQUIRE(kappa.size() == 2);  // x = 0.5 skipped
  CHECK(kappa[0] == doctest::Approx(1.0));
  CHECK(kappa[1] == doctest::Approx(3.0));
}

TEST_CASE("splitting oracle: rho = 0 reduces to spectral diffusion") {
  // Mode-one initial data decays by exp(-nu t) exactly.
  double nu = 6.0;
  auto field = reference_reaction_diffusion(256, 1000, 11, nu, 0.0,
                                            [](double x) { return 0.3 * std::sin(x); });
  for (int it = 0; it < field.nt; ++it) {
    double decay = std::exp(-nu * field.t[it]);
    for (int ix = 0; ix < field.nx; ix += 17) {
      CHECK(field.at(it, ix) ==
            doctest::Approx(0.3 * std::sin(field.x[ix]) * decay).epsilon(1e-10));
    }
  }
}

TEST_CASE("splitting oracle: nu = 0 reduces to the logistic closed form") {
  double rho = 5.0;
  auto field = reference_reaction_diffusion(256, 1000, 11, 0.0, rho);
  for (int ix = 0; ix < field.nx; ix += 13) {
    double u0 = field.at(0, ix);
    double g = u0 * std::exp(rho * 1.0);
    CHECK(field.at(10, ix) == doctest::Approx(g / (g + 1.0 - u0)).epsilon(1e-10));
  }
}

TEST_CASE("splitting oracle self-convergence: halved time step moves t=1 by < 1e-6") {
  auto coarse = reference_reaction_diffusion(256, 2000, 11);
  auto fine = reference_reaction_diffusion(256, 4000, 11);
  double diff = 0.0;
  for (int ix = 0; ix < 256; ++ix)
    diff = std::max(diff, std::abs(coarse.at(10, ix) - fine.at(10, ix)));
  CHECK(diff < 1e-6);
  CHECK(diff > 0.0);  // the comparison is not vacuous
}

TEST_CASE("splitting oracle validates its grid") {
  CHECK_THROWS(reference_reaction_diffusion(100, 1000));  // not a power of two
  CHECK_THROWS(reference_reaction_diffusion(256, 1000, 7));  // 1000 % 6 != 0
}

TEST_CASE("reference field round-trips through csv") {
  auto field = reference_reaction_diffusion(64, 100, 5);
  auto path = (std::filesystem::temp_directory_path() / "rd_ref_test.csv").string();
  write_reference_csv(field, path);
  auto back = read_reference_csv(path);
  CHECK(back.nx == field.nx);
  CHECK(back.nt == field.nt);
  CHECK(back.values == field.values);  // 17-digit decimal round trip
  CHECK(back.provenance == field.provenance);
  std::remove(path.c_str());
  CHECK_THROWS(read_reference_csv(path));
}

TEST_CASE("problem lookup by name") {
  CHECK(problem_by_name("poisson1d", 2.0, 1e-2).name == "poisson1d");
  CHECK(problem_by_name("composite_heat", 3.0, 1e-2).name == "composite_heat");
  CHECK(problem_by_name("convection_diffusion", 2.0, 1e-3).name == "convection_diffusion");
  CHECK(problem_by_name("reaction_diffusion", 2.0, 1e-2).name == "reaction_diffusion");
  CHECK_THROWS(problem_by_name("nosuch", 2.0, 1e-2));
}

TEST_CASE("evaluation grids match the stated shapes") {
  CHECK(poisson1d_spec().make_eval_grid().points.size() == 1000);
  auto grid = reaction_diffusion_spec().make_eval_grid();
  CHECK(grid.points.size() == 256 * 101);
  CHECK(grid.points[0].size() == 2);
  // Reference values are bounded: the solution lives in [0, 1].
  for (std::size_t i = 0; i < grid.exact.size(); i += 997) {
    CHECK(grid.exact[i][0] > -1e-6);
    CHECK(grid.exact[i][0] < 1.0 + 1e-6);
  }
}
