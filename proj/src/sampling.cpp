#include "pdelearn/sampling.hpp"

#include <bit>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "pdelearn/problems.hpp"

namespace pdelearn {

namespace {

// Joe-Kuo direction numbers for dimensions 2..8 (dimension 1 is the van der
// Corput sequence).
struct SobolDim {
  int s;
  unsigned a;
  unsigned m[5];
};
constexpr SobolDim kDims[7] = {
    {1, 0, {1}},          {2, 1, {1, 3}},       {3, 1, {1, 3, 1}}, {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}}, {4, 4, {1, 3, 5, 13}}, {5, 2, {1, 1, 5, 5, 17}},
};
constexpr int kBits = 32;

std::vector<std::uint32_t> direction_numbers(int dim_index) {
  std::vector<std::uint32_t> v(kBits);
  if (dim_index == 0) {
    for (int k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
    return v;
  }
  const SobolDim& d = kDims[dim_index - 1];
  for (int k = 0; k < d.s; ++k) v[k] = d.m[k] << (kBits - 1 - k);
  for (int k = d.s; k < kBits; ++k) {
    v[k] = v[k - d.s] ^ (v[k - d.s] >> d.s);
    for (int i = 1; i < d.s; ++i)
      if ((d.a >> (d.s - 1 - i)) & 1u) v[k] ^= v[k - i];
  }
  return v;
}

}  // namespace

std::vector<std::vector<double>> sobol(int n, int dim, int skip) {
  if (dim < 1 || dim > 8) throw std::invalid_argument("sobol supports 1 <= dim <= 8");
  if (n < 0 || skip < 0) throw std::invalid_argument("sobol counts must be non-negative");
  std::vector<std::vector<std::uint32_t>> v(dim);
  for (int j = 0; j < dim; ++j) v[j] = direction_numbers(j);
  std::vector<std::uint32_t> x(dim, 0);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  const double scale = 1.0 / 4294967296.0;  // 2^-32
  // Gray-code recurrence; point 0 is the all-zeros point.
  for (long i = 0; i < static_cast<long>(skip) + n; ++i) {
    if (i >= skip) {
      std::vector<double> pt(dim);
      for (int j = 0; j < dim; ++j) pt[j] = x[j] * scale;
      out.push_back(std::move(pt));
    }
    int c = std::countr_zero(static_cast<unsigned long>(i + 1));
    for (int j = 0; j < dim; ++j) x[j] ^= v[j][c];
  }
  return out;
}

CollocationSet sample_problem(const ProblemSpec& spec, std::uint64_t /*seed*/) {
  if (spec.domain.empty()) throw std::invalid_argument("problem has no domain bounds");
  CollocationSet set;

  auto rescale = [&](const std::vector<double>& unit) {
    std::vector<double> pt(unit.size());
    for (std::size_t j = 0; j < unit.size(); ++j)
      pt[j] = spec.domain[j][0] + unit[j] * (spec.domain[j][1] - spec.domain[j][0]);
    return pt;
  };

  // Skip the all-zeros first point so no interior sample sits on a facet.
  for (const auto& unit : sobol(spec.n_interior, spec.space_dim, 1)) {
    PointData p;
    p.coords = rescale(unit);
    if (spec.interior_data) p.data = spec.interior_data(p.coords);
    set.interior.push_back(std::move(p));
  }

  if (spec.space_dim == 1) {
    if (spec.n_dirichlet != 2)
      throw std::invalid_argument("1d problems use exactly the two endpoint Dirichlet points");
    for (double xb : {spec.domain[0][0], spec.domain[0][1]}) {
      PointData p;
      p.coords = {xb};
      if (spec.dirichlet_data) p.data = spec.dirichlet_data(p.coords);
      set.dirichlet.push_back(std::move(p));
    }
  } else if (spec.periodic_x) {
    // t values are sampled once and shared by the value and derivative
    // matching constraints; the two facets are coupled pointwise.
    auto tvals = sobol(spec.n_dirichlet, 1, 1);
    for (const auto& tv : tvals) {
      double t = spec.domain[1][0] + tv[0] * (spec.domain[1][1] - spec.domain[1][0]);
      PointData p;
      p.coords = {t};
      if (spec.dirichlet_data) p.data = spec.dirichlet_data(p.coords);
      set.dirichlet.push_back(p);
      if (spec.n_neumann > 0) {
        PointData q;
        q.coords = {t};
        if (spec.neumann_data) q.data = spec.neumann_data(q.coords);
        set.neumann.push_back(std::move(q));
      }
    }
    auto xvals = sobol(spec.n_initial, 1, 1 + spec.n_dirichlet);
    for (const auto& xv : xvals) {
      double x = spec.domain[0][0] + xv[0] * (spec.domain[0][1] - spec.domain[0][0]);
      PointData p;
      p.coords = {x};
      if (spec.initial_data) p.data = spec.initial_data(p.coords);
      set.initial.push_back(std::move(p));
    }
  } else {
    throw std::invalid_argument("unsupported domain layout");
  }
  return set;
}

namespace {
void write_rows(std::ostream& os, const char* tag, const std::vector<PointData>& pts) {
  for (const auto& p : pts) {
    os << tag;
    for (double c : p.coords) os << ',' << c;
    for (double d : p.data) os << ',' << d;
    os << '\n';
  }
}
}  // namespace

void write_collocation_csv(const CollocationSet& points, std::ostream& os) {
  os << "region,coords...,targets...\n";
  write_rows(os, "interior", points.interior);
  write_rows(os, "dirichlet", points.dirichlet);
  write_rows(os, "neumann", points.neumann);
  write_rows(os, "initial", points.initial);
}

void write_collocation_csv(const CollocationSet& points, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(17);
  write_collocation_csv(points, os);
}

}  // namespace pdelearn
