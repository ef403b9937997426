#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pdelearn {

struct ProblemSpec;

// First n points of the Sobol low-discrepancy sequence in [0,1)^dim after
// skipping `skip` points (the sequence starts at the all-zeros point).
// Supports dim <= 8.
std::vector<std::vector<double>> sobol(int n, int dim, int skip = 0);

struct PointData {
  std::vector<double> coords;
  std::vector<double> data;  // per-family targets (g_D, g_N, h, or coefficients)
};

struct CollocationSet {
  std::vector<PointData> interior;
  std::vector<PointData> dirichlet;
  std::vector<PointData> neumann;
  std::vector<PointData> initial;
};

// Deterministic collocation sets: interior via Sobol rescaled to the domain,
// boundary/initial slices via Sobol on each facet. Fixed for a whole run.
CollocationSet sample_problem(const ProblemSpec& spec, std::uint64_t seed);

// One row per point: region tag, coordinates, target values.
void write_collocation_csv(const CollocationSet& points, std::ostream& os);
void write_collocation_csv(const CollocationSet& points, const std::string& path);

}  // namespace pdelearn
