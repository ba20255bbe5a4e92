#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "monoeit/fem.hpp"
#include "monoeit/mesh.hpp"
#include "monoeit/monotonicity.hpp"

namespace monoeit {

struct PropertyResult {
  std::string name;
  int checked = 0;
  int failed = 0;
  std::string detail;
  bool passed() const { return checked > 0 && failed == 0; }
};

// Disk mesh whose boundary resolves electrodes for k = 8, 16 and 32 at the coverage.
Mesh electrode_mesh(double h, double coverage = 0.5);

// Random P0 pairs gamma >= gamma_tilde; min eig of R(gamma_tilde) - R(gamma) against
// -1e-9 * norm, plus the interior-energy bounds c0 <= I^T (.) I <= c1 for 10 currents.
PropertyResult check_cem_monotonicity(const Mesh& mesh, int k, int pairs, std::uint64_t seed);

// R(gamma) - R(gamma0) - R'(gamma0)(gamma - gamma0) >= 0 for random gamma >= gamma0
// (convexity of R). `sensitivity_factor` = -1 injects a sign error.
PropertyResult check_linearization_bound(const Mesh& mesh, int k, int trials, std::uint64_t seed,
                                         double sensitivity_factor = 1.0);

// R(c gamma, z / c) = R(gamma, z) / c for c in {0.5, 2, 10}.
PropertyResult check_scaling_law(const Mesh& mesh, int k);

// |min eig S - min eig T| <= ||S - T|| on random symmetric pairs.
PropertyResult check_spectral_continuity(int trials, std::uint64_t seed);

// A >= 0 iff L Q A Q* >= 0 on random symmetric A, half of them PSD by construction.
PropertyResult check_semidefiniteness_transfer(int k, int trials, std::uint64_t seed);

// Difference-quotient remainder ratio between t = 1e-2 and 1e-3 per triangle.
struct FrechetCheck {
  std::vector<int> triangles;
  std::vector<double> ratios;
  PropertyResult result;  // ratio in [8, 12]
};
FrechetCheck check_frechet_derivative(const Mesh& mesh, int k, int triangles, std::uint64_t seed,
                                      double sensitivity_factor = 1.0);

// Processed noisy data must give a symmetric representation; `symmetrize` = false
// feeds the raw noisy voltages instead.
PropertyResult check_data_symmetry(const Mesh& mesh, int k, double sigma, std::uint64_t seed,
                                   bool symmetrize = true);

// Interior-energy bounds for the Neumann model on random conductivities.
PropertyResult check_cm_bounds(const Mesh& mesh, int currents, std::uint64_t seed);

// Zero left and right violations of the sandwich inclusions.
PropertyResult check_sandwich(const SandwichSetup& setup, const std::vector<int>& ks,
                              const std::vector<double>& sigmas,
                              std::vector<SandwichRow>* rows = nullptr);

// Algorithm 1 indicator nondecreasing in alpha and nonincreasing in beta, cellwise.
PropertyResult check_indicator_monotonicity(const std::vector<Mat>& blocks,
                                            const MeasurementMatrix& r0,
                                            const MeasurementMatrix& rdelta,
                                            const TestSetCollection& cells,
                                            const std::vector<double>& alphas,
                                            const std::vector<double>& betas);

struct SelftestOptions {
  double mesh_h = 0.035;
  int k = 16;
  std::uint64_t seed = 1;
  double sensitivity_factor = 1.0;  // -1 negates every sensitivity block
  bool symmetrize_noise = true;
};

std::vector<PropertyResult> run_selftest(const SelftestOptions& options, std::ostream* log);

}  // namespace monoeit
