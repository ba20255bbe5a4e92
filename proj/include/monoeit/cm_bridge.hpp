#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "monoeit/fem.hpp"
#include "monoeit/mesh.hpp"
#include "monoeit/types.hpp"

namespace monoeit {

// p trigonometric current densities on the unit circle, orthonormal in L^2:
// index m < p/2 is cos((m+1) t)/sqrt(pi), the rest sin((m+1-p/2) t)/sqrt(pi).
struct CmCurrentBasis {
  int p = 0;
  static CmCurrentBasis trig(int p);
  double density(int m, double theta) const;
};

/// Neumann problem div(gamma grad u) = 0, gamma du/dn = f with zero boundary mean,
/// P1 on the mesh. The centre node is pinned during the solve and the result
/// shifted to zero boundary mean, using c_i = int_{boundary} phi_i.
class NeumannSystem {
 public:
  NeumannSystem(const Mesh& mesh, const Conductivity& gamma);

  const Mesh& mesh() const { return *mesh_; }
  const Conductivity& conductivity() const { return gamma_; }
  const Vec& boundary_mass() const { return mass_; }

  // Load vector int f phi_i dS (3-point Gauss per boundary edge), made mean-free.
  Vec load(const std::function<double(double)>& f) const;
  Vec solve(const Vec& load) const;

 private:
  const Mesh* mesh_;
  Conductivity gamma_;
  Vec mass_;
  SpMat matrix_;
  struct Factor;
  std::shared_ptr<const Factor> factor_;
};

// N x p matrix of load vectors for the basis densities.
Mat cm_loads(const NeumannSystem& system, const CmCurrentBasis& basis);

// p x p matrix <Lambda(gamma) f_l, f_m>, symmetrised.
Mat cm_forward_nd(const Mesh& mesh, const Conductivity& gamma, const CmCurrentBasis& basis);

// Background CM data at gamma0: ND matrix and the factored derivative blocks
// -int_K grad u_l . grad u_m (same storage as the CEM sensitivities).
struct CmBackground {
  Mat nd;
  Mat potentials;  // N x p
  SensitivityTensor sensitivity;
};

CmBackground cm_background(const Mesh& mesh, const Conductivity& gamma0,
                           const CmCurrentBasis& basis);

/// A_lm = int (gamma0 - beta chi_B) grad u0_l . grad u0_m - data_lm.
Mat cm_linearized_test_matrix(const CmBackground& background, double beta, const TestCell& cell,
                              const Mat& data);

struct CmMonotonicityBounds {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
};

// Energy bounds for <(Lambda(gamma_tilde) - Lambda(gamma)) f, f> on a load vector.
CmMonotonicityBounds cm_monotonicity_bounds(const NeumannSystem& tilde, const NeumannSystem& sys,
                                            const Vec& load);

/// Boundary operators between R^k and functions on a uniform angular grid:
/// Q W = sum W_j chi_j^+, (Q* f)_j = int_{E_j^+} f, L removes the mean,
/// (P f)_j is the mean of f over E_j, Z = diag(z_j / |E_j|).
class ProjectionOperators {
 public:
  ProjectionOperators(int k, double coverage, const Vec& z, int grid = 4096);

  int k() const { return k_; }
  int grid_size() const { return static_cast<int>(theta_.size()); }
  double weight() const { return weight_; }
  const Vec& theta() const { return theta_; }
  const ExtendedElectrodeLayout& extended() const { return extended_; }
  // Quadrature measure of E_j^+.
  const Vec& extended_measure() const { return ext_measure_; }

  Vec sample(const std::function<double(double)>& f) const;
  Vec Q(const Vec& W) const;
  Vec Qstar(const Vec& f) const;
  Mat Qstar(const Mat& columns) const;
  Vec L(const Vec& f) const;
  Vec P(const Vec& f) const;
  Mat Z() const;

  double inner(const Vec& f, const Vec& g) const;
  double norm(const Vec& f) const { return std::sqrt(inner(f, f)); }
  double mean(const Vec& f) const;
  // f_I = sum_j chi_j^+ I_j / |E_j^+|.
  Vec density_of(const Vec& I) const;

 private:
  int k_;
  Vec z_;
  Vec theta_;
  double weight_;
  ExtendedElectrodeLayout extended_;
  std::vector<int> ext_of_;
  std::vector<int> elec_of_;  // -1 in gaps
  Vec ext_measure_;
  Vec elec_length_;
};

// L Q (R - Z) Q* acting on mean-free grid densities.
class CemCmOperator {
 public:
  CemCmOperator(const Mat& r_standard, const ProjectionOperators& ops);
  Vec apply(const Vec& f) const;
  // Matrix <L Q (R - Z) Q* f_l, f_m> for grid-sampled densities (columns).
  Mat gram(const Mat& densities) const;

 private:
  Mat r_minus_z_;
  const ProjectionOperators* ops_;
};

CemCmOperator cem_to_cm_approximation(const MeasurementMatrix& r, const ProjectionOperators& ops);

struct TransferVerdict {
  bool matrix_psd = false;
  bool operator_psd = false;
};

/// Checks A >= 0 (A in the orthonormal frame of R^k_0 given by `frame`) against the
/// quadratic form of L Q A Q* on densities f_I built from the eigenvectors of A,
/// plus `random_samples` random mean-free grid densities.
TransferVerdict semidefiniteness_transfer_check(const Mat& A, const Mat& frame,
                                                const ProjectionOperators& ops,
                                                int random_samples = 16,
                                                std::uint64_t seed = 1);

// ||(Id - Q P) f|| in L^2 of the boundary grid.
double poincare_defect(const ProjectionOperators& ops, const std::function<double(double)>& f);

struct ConvergenceRow {
  int k = 0;
  double h_extended = 0.0;
  double norm_estimate = 0.0;
  double ratio_vs_prev = 0.0;  // NaN for the first row
};

/// Spectral norm of Lambda_h(gamma) - L Q (R(gamma) - Z) Q* on the span of the
/// first 2k trig densities, for each k (strictly increasing). The mesh boundary
/// must resolve every electrode layout.
std::vector<ConvergenceRow> convergence_sweep(const Mesh& mesh, const Conductivity& gamma,
                                              std::span<const int> ks, double coverage, double z,
                                              int grid = 4096);

}  // namespace monoeit
