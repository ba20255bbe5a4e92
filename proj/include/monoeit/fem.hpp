#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "monoeit/mesh.hpp"
#include "monoeit/types.hpp"

namespace monoeit {

using SpMat = Eigen::SparseMatrix<double>;

// Simplex-wise constant (P0) conductivity.
struct Conductivity {
  Vec values;
  double lower_bound = 0.0;

  static Conductivity constant(int num_triangles, double value);
  // Checks every value >= lower_bound > 0 and finite.
  void validate() const;
};

struct ContactImpedance {
  Vec z;
  static ContactImpedance uniform(int k, double value);
};

enum class BasisKind { trig, dipole, gram_schmidt };

std::string to_string(BasisKind kind);
BasisKind parse_basis_kind(const std::string& name);

// k x (k-1) matrix whose columns are mean-free, linearly independent currents.
struct CurrentBasis {
  Mat currents;
  BasisKind kind = BasisKind::gram_schmidt;
  int k() const { return static_cast<int>(currents.rows()); }
  int dim() const { return static_cast<int>(currents.cols()); }
};

struct CemSolution {
  Vec v;  // nodal potential
  Vec V;  // electrode voltages, mean-free
};

// Gradients of the P1 hat functions on triangle t (columns = local vertices).
Eigen::Matrix<double, 2, 3> p1_gradients(const Mesh& mesh, int t);

// Stiffness matrix of sum_K coeff_K * int_K grad u . grad w.
SpMat assemble_stiffness(const Mesh& mesh, const Vec& coefficients);

// Per-triangle gradient of a P1 field, num_triangles x 2.
Mat field_gradients(const Mesh& mesh, const Vec& nodal);

/// Discretised complete electrode model on (nodal potentials, electrode voltages).
///
/// The bilinear form is
///   int gamma grad v . grad w + sum_j (1/z_j) int_{E_j} (v - V_j)(w - W_j) dS
/// with the ground condition sum_j V_j = 0 enforced through an augmented
/// Lagrangian term; its multiplier vanishes for every mean-free current, so the
/// augmented matrix is symmetric positive definite and factorised once.
/// The mesh and layout must outlive the system.
class CemSystem {
 public:
  CemSystem(const Mesh& mesh, const ElectrodeLayout& layout, const Conductivity& gamma,
            const ContactImpedance& z);

  int num_nodes() const { return num_nodes_; }
  int k() const { return k_; }
  const Mesh& mesh() const { return *mesh_; }
  const ElectrodeLayout& layout() const { return *layout_; }
  const Conductivity& conductivity() const { return gamma_; }
  const ContactImpedance& contact() const { return z_; }

  // Bilinear form matrix without the ground augmentation (singular, PSD).
  const SpMat& form_matrix() const { return form_; }

  CemSolution solve(const Vec& current) const;
  // Electrode voltages for each column of `currents` (k x n in, k x n out).
  Mat solve_voltages(const Mat& currents) const;
  std::vector<CemSolution> solve_all(const Mat& currents) const;

  // Solves form_matrix() x = rhs for a right-hand side orthogonal to the
  // constant mode, returning x with mean-free electrode part.
  Vec solve_rhs(const Vec& rhs) const;

  // Relative residual ||A x - b|| / ||b|| of the last-stage check.
  double relative_residual(const Vec& x, const Vec& rhs) const;

 private:
  const Mesh* mesh_;
  const ElectrodeLayout* layout_;
  Conductivity gamma_;
  ContactImpedance z_;
  int num_nodes_ = 0;
  int k_ = 0;
  SpMat form_;
  SpMat augmented_;
  struct Factor;
  std::shared_ptr<const Factor> factor_;
};

// Int_{E_j} |v - V_j|^2 dS for each electrode.
Vec contact_energies(const CemSystem& system, const CemSolution& sol);

/// Matrix of R(gamma) in the orthonormalised current basis plus the raw data.
struct MeasurementMatrix {
  Mat entries;          // (k-1)x(k-1), symmetric
  CurrentBasis basis;
  Mat voltages;         // k x (k-1): column m = R(gamma) I^(m)
  double raw_asymmetry = 0.0;  // ||E - E^T||_F / ||E||_F before symmetrisation

  // Electrode-space map (k x k) acting on R^k, zero on constants.
  Mat standard() const;
};

MeasurementMatrix measurement_matrix(const CemSystem& system, const CurrentBasis& basis);
// Builds the representation from already simulated / measured voltages.
MeasurementMatrix measurement_from_voltages(const Mat& voltages, const CurrentBasis& basis);

/// Frechet derivative of R at the background, one (k-1)x(k-1) block per triangle
/// in the orthonormalised basis. Stored in factored form: the block of triangle
/// K is -|K| G_K^T G_K, G_K the 2 x (k-1) gradients of the basis potentials.
class SensitivityTensor {
 public:
  SensitivityTensor() = default;
  SensitivityTensor(int num_triangles, int dim);

  int dim() const { return dim_; }
  bool covers(int triangle) const;
  Mat block(int triangle) const;
  // Sum of the blocks of the listed triangles (chi_B ~ sum chi_K).
  Mat apply(std::span<const int> triangles) const;
  // Same tensor with every block multiplied by `factor`.
  SensitivityTensor scaled(double factor) const;

  void reserve(int count);
  void set(int triangle, double area, const Eigen::Matrix<double, 2, Eigen::Dynamic>& grads);

 private:
  int dim_ = 0;
  double factor_ = 1.0;
  std::vector<int> slot_;
  int used_ = 0;
  Mat rows_;  // 2 rows per covered triangle: sqrt(area) * gradient
};

SensitivityTensor sensitivity_tensor(const CemSystem& background, const CurrentBasis& basis,
                                     std::optional<std::span<const int>> subset = std::nullopt);

Mat apply_sensitivity(const SensitivityTensor& tensor, const TestCell& cell);

}  // namespace monoeit
