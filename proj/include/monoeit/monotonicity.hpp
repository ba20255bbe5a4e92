#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "monoeit/fem.hpp"
#include "monoeit/mesh.hpp"
#include "monoeit/synthdata.hpp"
#include "monoeit/types.hpp"

namespace monoeit {

enum class ProbeSign { conductive, resistive };

std::string to_string(ProbeSign sign);
ProbeSign parse_probe_sign(const std::string& name);

struct ReconstructionConfig {
  std::vector<double> beta;  // single value for algorithm 1
  double mu = 1.0;
  ProbeSign sign = ProbeSign::conductive;
  int algorithm = 1;
  std::optional<double> alpha;  // replaces the mu rule when set

  // Conductive needs beta > 0, resistive beta < 0; algorithm 2 needs |beta|
  // strictly increasing along the list.
  void validate() const;
};

// start, start + step, ..., count values.
std::vector<double> beta_progression(double start, double step, int count);

// -mu * min eig(R0 - Rdelta).
double regularization_alpha(const MeasurementMatrix& r0, const MeasurementMatrix& rdelta,
                            double mu);
// Sign-aware rule: the resistive test shifts by -mu * min eig(Rdelta - R0).
double regularization_alpha(const MeasurementMatrix& r0, const MeasurementMatrix& rdelta,
                            double mu, ProbeSign sign);

/// Conductive: R0 + beta S_B - Rdelta + alpha Id.
/// Resistive (beta < 0): Rdelta - R0 - beta S_B + alpha Id, which is the
/// monotonicity bound R(gamma) >= R(gamma0) + |beta| R'(gamma0) chi_B for
/// B inside a resistive inclusion with |beta| <= kappa.
Mat test_matrix(ProbeSign sign, const Mat& r0, const Mat& s_b, const Mat& rdelta, double beta,
                double alpha);

// Sum of sensitivity blocks for every cell, computed once.
std::vector<Mat> cell_sensitivities(const SensitivityTensor& tensor,
                                    const TestSetCollection& cells);

struct IndicatorField {
  std::vector<double> values;
  std::vector<Point> centers;
  double diam = 0.0;
  int algorithm = 1;
  double alpha = 0.0;
  std::vector<double> min_eig;  // algorithm 1: min eigenvalue before clipping at 0
  int stages = 0;               // algorithm 2: stages evaluated

  std::size_t support_size() const;
};

IndicatorField algorithm1(const std::vector<Mat>& cell_blocks, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config);
IndicatorField algorithm1(const SensitivityTensor& sensitivities, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config);

/// Ind = number of consecutive passed stages from beta_1; a cell failing a stage is
/// dropped from later stages. Stops when no cell is active or the list ends.
IndicatorField algorithm2(const std::vector<Mat>& cell_blocks, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config);
IndicatorField algorithm2(const SensitivityTensor& sensitivities, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config);

// Cells with min eigenvalue + level >= -tol.
std::vector<bool> regularized_set(std::span<const double> min_eigs, double level, double tol);

struct SandwichSetup {
  const Mesh* mesh = nullptr;  // shared by data and model
  Phantom phantom;
  double beta = 0.5;
  double diam = 0.053;
  double coverage = 0.5;
  double z = 0.1;
  int reference_order = 64;  // trig densities of the CM reference
  std::uint64_t seed = 1;
  double set_tol = 1e-9;  // relative to ||Lambda(gamma0)||
};

struct SandwichRow {
  int k = 0;
  double sigma = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double omega = 0.0;
  double lambda = 0.0;
  int reference_count = 0;     // |M_0(T)|
  int alpha_count = 0;         // |M_alpha(T_k^delta)|
  int lambda_count = 0;        // |M_lambda(T)|
  int left_violations = 0;     // M_0(T) \ M_alpha(T_k^delta)
  int right_violations = 0;    // M_alpha(T_k^delta) \ M_lambda(T)
  int symmetric_difference = 0;  // |M_alpha(T_k^delta) xor M_0(T)|
};

/// Cell-set sandwich M_0(T) in M_alpha(T_k) in M_lambda(T) with alpha = delta.
/// T is the linearised CM test on the first reference_order trig densities; T_k is the CEM test with k electrodes
/// compressed onto the same densities through Q*; delta is the exact spectral norm of
/// the compressed noise and omega = max_B ||T(B) - T_k(B)||.
std::vector<SandwichRow> sandwich_experiment(const SandwichSetup& setup, std::span<const int> ks,
                                             std::span<const double> sigmas);

}  // namespace monoeit
