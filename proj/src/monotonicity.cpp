#include "monoeit/monotonicity.hpp"

#include <algorithm>
#include <cmath>

#include "monoeit/cm_bridge.hpp"
#include "monoeit/spectral.hpp"

namespace monoeit {

std::string to_string(ProbeSign sign) {
  return sign == ProbeSign::conductive ? "conductive" : "resistive";
}

ProbeSign parse_probe_sign(const std::string& name) {
  if (name == "conductive") return ProbeSign::conductive;
  if (name == "resistive") return ProbeSign::resistive;
  throw InvalidArgument("unknown sign '" + name + "' (expected conductive or resistive)");
}

void ReconstructionConfig::validate() const {
  if (algorithm != 1 && algorithm != 2) throw InvalidArgument("algorithm must be 1 or 2");
  if (beta.empty()) throw InvalidArgument("beta list is empty");
  if (algorithm == 1 && beta.size() != 1)
    throw InvalidArgument("algorithm 1 takes a single beta");
  for (double b : beta) {
    if (!std::isfinite(b)) throw InvalidArgument("beta must be finite");
    if (sign == ProbeSign::conductive && !(b > 0.0))
      throw InvalidArgument("conductive reconstruction needs beta > 0");
    if (sign == ProbeSign::resistive && !(b < 0.0))
      throw InvalidArgument("resistive reconstruction needs beta < 0");
  }
  for (std::size_t i = 1; i < beta.size(); ++i)
    if (!(std::abs(beta[i]) > std::abs(beta[i - 1])))
      throw InvalidArgument("beta list must be strictly increasing in magnitude");
  if (!std::isfinite(mu)) throw InvalidArgument("mu must be finite");
  if (alpha && !std::isfinite(*alpha)) throw InvalidArgument("alpha must be finite");
}

std::vector<double> beta_progression(double start, double step, int count) {
  if (count < 1) throw InvalidArgument("beta progression needs at least one value");
  std::vector<double> out(count);
  for (int n = 0; n < count; ++n) out[n] = start + step * n;
  return out;
}

namespace {

void require_same_basis(const MeasurementMatrix& a, const MeasurementMatrix& b) {
  if (a.entries.rows() != b.entries.rows() || a.entries.cols() != b.entries.cols())
    throw InvalidArgument("measurement matrices differ in dimension");
  if (a.basis.currents.rows() != b.basis.currents.rows() ||
      a.basis.currents.cols() != b.basis.currents.cols() ||
      (a.basis.currents - b.basis.currents).norm() >
          1e-12 * std::max(1.0, a.basis.currents.norm()))
    throw InvalidArgument("measurement matrices use different current bases");
}

}  // namespace

double regularization_alpha(const MeasurementMatrix& r0, const MeasurementMatrix& rdelta,
                            double mu) {
  require_same_basis(r0, rdelta);
  return -mu * min_eigenvalue(r0.entries - rdelta.entries);
}

double regularization_alpha(const MeasurementMatrix& r0, const MeasurementMatrix& rdelta,
                            double mu, ProbeSign sign) {
  if (sign == ProbeSign::conductive) return regularization_alpha(r0, rdelta, mu);
  require_same_basis(r0, rdelta);
  return -mu * min_eigenvalue(rdelta.entries - r0.entries);
}

Mat test_matrix(ProbeSign sign, const Mat& r0, const Mat& s_b, const Mat& rdelta, double beta,
                double alpha) {
  Mat m = (sign == ProbeSign::conductive) ? Mat(r0 + beta * s_b - rdelta)
                                          : Mat(rdelta - r0 - beta * s_b);
  m.diagonal().array() += alpha;
  return m;
}

std::vector<Mat> cell_sensitivities(const SensitivityTensor& tensor,
                                    const TestSetCollection& cells) {
  std::vector<Mat> out(cells.cells.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t c = 0; c < cells.cells.size(); ++c)
    out[c] = apply_sensitivity(tensor, cells.cells[c]);
  return out;
}

std::size_t IndicatorField::support_size() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return v > 0.0; }));
}

namespace {

IndicatorField empty_field(const TestSetCollection& cells, int algorithm, double alpha) {
  IndicatorField f;
  f.values.assign(cells.cells.size(), 0.0);
  f.centers.reserve(cells.cells.size());
  for (const auto& c : cells.cells) f.centers.push_back(c.center);
  f.diam = cells.diam;
  f.algorithm = algorithm;
  f.alpha = alpha;
  return f;
}

double resolve_alpha(const MeasurementMatrix& r0, const MeasurementMatrix& rdelta,
                     const ReconstructionConfig& config) {
  if (config.alpha) return *config.alpha;
  return regularization_alpha(r0, rdelta, config.mu, config.sign);
}

void check_blocks(const std::vector<Mat>& blocks, const TestSetCollection& cells, int dim) {
  if (blocks.size() != cells.cells.size())
    throw InvalidArgument("cell sensitivity count differs from cell count");
  for (const Mat& b : blocks)
    if (b.rows() != dim || b.cols() != dim)
      throw InvalidArgument("cell sensitivity block has wrong dimension");
}

}  // namespace

IndicatorField algorithm1(const std::vector<Mat>& cell_blocks, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config) {
  config.validate();
  if (config.algorithm != 1) throw InvalidArgument("algorithm1 called with algorithm != 1");
  require_same_basis(r0, rdelta);
  check_blocks(cell_blocks, cells, static_cast<int>(r0.entries.rows()));
  const double alpha = resolve_alpha(r0, rdelta, config);
  IndicatorField f = empty_field(cells, 1, alpha);
  f.min_eig.assign(cells.cells.size(), 0.0);
  f.stages = 1;
  const double beta = config.beta.front();
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t c = 0; c < cells.cells.size(); ++c) {
    const double e = min_eigenvalue(
        test_matrix(config.sign, r0.entries, cell_blocks[c], rdelta.entries, beta, alpha));
    f.min_eig[c] = e;
    f.values[c] = std::max(0.0, e);
  }
  return f;
}

IndicatorField algorithm1(const SensitivityTensor& sensitivities, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config) {
  return algorithm1(cell_sensitivities(sensitivities, cells), r0, rdelta, cells, config);
}

IndicatorField algorithm2(const std::vector<Mat>& cell_blocks, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config) {
  config.validate();
  if (config.algorithm != 2) throw InvalidArgument("algorithm2 called with algorithm != 2");
  require_same_basis(r0, rdelta);
  check_blocks(cell_blocks, cells, static_cast<int>(r0.entries.rows()));
  const double alpha = resolve_alpha(r0, rdelta, config);
  IndicatorField f = empty_field(cells, 2, alpha);
  std::vector<std::size_t> active(cells.cells.size());
  for (std::size_t c = 0; c < active.size(); ++c) active[c] = c;
  for (double beta : config.beta) {
    if (active.empty()) break;
    ++f.stages;
    std::vector<char> pass(active.size(), 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < active.size(); ++i) {
      const std::size_t c = active[i];
      pass[i] = min_eigenvalue(test_matrix(config.sign, r0.entries, cell_blocks[c],
                                           rdelta.entries, beta, alpha)) >= 0.0;
    }
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (!pass[i]) continue;
      f.values[active[i]] += 1.0;
      next.push_back(active[i]);
    }
    active = std::move(next);
  }
  return f;
}

IndicatorField algorithm2(const SensitivityTensor& sensitivities, const MeasurementMatrix& r0,
                          const MeasurementMatrix& rdelta, const TestSetCollection& cells,
                          const ReconstructionConfig& config) {
  return algorithm2(cell_sensitivities(sensitivities, cells), r0, rdelta, cells, config);
}

std::vector<bool> regularized_set(std::span<const double> min_eigs, double level, double tol) {
  std::vector<bool> out(min_eigs.size());
  for (std::size_t i = 0; i < min_eigs.size(); ++i) out[i] = min_eigs[i] + level >= -tol;
  return out;
}

std::vector<SandwichRow> sandwich_experiment(const SandwichSetup& setup, std::span<const int> ks,
                                             std::span<const double> sigmas) {
  if (setup.mesh == nullptr) throw InvalidArgument("sandwich experiment needs a mesh");
  const Mesh& mesh = *setup.mesh;
  const Conductivity gamma0 = Conductivity::constant(mesh.num_triangles(), setup.phantom.gamma0);
  const Conductivity gamma = rasterize_phantom(setup.phantom, mesh);
  const TestSetCollection cells = build_hex_test_sets(mesh, setup.diam);
  const std::size_t nc = cells.cells.size();

  const auto cm_basis = CmCurrentBasis::trig(setup.reference_order);
  const CmBackground bg = cm_background(mesh, gamma0, cm_basis);
  const Mat cm_data = cm_forward_nd(mesh, gamma, cm_basis);
  const double tol = setup.set_tol * max_abs_eigenvalue(bg.nd);
  std::vector<Mat> t_ref(nc);
  std::vector<double> ref_eig(nc);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t c = 0; c < nc; ++c) {
    t_ref[c] = cm_linearized_test_matrix(bg, setup.beta, cells.cells[c], cm_data);
    ref_eig[c] = min_eigenvalue(t_ref[c]);
  }
  const std::vector<bool> m0 = regularized_set(ref_eig, 0.0, tol);

  std::vector<SandwichRow> rows;
  for (int k : ks) {
    const auto layout = build_electrode_layout(mesh, k, setup.coverage);
    const auto z = ContactImpedance::uniform(k, setup.z);
    const CemSystem sys0(mesh, layout, gamma0, z);
    const CemSystem sys(mesh, layout, gamma, z);
    const CurrentBasis basis = current_basis(BasisKind::gram_schmidt, k);
    const auto r0 = measurement_matrix(sys0, basis);
    const auto rg = measurement_matrix(sys, basis);
    const auto blocks = cell_sensitivities(sensitivity_tensor(sys0, basis), cells);

    ProjectionOperators ops(k, setup.coverage, z.z);
    Mat densities(ops.grid_size(), cm_basis.p);
    for (int m = 0; m < cm_basis.p; ++m)
      densities.col(m) = ops.sample([&](double t) { return cm_basis.density(m, t); });
    const Mat compress = orthonormal_frame(basis.currents).frame.transpose() * ops.Qstar(densities);
    auto compressed = [&](const Mat& m) { return Mat(sym(compress.transpose() * m * compress)); };

    std::vector<Mat> t_k(nc);
    double omega = 0.0;
#pragma omp parallel for schedule(dynamic, 16) reduction(max : omega)
    for (std::size_t c = 0; c < nc; ++c) {
      t_k[c] = compressed(r0.entries + setup.beta * blocks[c] - rg.entries);
      omega = std::max(omega, max_abs_eigenvalue(t_ref[c] - t_k[c]));
    }

    for (double sigma : sigmas) {
      const NoisyData noisy = apply_noise(rg.voltages, basis, NoiseSpec{sigma, setup.seed});
      const auto rdelta = measurement_from_voltages(noisy.symmetrized, basis);
      const Mat noise = compressed(rdelta.entries - rg.entries);
      SandwichRow row;
      row.k = k;
      row.sigma = sigma;
      row.delta = sigma > 0.0 ? max_abs_eigenvalue(noise) : 0.0;
      row.alpha = row.delta;
      row.omega = omega;
      row.lambda = 2.0 * (omega + row.delta);
      std::vector<double> eig(nc);
#pragma omp parallel for schedule(dynamic, 16)
      for (std::size_t c = 0; c < nc; ++c) eig[c] = min_eigenvalue(t_k[c] - noise);
      const auto m_alpha = regularized_set(eig, row.alpha, tol);
      const auto m_lambda = regularized_set(ref_eig, row.lambda, tol);
      for (std::size_t c = 0; c < nc; ++c) {
        row.reference_count += m0[c];
        row.alpha_count += m_alpha[c];
        row.lambda_count += m_lambda[c];
        row.left_violations += m0[c] && !m_alpha[c];
        row.right_violations += m_alpha[c] && !m_lambda[c];
        row.symmetric_difference += m_alpha[c] != m0[c];
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace monoeit
