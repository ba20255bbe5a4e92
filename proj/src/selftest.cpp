#include "monoeit/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/QR>

#include "monoeit/cm_bridge.hpp"
#include "monoeit/spectral.hpp"
#include "monoeit/synthdata.hpp"

namespace monoeit {

namespace {

std::string describe(double worst, const char* what) {
  std::ostringstream ss;
  ss.precision(3);
  ss << what << ' ' << worst;
  return ss.str();
}

// Random P0 field in [lo, hi] per triangle.
Conductivity random_field(const Mesh& mesh, SplitMix64& rng, double lo, double hi) {
  Conductivity c;
  c.values.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) c.values[t] = lo + (hi - lo) * rng.uniform();
  c.lower_bound = lo;
  return c;
}

// Nonnegative perturbation: a random disk bump plus small per-triangle noise.
Vec random_bump(const Mesh& mesh, SplitMix64& rng) {
  const double r = 0.6 * std::sqrt(rng.uniform());
  const double phi = kTwoPi * rng.uniform();
  const Point c(r * std::cos(phi), r * std::sin(phi));
  const double radius = 0.1 + 0.2 * rng.uniform();
  const double height = 0.2 + 1.8 * rng.uniform();
  Vec eta(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    eta[t] = ((mesh.centroid(t) - c).norm() < radius ? height : 0.0) + 0.2 * rng.uniform();
  return eta;
}

Conductivity with_values(Vec values) {
  Conductivity c;
  c.lower_bound = values.minCoeff();
  c.values = std::move(values);
  return c;
}

Mat random_symmetric(int n, SplitMix64& rng) {
  Mat m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = rng.normal();
  return sym(m);
}

Mat random_orthogonal(int n, SplitMix64& rng) {
  Mat m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(n, n);
}

}  // namespace

Mesh electrode_mesh(double h, double coverage) {
  std::vector<double> breaks;
  for (int k : {8, 16, 32}) {
    const auto b = electrode_breakpoints(k, coverage);
    breaks.insert(breaks.end(), b.begin(), b.end());
  }
  return generate_disk_mesh(h, breaks);
}

PropertyResult check_cem_monotonicity(const Mesh& mesh, int k, int pairs, std::uint64_t seed) {
  PropertyResult res{"cem_monotonicity"};
  SplitMix64 rng(seed);
  const auto layout = build_electrode_layout(mesh, k, 0.5);
  const auto z = ContactImpedance::uniform(k, 0.1);
  const auto basis = current_basis(BasisKind::gram_schmidt, k);
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Conductivity tilde = random_field(mesh, rng, 0.5, 1.5);
    const Conductivity gamma = with_values(tilde.values + random_bump(mesh, rng));
    const CemSystem st(mesh, layout, tilde, z);
    const CemSystem sg(mesh, layout, gamma, z);
    const auto rt = measurement_matrix(st, basis);
    const auto rg = measurement_matrix(sg, basis);
    const Mat diff = rt.entries - rg.entries;
    const double scale = max_abs_eigenvalue(diff);
    const double e = min_eigenvalue(diff);
    ++res.checked;
    if (e < -1e-9 * scale) ++res.failed;
    worst = std::min(worst, e / std::max(scale, 1e-300));

    // Interior-energy bounds for random currents.
    for (int c = 0; c < 10; ++c) {
      Vec current(k);
      for (int j = 0; j < k; ++j) current[j] = rng.normal();
      current.array() -= current.mean();
      const CemSolution s_t = st.solve(current);
      const CemSolution s_g = sg.solve(current);
      const double q = current.dot(s_t.V - s_g.V);
      const Mat grad = field_gradients(mesh, s_t.v);
      double c0 = 0.0, c1 = 0.0;
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double energy = mesh.area(t) * grad.row(t).squaredNorm();
        const double jump = gamma.values[t] - tilde.values[t];
        c0 += tilde.values[t] / gamma.values[t] * jump * energy;
        c1 += jump * energy;
      }
      const double tol = 1e-9 * std::max(std::abs(c1), 1e-300);
      ++res.checked;
      if (q < c0 - tol || q > c1 + tol) ++res.failed;
    }
  }
  res.detail = describe(worst, "worst relative min eig");
  return res;
}

PropertyResult check_linearization_bound(const Mesh& mesh, int k, int trials, std::uint64_t seed,
                                         double sensitivity_factor) {
  PropertyResult res{"linearization_bound"};
  SplitMix64 rng(seed);
  const auto layout = build_electrode_layout(mesh, k, 0.5);
  const auto z = ContactImpedance::uniform(k, 0.1);
  const auto basis = current_basis(BasisKind::gram_schmidt, k);
  const auto gamma0 = Conductivity::constant(mesh.num_triangles(), 1.0);
  const CemSystem s0(mesh, layout, gamma0, z);
  const auto r0 = measurement_matrix(s0, basis);
  const SensitivityTensor sens = sensitivity_tensor(s0, basis).scaled(sensitivity_factor);
  double worst = 0.0;
  for (int n = 0; n < trials; ++n) {
    const Vec eta = random_bump(mesh, rng);
    const CemSystem s(mesh, layout, with_values(gamma0.values + eta), z);
    Mat lin = Mat::Zero(k - 1, k - 1);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const int one[] = {t};
      lin += eta[t] * sens.apply(one);
    }
    const Mat rem = measurement_matrix(s, basis).entries - r0.entries - lin;
    const double scale = std::max(max_abs_eigenvalue(lin), 1e-300);
    const double e = min_eigenvalue(rem);
    ++res.checked;
    if (e < -1e-9 * scale) ++res.failed;
    worst = std::min(worst, e / scale);
  }
  res.detail = describe(worst, "worst relative min eig");
  return res;
}

PropertyResult check_scaling_law(const Mesh& mesh, int k) {
  PropertyResult res{"scaling_law"};
  const auto layout = build_electrode_layout(mesh, k, 0.5);
  const auto basis = current_basis(BasisKind::gram_schmidt, k);
  const auto gamma = Conductivity::constant(mesh.num_triangles(), 1.0);
  const auto z = ContactImpedance::uniform(k, 0.1);
  const Mat r = measurement_matrix(CemSystem(mesh, layout, gamma, z), basis).entries;
  const double norm = max_abs_eigenvalue(r);
  double worst = 0.0;
  for (double c : {0.5, 2.0, 10.0}) {
    Conductivity gc = gamma;
    gc.values *= c;
    gc.lower_bound *= c;
    ContactImpedance zc = z;
    zc.z /= c;
    const Mat rc = measurement_matrix(CemSystem(mesh, layout, gc, zc), basis).entries;
    const double err = max_abs_eigenvalue(rc - r / c) / (norm / c);
    ++res.checked;
    if (err > 1e-10) ++res.failed;
    worst = std::max(worst, err);
  }
  res.detail = describe(worst, "worst relative error");
  return res;
}

PropertyResult check_spectral_continuity(int trials, std::uint64_t seed) {
  PropertyResult res{"spectral_continuity"};
  SplitMix64 rng(seed);
  for (int n = 0; n < trials; ++n) {
    const int dim = 2 + static_cast<int>(rng.next() % 30);
    const Mat s = random_symmetric(dim, rng);
    const double eps = std::pow(10.0, -4.0 * rng.uniform());
    const Mat t = s + eps * random_symmetric(dim, rng);
    ++res.checked;
    if (!spectral_continuity_check(s, t)) ++res.failed;
  }
  return res;
}

PropertyResult check_semidefiniteness_transfer(int k, int trials, std::uint64_t seed) {
  PropertyResult res{"semidefiniteness_transfer"};
  SplitMix64 rng(seed);
  const ProjectionOperators ops(k, 0.5, ContactImpedance::uniform(k, 0.1).z);
  const Mat frame = orthonormal_frame(current_basis(BasisKind::gram_schmidt, k).currents).frame;
  for (int n = 0; n < trials; ++n) {
    const Mat q = random_orthogonal(k - 1, rng);
    Vec lambda(k - 1);
    for (int i = 0; i < k - 1; ++i) lambda[i] = rng.uniform();
    const bool psd = n % 2 == 0;
    if (psd) {
      lambda[0] = 0.0;  // semidefinite, not definite
    } else {
      lambda[0] = -(0.01 + rng.uniform());
    }
    const Mat a = q * lambda.asDiagonal() * q.transpose();
    const auto v = semidefiniteness_transfer_check(a, frame, ops, 4, seed + n);
    ++res.checked;
    if (v.matrix_psd != v.operator_psd || v.matrix_psd != psd) ++res.failed;
  }
  return res;
}

FrechetCheck check_frechet_derivative(const Mesh& mesh, int k, int triangles, std::uint64_t seed,
                                      double sensitivity_factor) {
  FrechetCheck out;
  out.result.name = "frechet_derivative";
  SplitMix64 rng(seed);
  const auto layout = build_electrode_layout(mesh, k, 0.5);
  const auto z = ContactImpedance::uniform(k, 0.1);
  const auto basis = current_basis(BasisKind::gram_schmidt, k);
  const auto gamma0 = Conductivity::constant(mesh.num_triangles(), 1.0);
  const CemSystem s0(mesh, layout, gamma0, z);
  const auto base = s0.solve_all(basis.currents);
  const int n = mesh.num_nodes();
  for (int i = 0; i < triangles; ++i) {
    const int tri = static_cast<int>(rng.next() % static_cast<std::uint64_t>(mesh.num_triangles()));
    const int one[] = {tri};
    const SensitivityTensor sens =
        sensitivity_tensor(s0, basis, std::span<const int>(one)).scaled(sensitivity_factor);
    const Mat block = sens.block(tri);
    Vec chi = Vec::Zero(mesh.num_triangles());
    chi[tri] = 1.0;
    const SpMat d_a = assemble_stiffness(mesh, chi);
    double rem[2];
    const double ts[2] = {1e-2, 1e-3};
    for (int s = 0; s < 2; ++s) {
      const double t = ts[s];
      Conductivity gt = gamma0;
      gt.values[tri] += t;
      const CemSystem st(mesh, layout, gt, z);
      // Difference solve (A + t dA) dx = -t dA x0 avoids cancellation in R(gt) - R(g0).
      Mat dv(k, k - 1);
      for (int m = 0; m < k - 1; ++m) {
        Vec rhs = Vec::Zero(n + k);
        rhs.head(n) = -t * (d_a * base[m].v);
        dv.col(m) = st.solve_rhs(rhs).tail(k) / t;
      }
      const Mat quotient = measurement_from_voltages(dv, basis).entries;
      rem[s] = max_abs_eigenvalue(quotient - block);
    }
    const double ratio = rem[0] / rem[1];
    out.triangles.push_back(tri);
    out.ratios.push_back(ratio);
    ++out.result.checked;
    if (!(ratio >= 8.0 && ratio <= 12.0)) ++out.result.failed;
  }
  const auto [lo, hi] = std::minmax_element(out.ratios.begin(), out.ratios.end());
  if (!out.ratios.empty()) {
    std::ostringstream ss;
    ss.precision(4);
    ss << "ratios in [" << *lo << ", " << *hi << "]";
    out.result.detail = ss.str();
  }
  return out;
}

PropertyResult check_data_symmetry(const Mesh& mesh, int k, double sigma, std::uint64_t seed,
                                   bool symmetrize) {
  PropertyResult res{"data_symmetry"};
  const auto layout = build_electrode_layout(mesh, k, 0.5);
  const auto z = ContactImpedance::uniform(k, 0.1);
  const Phantom ph = preset_phantom("two_disk");
  const CemSystem s(mesh, layout, rasterize_phantom(ph, mesh), z);
  double worst = 0.0;
  for (BasisKind kind : {BasisKind::trig, BasisKind::dipole, BasisKind::gram_schmidt}) {
    const auto basis = current_basis(kind, k);
    const Mat v = s.solve_voltages(basis.currents);
    const NoisyData noisy = apply_noise(v, basis, NoiseSpec{sigma, seed});
    const Mat used = symmetrize ? noisy.symmetrized : noisy.noisy;
    const Mat rep = frame_representation(used, orthonormal_frame(basis.currents));
    const double asym = (rep - rep.transpose()).norm() / rep.norm();
    ++res.checked;
    if (asym > 1e-12) ++res.failed;
    worst = std::max(worst, asym);
  }
  res.detail = describe(worst, "worst relative asymmetry");
  return res;
}

PropertyResult check_cm_bounds(const Mesh& mesh, int currents, std::uint64_t seed) {
  PropertyResult res{"cm_energy_bounds"};
  SplitMix64 rng(seed);
  const Conductivity tilde = random_field(mesh, rng, 0.5, 1.5);
  const Conductivity gamma = random_field(mesh, rng, 0.5, 1.5);
  const NeumannSystem st(mesh, tilde);
  const NeumannSystem sg(mesh, gamma);
  for (int c = 0; c < currents; ++c) {
    double a[4], b[4];
    for (int m = 0; m < 4; ++m) {
      a[m] = rng.normal();
      b[m] = rng.normal();
    }
    const Vec load = st.load([&](double th) {
      double f = 0.0;
      for (int m = 0; m < 4; ++m) f += a[m] * std::cos((m + 1) * th) + b[m] * std::sin((m + 1) * th);
      return f;
    });
    const auto bounds = cm_monotonicity_bounds(st, sg, load);
    const double tol = 1e-9 * (std::abs(bounds.lower) + std::abs(bounds.upper) + 1e-300);
    ++res.checked;
    if (bounds.value < bounds.lower - tol || bounds.value > bounds.upper + tol) ++res.failed;
  }
  return res;
}

PropertyResult check_sandwich(const SandwichSetup& setup, const std::vector<int>& ks,
                              const std::vector<double>& sigmas, std::vector<SandwichRow>* rows) {
  PropertyResult res{"sandwich_inclusions"};
  const auto out = sandwich_experiment(setup, ks, sigmas);
  int worst_diff = 0;
  for (const auto& r : out) {
    ++res.checked;
    if (r.left_violations + r.right_violations > 0) ++res.failed;
    worst_diff = std::max(worst_diff, r.symmetric_difference);
  }
  res.detail = "largest symmetric difference " + std::to_string(worst_diff);
  if (rows) *rows = out;
  return res;
}

PropertyResult check_indicator_monotonicity(const std::vector<Mat>& blocks,
                                            const MeasurementMatrix& r0,
                                            const MeasurementMatrix& rdelta,
                                            const TestSetCollection& cells,
                                            const std::vector<double>& alphas,
                                            const std::vector<double>& betas) {
  PropertyResult res{"indicator_monotonicity"};
  std::vector<std::vector<std::vector<double>>> ind(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (double beta : betas) {
      ReconstructionConfig cfg;
      cfg.beta = {beta};
      cfg.alpha = alphas[a];
      ind[a].push_back(algorithm1(blocks, r0, rdelta, cells, cfg).values);
    }
  }
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t b = 0; b < betas.size(); ++b) {
      for (std::size_t c = 0; c < cells.cells.size(); ++c) {
        if (a + 1 < alphas.size()) {
          ++res.checked;
          if (ind[a + 1][b][c] < ind[a][b][c]) ++res.failed;
        }
        if (b + 1 < betas.size()) {
          ++res.checked;
          if (ind[a][b + 1][c] > ind[a][b][c]) ++res.failed;
        }
      }
    }
  }
  return res;
}

std::vector<PropertyResult> run_selftest(const SelftestOptions& options, std::ostream* log) {
  std::vector<PropertyResult> results;
  const Mesh mesh = electrode_mesh(options.mesh_h);
  const int k = options.k;
  const auto seed = options.seed;
  auto record = [&](PropertyResult r, auto start) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (log) {
      *log << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.checked - r.failed << '/'
           << r.checked;
      if (!r.detail.empty()) *log << " (" << r.detail << ")";
      *log << " [" << secs << " s]\n";
    }
    results.push_back(std::move(r));
  };
  using clock = std::chrono::steady_clock;

  auto t = clock::now();
  record(check_cem_monotonicity(mesh, k, 5, seed), t);
  t = clock::now();
  record(check_linearization_bound(mesh, k, 5, seed, options.sensitivity_factor), t);
  t = clock::now();
  record(check_scaling_law(mesh, k), t);
  t = clock::now();
  record(check_spectral_continuity(200, seed), t);
  t = clock::now();
  record(check_semidefiniteness_transfer(k, 200, seed), t);
  t = clock::now();
  record(check_frechet_derivative(mesh, k, 4, seed, options.sensitivity_factor).result, t);
  t = clock::now();
  record(check_data_symmetry(mesh, k, 5e-3, seed, options.symmetrize_noise), t);
  t = clock::now();
  record(check_cm_bounds(mesh, 10, seed), t);

  t = clock::now();
  SandwichSetup setup;
  setup.mesh = &mesh;
  setup.phantom = preset_phantom("two_disk");
  setup.diam = std::max(0.1, 3.01 * mesh.max_edge_length());
  setup.reference_order = 32;
  setup.seed = seed;
  record(check_sandwich(setup, {8, 16}, {0.0, 5e-3}), t);

  t = clock::now();
  {
    const auto layout = build_electrode_layout(mesh, k, 0.5);
    const auto z = ContactImpedance::uniform(k, 0.1);
    const auto basis = current_basis(BasisKind::gram_schmidt, k);
    const Phantom ph = preset_phantom("two_disk");
    const CemSystem s0(mesh, layout, Conductivity::constant(mesh.num_triangles(), ph.gamma0), z);
    const CemSystem s(mesh, layout, rasterize_phantom(ph, mesh), z);
    const auto cells = build_hex_test_sets(mesh, setup.diam);
    const auto blocks = cell_sensitivities(
        sensitivity_tensor(s0, basis).scaled(options.sensitivity_factor), cells);
    record(check_indicator_monotonicity(blocks, measurement_matrix(s0, basis),
                                        measurement_matrix(s, basis), cells, {-1e-3, 0.0, 1e-3},
                                        {0.2, 0.5, 0.8}),
           t);
  }
  return results;
}

}  // namespace monoeit
