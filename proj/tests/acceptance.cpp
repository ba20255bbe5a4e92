// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "monoeit/cli.hpp"
#include "monoeit/cm_bridge.hpp"
#include "monoeit/io.hpp"
#include "monoeit/selftest.hpp"
#include "monoeit/spectral.hpp"

using namespace monoeit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double min_eig(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

double spec_norm(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose()))
      .eigenvalues()
      .cwiseAbs()
      .maxCoeff();
}

Conductivity random_pair_member(const Mesh& mesh, SplitMix64& rng) {
  Conductivity g = Conductivity::constant(mesh.num_triangles(), 1.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) g.values(t) = 0.5 + 1.5 * rng.uniform();
  g.lower_bound = 0.5;
  return g;
}

Outcome criterion1() {
  const Mesh mesh = electrode_mesh(0.025);
  const auto layout = build_electrode_layout(mesh, 16, 0.5);
  const auto basis = current_basis(BasisKind::trig, 16);
  const auto z = ContactImpedance::uniform(16, 0.1);
  SplitMix64 rng(2024);
  int bad = 0;
  double worst = 1e300;
  for (int p = 0; p < 20; ++p) {
    const Conductivity tilde = random_pair_member(mesh, rng);
    Conductivity gamma = tilde;
    for (int t = 0; t < mesh.num_triangles(); ++t) gamma.values(t) += 2.0 * rng.uniform();
    const Mat d = measurement_matrix(CemSystem(mesh, layout, tilde, z), basis).entries -
                  measurement_matrix(CemSystem(mesh, layout, gamma, z), basis).entries;
    const double rel = min_eig(d) / spec_norm(d);
    worst = std::min(worst, rel);
    if (rel < -1e-9) ++bad;
  }
  std::ostringstream s;
  s << mesh.num_triangles() << " triangles, 20 pairs, " << bad
    << " violations, smallest min eig / norm " << worst;
  return {bad == 0, s.str()};
}

Outcome criterion2() {
  const Mesh mesh = electrode_mesh(0.025);
  const auto layout = build_electrode_layout(mesh, 16, 0.5);
  const auto basis = current_basis(BasisKind::trig, 16);
  const Conductivity g = rasterize_phantom(preset_phantom("two_disk"), mesh);
  Conductivity g2 = g;
  g2.values *= 2.0;
  g2.lower_bound *= 2.0;
  const Mat r = measurement_matrix(CemSystem(mesh, layout, g, ContactImpedance::uniform(16, 0.1)),
                                   basis).entries;
  const Mat r2 = measurement_matrix(
      CemSystem(mesh, layout, g2, ContactImpedance::uniform(16, 0.05)), basis).entries;
  const double rel = spec_norm(r2 - 0.5 * r) / spec_norm(r);
  std::ostringstream s;
  s << "||R(2g, z/2) - R(g, z)/2|| / ||R(g, z)|| = " << rel;
  return {rel <= 1e-10, s.str()};
}

Outcome criterion3() {
  const Mesh mesh = electrode_mesh(0.012);
  const double gamma0 = 1.7;
  const Mat nd = cm_forward_nd(mesh, Conductivity::constant(mesh.num_triangles(), gamma0),
                               CmCurrentBasis::trig(16));
  double worst = 0.0;
  for (int m = 1; m <= 8; ++m)
    for (int idx : {m - 1, 8 + m - 1})
      worst = std::max(worst, std::abs(nd(idx, idx) * gamma0 * m - 1.0));
  std::ostringstream s;
  s << "largest relative deviation from 1/(gamma0 m), m <= 8: " << worst;
  return {worst < 0.01, s.str()};
}

Outcome criterion4() {
  const Mesh mesh = electrode_mesh(0.035);
  const auto fc = check_frechet_derivative(mesh, 16, 10, 77);
  std::ostringstream s;
  s << "ratios";
  for (double r : fc.ratios) s << ' ' << std::setprecision(4) << r;
  return {fc.result.passed() && fc.ratios.size() == 10, s.str()};
}

Outcome criterion5() {
  const Mesh mesh = electrode_mesh(0.012);
  const Conductivity g = rasterize_phantom(preset_phantom("two_disk"), mesh);
  const std::vector<int> ks{8, 16, 32};
  const auto rows = convergence_sweep(mesh, g, ks, 0.5, 0.1);
  bool ok = rows.size() == 3;
  std::ostringstream s;
  for (const auto& r : rows) {
    s << "k " << r.k << ": " << r.norm_estimate;
    if (!std::isnan(r.ratio_vs_prev)) {
      s << " (ratio " << r.ratio_vs_prev << ")";
      ok = ok && r.ratio_vs_prev >= 0.35 && r.ratio_vs_prev <= 0.75;
    }
    s << "; ";
  }
  return {ok, s.str()};
}

Outcome criterion6() {
  // Eigenvalue continuity against an independent eigen-solve, then the semidefiniteness transfer.
  SplitMix64 rng(606);
  int bad31 = 0;
  for (int n = 0; n < 200; ++n) {
    const int d = 2 + n % 14;
    Mat a(d, d), b(d, d);
    for (int i = 0; i < d * d; ++i) {
      a.data()[i] = rng.normal();
      b.data()[i] = (n % 3 == 0 ? 1e-3 : 1.0) * rng.normal();
    }
    a = 0.5 * (a + a.transpose());
    b = a + 0.5 * (b + b.transpose());
    if (std::abs(min_eig(a) - min_eig(b)) > spec_norm(a - b) + 1e-12) ++bad31;
  }
  const auto t44 = check_semidefiniteness_transfer(16, 200, 607);
  std::ostringstream s;
  s << "eigenvalue continuity: " << bad31 << "/200 violations; transfer: " << t44.failed << '/' << t44.checked
    << " violations";
  return {bad31 == 0 && t44.passed() && t44.checked == 200, s.str()};
}

Outcome criterion7() {
  const Mesh mesh = electrode_mesh(0.012);
  Phantom ph = preset_phantom("two_disk");
  for (auto& inc : ph.inclusions) inc.contrast = 1.0;
  const auto layout = build_electrode_layout(mesh, 16, 0.5);
  const auto basis = current_basis(BasisKind::trig, 16);
  const auto z = ContactImpedance::uniform(16, 0.1);
  const CemSystem bg(mesh, layout, Conductivity::constant(mesh.num_triangles(), 1.0), z);
  const Mat r0 = measurement_matrix(bg, basis).entries;
  const Mat rg = measurement_matrix(CemSystem(mesh, layout, rasterize_phantom(ph, mesh), z), basis)
                     .entries;
  const auto sens = sensitivity_tensor(bg, basis);
  const auto cells = build_hex_test_sets(mesh, 0.053);
  const double tol = 1e-7 * spec_norm(r0);
  int inside = 0, inside_ok = 0, far = 0, far_neg = 0;
  for (const auto& cell : cells.cells) {
    bool in = false;
    for (const auto& inc : ph.inclusions) {
      bool all = true;
      for (const Point& v : hex_vertices(cell.center, cells.diam)) all = all && inc.contains(v);
      in = in || all;
    }
    const bool is_far = ph.distance_to_inclusions(cell.center) > 0.2;
    if (!in && !is_far) continue;
    const double e = min_eig(r0 + 0.5 * sens.apply(cell.triangles) - rg);
    if (in) {
      ++inside;
      inside_ok += e >= -tol;
    } else {
      ++far;
      far_neg += e < -tol;
    }
  }
  std::ostringstream s;
  s << "inside " << inside_ok << '/' << inside << " definite, far " << far_neg << '/' << far
    << " indefinite";
  return {inside > 0 && inside_ok == inside && far_neg >= 0.9 * far, s.str()};
}

Outcome criterion8() {
  const Mesh mesh = electrode_mesh(0.012);
  SandwichSetup setup;
  setup.mesh = &mesh;
  setup.phantom = preset_phantom("two_disk");
  setup.beta = 0.5;
  setup.diam = 0.053;
  setup.reference_order = 64;
  std::vector<SandwichRow> rows;
  const auto res = check_sandwich(setup, {16, 32}, {0.0, 5e-3}, &rows);
  std::ostringstream s;
  bool ok = res.passed() && rows.size() == 4;
  for (const auto& r : rows) {
    ok = ok && r.reference_count > 0;
    s << "k " << r.k << " delta " << std::setprecision(3) << r.delta << ": |M0| "
      << r.reference_count << " |Ma| " << r.alpha_count << " |Ml| " << r.lambda_count
      << " violations " << r.left_violations << '/' << r.right_violations << "; ";
  }
  return {ok, s.str()};
}

struct TableRun {
  const char* phantom;
  int algorithm;
  double sigma;
  double beta;         // algorithm 1
  double beta_offset;  // algorithm 2: offset + step * j, j = 1..stages
  double beta_step;
  double mu;
};

Outcome criterion9(const fs::path& root) {
  // Rows of the parameter table: two disks, convex polygons, resistive disks.
  const std::vector<TableRun> runs{
      {"two_disk", 1, 0.0, 0.8, 0, 0, 1.001},
      {"two_disk", 2, 0.0, 0, 0.1, 0.5, 1.01},
      {"two_disk", 1, 5e-3, 0.8, 0, 0, 1.01},
      {"two_disk", 2, 5e-3, 0, 0.1, 0.5, 1.01},
      {"convex", 1, 0.0, 0.66, 0, 0, 1.0002},
      {"convex", 2, 0.0, 0, 0.1, 0.5, 1.01},
      {"convex", 1, 5e-3, 0.66, 0, 0, 1.01},
      {"convex", 2, 5e-3, 0, 0.1, 0.5, 1.01},
      {"resistive_two_disk", 1, 0.0, -0.1, 0, 0, 0.99998},
      {"resistive_two_disk", 2, 0.0, 0, -0.01, -0.02, 0.99998},
      {"resistive_two_disk", 1, 5e-3, -0.01, 0, 0, 1.001},
      {"resistive_two_disk", 2, 5e-3, 0, -0.01, -0.02, 1.001},
  };
  const Mesh mesh = electrode_mesh(0.012);
  const auto cells = build_hex_test_sets(mesh, 0.053);
  std::ostringstream s, quiet;
  bool ok = true;
  int n = 0;
  for (const auto& run : runs) {
    RunConfig c;
    c.phantom = run.phantom;
    c.algorithm = run.algorithm;
    c.sigma = run.sigma;
    c.seed = 5;
    c.mu = run.mu;
    c.sign = run.beta < 0 || run.beta_step < 0 ? ProbeSign::resistive : ProbeSign::conductive;
    if (run.algorithm == 1) {
      c.beta = {run.beta};
    } else {
      c.beta_offset = run.beta_offset;
      c.beta_step = run.beta_step;
      c.beta_stages = 10;
    }
    c.out = root / ("table_" + std::to_string(n++));
    cmd_simulate(c, quiet);
    const auto field = cmd_reconstruct(c, quiet);

    const Phantom ph = preset_phantom(run.phantom);
    double support_area = 0.0;
    std::vector<bool> hit(ph.inclusions.size(), false);
    for (std::size_t i = 0; i < cells.cells.size(); ++i) {
      if (!(field.values[i] > 0.0)) continue;
      for (int t : cells.cells[i].triangles) {
        support_area += mesh.area(t);
        for (std::size_t d = 0; d < hit.size(); ++d)
          hit[d] = hit[d] || ph.inclusions[d].contains(mesh.centroid(t));
      }
    }
    const double frac = support_area / mesh.total_area();
    bool all_hit = true;
    for (bool h : hit) all_hit = all_hit && h;
    const bool conductive = c.sign == ProbeSign::conductive;
    const bool run_ok = all_hit && (!conductive || frac < 0.4);
    ok = ok && run_ok;
    s << run.phantom << " alg" << run.algorithm << (run.sigma > 0 ? " noisy" : " noiseless") << ": "
      << std::fixed << std::setprecision(1) << 100 * frac << "% area, "
      << (all_hit ? "all inclusions hit" : "missed an inclusion") << (run_ok ? "" : " [fail]")
      << "; " << std::defaultfloat;
  }
  // Determinism: repeat the noisy two-disk algorithm-2 run.
  RunConfig c;
  c.algorithm = 2;
  c.sigma = 5e-3;
  c.seed = 5;
  c.beta_offset = 0.1;
  c.beta_step = 0.5;
  c.beta_stages = 10;
  c.out = root / "table_repeat";
  cmd_simulate(c, quiet);
  cmd_reconstruct(c, quiet);
  const bool same = read_text(c.out / "indicator.csv") == read_text(root / "table_3" / "indicator.csv") &&
                    read_text(c.out / "data.csv") == read_text(root / "table_3" / "data.csv");
  s << (same ? "repeat run identical" : "repeat run differs");
  return {ok && same, s.str()};
}

Outcome criterion10(const fs::path& root) {
  RunConfig c;
  c.sigma = 5e-3;
  c.seed = 9;
  c.out = root / "monotone";
  std::ostringstream quiet;
  cmd_simulate(c, quiet);
  const VoltageData data = read_voltages(c.out / "data.csv");
  const Mesh mesh = electrode_mesh(c.mesh_h);
  const auto layout = build_electrode_layout(mesh, 16, 0.5);
  const auto basis = current_basis(BasisKind::trig, 16);
  const CemSystem bg(mesh, layout, Conductivity::constant(mesh.num_triangles(), 1.0),
                     ContactImpedance::uniform(16, 0.1));
  const auto r0 = measurement_matrix(bg, basis);
  const auto rd = measurement_from_voltages(symmetrize_data(data.voltages, basis.currents), basis);
  const auto cells = build_hex_test_sets(mesh, 0.053);
  const auto blocks = cell_sensitivities(sensitivity_tensor(bg, basis), cells);
  const auto res =
      check_indicator_monotonicity(blocks, r0, rd, cells, {0.0, 2e-3, 8e-3}, {0.4, 0.8, 1.6});
  std::ostringstream s;
  s << res.checked << " cellwise comparisons, " << res.failed << " violations";
  return {res.passed(), s.str()};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "monoeit_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7,
      criterion8, [&] { return criterion9(root); }, [&] { return criterion10(root); }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << o.detail << " ["
              << std::fixed << std::setprecision(1) << secs << " s]" << std::defaultfloat
              << std::endl;
    failed += !o.pass;
  }
  std::cout << criteria.size() - failed << '/' << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
