#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "monoeit/monotonicity.hpp"
#include "monoeit/selftest.hpp"
#include "monoeit/spectral.hpp"

using namespace monoeit;

namespace {

struct Setup {
  Mesh mesh = electrode_mesh(0.02);
  ElectrodeLayout layout = build_electrode_layout(mesh, 16, 0.5);
  CurrentBasis basis = current_basis(BasisKind::trig, 16);
  TestSetCollection cells = build_hex_test_sets(mesh, 0.09);
  MeasurementMatrix r0, rdelta;
  std::vector<Mat> blocks;

  explicit Setup(const char* phantom = "two_disk") {
    const auto z = ContactImpedance::uniform(16, 0.1);
    CemSystem bg(mesh, layout, Conductivity::constant(mesh.num_triangles(), 1.0), z);
    r0 = measurement_matrix(bg, basis);
    CemSystem data(mesh, layout, rasterize_phantom(preset_phantom(phantom), mesh), z);
    rdelta = measurement_matrix(data, basis);
    blocks = cell_sensitivities(sensitivity_tensor(bg, basis), cells);
  }
};

ReconstructionConfig config(int algorithm, std::vector<double> beta, double mu = 1.01) {
  ReconstructionConfig c;
  c.algorithm = algorithm;
  c.beta = std::move(beta);
  c.mu = mu;
  return c;
}

}  // namespace

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(config(1, {0.5}).validate());
  CHECK_THROWS_AS(config(3, {0.5}).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(1, {}).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(1, {0.5, 1.0}).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(1, {-0.5}).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(2, {0.5, 0.5}).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(2, {1.0, 0.5}).validate(), InvalidArgument);
  auto res = config(2, {-0.01, -0.03});
  res.sign = ProbeSign::resistive;
  CHECK_NOTHROW(res.validate());
  res.beta = {-0.03, -0.01};
  CHECK_THROWS_AS(res.validate(), InvalidArgument);
  res.beta = {0.1};
  CHECK_THROWS_AS(res.validate(), InvalidArgument);
  auto bad = config(1, {0.5});
  bad.alpha = std::nan("");
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK(parse_probe_sign("resistive") == ProbeSign::resistive);
  CHECK_THROWS_AS(parse_probe_sign("both"), InvalidArgument);

  const auto b = beta_progression(0.6, 0.5, 4);
  REQUIRE(b.size() == 4);
  CHECK(b[0] == doctest::Approx(0.6));
  CHECK(b[3] == doctest::Approx(2.1));
  CHECK_THROWS_AS(beta_progression(0.6, 0.5, 0), InvalidArgument);
}

TEST_CASE("test matrix and alpha rule") {
  Mat r0 = Mat::Identity(3, 3) * 2.0, s = -Mat::Identity(3, 3), rd = Mat::Identity(3, 3);
  const Mat tc = test_matrix(ProbeSign::conductive, r0, s, rd, 0.5, 0.1);
  CHECK((tc - Mat::Identity(3, 3) * (2.0 - 0.5 - 1.0 + 0.1)).norm() < 1e-15);
  const Mat tr = test_matrix(ProbeSign::resistive, r0, s, rd, -0.5, 0.1);
  CHECK((tr - Mat::Identity(3, 3) * (1.0 - 2.0 - 0.5 + 0.1)).norm() < 1e-15);

  const Setup st;
  const double a = regularization_alpha(st.r0, st.rdelta, 1.01);
  CHECK(a == doctest::Approx(-1.01 * min_eigenvalue(st.r0.entries - st.rdelta.entries)));
  CHECK(regularization_alpha(st.r0, st.rdelta, 1.01, ProbeSign::resistive) ==
        doctest::Approx(-1.01 * min_eigenvalue(st.rdelta.entries - st.r0.entries)));
  MeasurementMatrix shifted = st.r0;
  shifted.entries += 0.01 * Mat::Identity(15, 15);
  CHECK(regularization_alpha(st.r0, shifted, 1.5) == doctest::Approx(0.015));
  shifted.entries -= 0.02 * Mat::Identity(15, 15);
  CHECK(regularization_alpha(st.r0, shifted, 1.5) == doctest::Approx(-0.015));
  const auto other = measurement_from_voltages(st.rdelta.voltages, st.rdelta.basis);
  CHECK((other.entries - st.rdelta.entries).norm() < 1e-12 * st.rdelta.entries.norm());
}

TEST_CASE("algorithm 2 with a single beta equals algorithm 1") {
  const Setup st;
  // Same-mesh data: the mu rule would give a negative shift, so fix alpha.
  auto c1 = config(1, {0.5});
  auto c2 = config(2, {0.5});
  c1.alpha = c2.alpha = 0.0;
  const auto i1 = algorithm1(st.blocks, st.r0, st.rdelta, st.cells, c1);
  const auto i2 = algorithm2(st.blocks, st.r0, st.rdelta, st.cells, c2);
  REQUIRE(i1.values.size() == st.cells.cells.size());
  CHECK(i1.support_size() > 0);
  CHECK(i1.support_size() < st.cells.cells.size());
  for (std::size_t c = 0; c < i1.values.size(); ++c) {
    CHECK(i1.values[c] == doctest::Approx(std::max(0.0, i1.min_eig[c])));
    CHECK((i1.values[c] > 0.0) == (i2.values[c] > 0.0));
    CHECK((i2.values[c] == 0.0 || i2.values[c] == 1.0));
  }
  CHECK(i1.alpha == 0.0);
  const auto ruled = algorithm1(st.blocks, st.r0, st.rdelta, st.cells, config(1, {0.5}));
  CHECK(ruled.alpha == doctest::Approx(regularization_alpha(st.r0, st.rdelta, 1.01)));
  CHECK(ruled.alpha < 0.0);
}

TEST_CASE("homogeneous data with alpha = 0 gives an empty indicator") {
  const Setup st("homogeneous");
  auto c = config(2, {0.5, 1.0, 1.5});
  c.alpha = 0.0;
  const auto ind = algorithm2(st.blocks, st.r0, st.rdelta, st.cells, c);
  CHECK(ind.support_size() == 0);
  CHECK(ind.stages == 1);
  auto c1 = config(1, {0.5});
  c1.alpha = 0.0;
  CHECK(algorithm1(st.blocks, st.r0, st.rdelta, st.cells, c1).support_size() == 0);
}

TEST_CASE("algorithm 2 prefix property") {
  const Setup st;
  const std::vector<double> betas{0.5, 1.0, 2.0, 3.0, 4.0};
  auto cfg = [](std::vector<double> b) {
    auto c = config(2, std::move(b));
    c.alpha = 0.0;
    return c;
  };
  const auto full = algorithm2(st.blocks, st.r0, st.rdelta, st.cells, cfg(betas));
  CHECK(full.support_size() > 0);
  for (int m = 1; m < 5; ++m) {
    const std::vector<double> prefix(betas.begin(), betas.begin() + m);
    const auto part = algorithm2(st.blocks, st.r0, st.rdelta, st.cells, cfg(prefix));
    CHECK(part.alpha == doctest::Approx(full.alpha));
    for (std::size_t c = 0; c < full.values.size(); ++c)
      CHECK(part.values[c] == std::min(full.values[c], static_cast<double>(m)));
  }
}

TEST_CASE("algorithm 1 monotone in alpha and beta") {
  const Setup st;
  const auto r = check_indicator_monotonicity(st.blocks, st.r0, st.rdelta, st.cells,
                                              {0.0, 1e-3, 1e-2}, {0.25, 0.5, 1.0});
  CHECK(r.passed());
  CHECK(r.checked > 0);
}

TEST_CASE("regularized set") {
  const std::vector<double> eig{-1.0, -0.1, 0.0, 0.5};
  const auto s = regularized_set(eig, 0.1, 0.0);
  CHECK(s == std::vector<bool>{false, true, true, true});
  CHECK(regularized_set(eig, 100.0, 0.0) == std::vector<bool>(4, true));
}

TEST_CASE("sandwich inclusions") {
  const Mesh mesh = electrode_mesh(0.035);
  SandwichSetup setup;
  setup.mesh = &mesh;
  setup.phantom = preset_phantom("two_disk");
  setup.phantom.inclusions[0].contrast = setup.phantom.inclusions[1].contrast = 1.0;
  setup.diam = 0.16;
  setup.reference_order = 32;
  const std::vector<int> ks{8, 16, 32};
  const std::vector<double> sigmas{0.0, 5e-3};
  const auto rows = sandwich_experiment(setup, ks, sigmas);
  REQUIRE(rows.size() == 6);
  int prev = -1;
  for (const auto& r : rows) {
    CHECK(r.left_violations == 0);
    CHECK(r.right_violations == 0);
    CHECK(r.lambda == doctest::Approx(2 * (r.omega + r.delta)));
    CHECK(r.alpha == doctest::Approx(r.delta));
    CHECK(r.reference_count <= r.alpha_count);
    CHECK(r.alpha_count <= r.lambda_count);
    if (r.sigma == 0.0) {
      CHECK(r.delta < 1e-12);
      if (prev >= 0) CHECK(r.symmetric_difference <= prev);
      prev = r.symmetric_difference;
    }
  }
}
