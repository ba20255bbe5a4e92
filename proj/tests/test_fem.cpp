#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "monoeit/fem.hpp"
#include "monoeit/selftest.hpp"
#include "monoeit/spectral.hpp"
#include "monoeit/synthdata.hpp"

using namespace monoeit;

namespace {

struct Fixture {
  Mesh mesh = electrode_mesh(0.05);
  ElectrodeLayout layout = build_electrode_layout(mesh, 16, 0.5);
  CurrentBasis basis = current_basis(BasisKind::trig, 16);

  Mat R(const Conductivity& gamma, double z = 0.1) const {
    CemSystem sys(mesh, layout, gamma, ContactImpedance::uniform(16, z));
    return measurement_matrix(sys, basis).entries;
  }
  Conductivity constant(double v) const { return Conductivity::constant(mesh.num_triangles(), v); }
};

double min_eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("CEM input validation") {
  Fixture f;
  CemSystem sys(f.mesh, f.layout, f.constant(1.0), ContactImpedance::uniform(16, 0.1));
  const auto sol = sys.solve(Vec::Zero(16));
  CHECK(sol.V.norm() == 0.0);
  CHECK(sol.v.norm() == 0.0);
  Vec bad = Vec::Zero(16);
  bad(0) = 1.0;
  CHECK_THROWS_AS(sys.solve(bad), InvalidArgument);
  CHECK_THROWS_AS(sys.solve(Vec::Zero(15)), InvalidArgument);
  CHECK_THROWS_AS(CemSystem(f.mesh, f.layout, f.constant(1.0), ContactImpedance::uniform(16, 0.0)),
                  InvalidArgument);
  Conductivity neg = f.constant(1.0);
  neg.values(3) = -1.0;
  CHECK_THROWS_AS(CemSystem(f.mesh, f.layout, neg, ContactImpedance::uniform(16, 0.1)),
                  InvalidArgument);
}

TEST_CASE("dipole drive and ground condition") {
  Fixture f;
  CemSystem sys(f.mesh, f.layout, f.constant(1.0), ContactImpedance::uniform(16, 0.1));
  Vec I = Vec::Zero(16);
  I(0) = 1.0;
  I(1) = -1.0;
  const auto sol = sys.solve(I);
  CHECK(sol.V(0) > 0.0);
  CHECK(sol.V(1) < 0.0);
  CHECK(std::abs(sol.V.sum()) < 1e-12);
  // Electrode 8 is opposite electrode 0; the potential there sits in between.
  CHECK(std::abs(sol.V(8)) < sol.V(0));
  // Rotational symmetry of the homogeneous disk: the 1 -> 2 dipole gives the
  // same voltage drop.
  Vec J = Vec::Zero(16);
  J(1) = 1.0;
  J(2) = -1.0;
  const auto sol2 = sys.solve(J);
  CHECK((sol2.V(1) - sol2.V(2)) == doctest::Approx(sol.V(0) - sol.V(1)).epsilon(1e-2));
}

TEST_CASE("reciprocity, scaling and doubling the conductivity") {
  Fixture f;
  SplitMix64 rng(7);
  Conductivity g = f.constant(1.0);
  for (int t = 0; t < f.mesh.num_triangles(); ++t) g.values(t) = 0.5 + 2.0 * rng.uniform();
  g.lower_bound = 0.5;
  CemSystem sys(f.mesh, f.layout, g, ContactImpedance::uniform(16, 0.1));
  const auto m = measurement_matrix(sys, f.basis);
  CHECK(m.raw_asymmetry < 1e-10);
  const Mat r = m.entries;

  for (double c : {0.5, 2.0, 10.0}) {
    Conductivity gc = g;
    gc.values *= c;
    gc.lower_bound *= c;
    const Mat rc = f.R(gc, 0.1 / c);
    CHECK((rc - r / c).norm() <= 1e-10 * r.norm());
  }
  Conductivity g2 = g;
  g2.values *= 2.0;
  g2.lower_bound *= 2.0;
  const Mat r2 = f.R(g2, 0.1);
  CHECK(min_eig(r - r2) >= -1e-10 * r.norm());
  CHECK(min_eig(r2 - 0.5 * r) >= -1e-10 * r.norm());
  CHECK((r2 - 0.5 * r).norm() > 1e-6);
}

TEST_CASE("monotonicity of R on random pairs") {
  Fixture f;
  SplitMix64 rng(21);
  for (int n = 0; n < 5; ++n) {
    Conductivity lo = f.constant(1.0), hi = f.constant(1.0);
    for (int t = 0; t < f.mesh.num_triangles(); ++t) {
      lo.values(t) = 0.5 + rng.uniform();
      hi.values(t) = lo.values(t) + 2.0 * rng.uniform();
    }
    lo.lower_bound = hi.lower_bound = 0.5;
    const Mat d = f.R(lo) - f.R(hi);
    CHECK(min_eig(d) >= -1e-9 * d.norm());
  }
}

TEST_CASE("sensitivity blocks") {
  Fixture f;
  const Conductivity g0 = f.constant(1.0);
  CemSystem sys(f.mesh, f.layout, g0, ContactImpedance::uniform(16, 0.1));
  const auto S = sensitivity_tensor(sys, f.basis);
  CHECK(S.dim() == 15);
  for (int t = 0; t < f.mesh.num_triangles(); t += 37) {
    const Mat b = S.block(t);
    CHECK((b - b.transpose()).norm() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(b).eigenvalues().maxCoeff() <= 1e-14);
  }
  const std::vector<int> none;
  CHECK(S.apply(none).norm() == 0.0);
  const std::vector<int> ab{3, 40}, a{3}, b{40};
  CHECK((S.apply(ab) - S.apply(a) - S.apply(b)).norm() < 1e-14);
  CHECK((S.scaled(-1.0).block(3) + S.block(3)).norm() < 1e-16);

  const std::vector<int> sub{5, 6};
  const auto partial = sensitivity_tensor(sys, f.basis, std::span<const int>(sub));
  CHECK(partial.covers(5));
  CHECK_FALSE(partial.covers(7));
  CHECK_THROWS_AS(partial.block(7), InvalidArgument);
  CHECK((partial.block(6) - S.block(6)).norm() < 1e-12 * S.block(6).norm());
}

TEST_CASE("sensitivity against finite differences") {
  Fixture f;
  const Conductivity g0 = f.constant(1.0);
  CemSystem sys(f.mesh, f.layout, g0, ContactImpedance::uniform(16, 0.1));
  const std::vector<int> tris{10, f.mesh.num_triangles() / 2, f.mesh.num_triangles() - 5};
  const auto S = sensitivity_tensor(sys, f.basis, std::span<const int>(tris));
  const Mat r0 = f.R(g0);
  for (int t : tris) {
    auto remainder = [&](double eta) {
      Conductivity g = g0;
      g.values(t) += eta;
      return (f.R(g) - r0 - eta * S.block(t)).norm();
    };
    const double eta = 0.5;
    const double r1 = remainder(eta), r2 = remainder(eta / 2);
    // Second order: halving eta divides the remainder by about 4.
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    CHECK(remainder(0.05) < 0.02 * 0.05 * S.block(t).norm());
  }
}
