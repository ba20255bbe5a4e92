#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "monoeit/fem.hpp"
#include "monoeit/selftest.hpp"
#include "monoeit/spectral.hpp"
#include "monoeit/synthdata.hpp"

using namespace monoeit;

TEST_CASE("SplitMix64 stream") {
  SplitMix64 a(42), b(42), c(43);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    seen.insert(x);
  }
  CHECK(seen.size() == 100);
  CHECK(SplitMix64(42).next() != c.next());
  // Reference value of the standard SplitMix64 generator for seed 0.
  CHECK(SplitMix64(0).next() == 0xE220A8397B1DCDAFull);
  SplitMix64 n(9);
  double sum = 0.0, sq = 0.0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double y = n.normal();
    sum += y;
    sq += y * y;
  }
  CHECK(std::abs(sum / count) < 0.01);
  CHECK(sq / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("current bases") {
  const Mat gs = current_basis(BasisKind::gram_schmidt, 3).currents;
  CHECK(gs(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(gs(1, 0) == doctest::Approx(-1 / std::sqrt(2.0)));
  CHECK(gs(2, 0) == doctest::Approx(0.0));
  CHECK(gs(0, 1) == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(gs(1, 1) == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(gs(2, 1) == doctest::Approx(-2 / std::sqrt(6.0)));
  for (int k : {4, 16, 32}) {
    const Mat g = current_basis(BasisKind::gram_schmidt, k).currents;
    CHECK((g.transpose() * g - Mat::Identity(k - 1, k - 1)).norm() < 1e-12);
    for (BasisKind kind : {BasisKind::trig, BasisKind::dipole, BasisKind::gram_schmidt}) {
      const Mat c = current_basis(kind, k).currents;
      CHECK(c.rows() == k);
      CHECK(c.cols() == k - 1);
      CHECK(c.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
      Eigen::FullPivLU<Mat> lu(c);
      CHECK(lu.rank() == k - 1);
    }
  }
  const Mat d = current_basis(BasisKind::dipole, 5).currents;
  for (int m = 0; m < 4; ++m) {
    CHECK(d(0, m) == 1.0);
    CHECK(d(m + 1, m) == -1.0);
    CHECK(d.col(m).cwiseAbs().sum() == 2.0);
  }
  const Mat t = current_basis(BasisKind::trig, 8).currents;
  CHECK(t(0, 0) == doctest::Approx(std::cos(2 * M_PI / 8)));
  CHECK_THROWS_AS(current_basis(BasisKind::trig, 7), InvalidArgument);
  CHECK_THROWS_AS(current_basis(BasisKind::dipole, 1), InvalidArgument);
  CHECK(parse_basis_kind(to_string(BasisKind::dipole)) == BasisKind::dipole);
  CHECK_THROWS_AS(parse_basis_kind("pairs"), InvalidArgument);
}

TEST_CASE("phantoms") {
  for (const char* name : {"homogeneous", "two_disk", "convex", "resistive_two_disk", "l_shape", "tank"})
    CHECK_NOTHROW(preset_phantom(name).validate());
  CHECK_THROWS_AS(preset_phantom("nope"), InvalidArgument);

  Phantom p = preset_phantom("two_disk");
  CHECK(p.value_at(Point(-0.4, 0.3)) == doctest::Approx(p.gamma0 + 4.0));
  CHECK(p.value_at(Point(0.0, 0.0)) == doctest::Approx(p.gamma0));
  CHECK(p.distance_to_inclusions(Point(-0.4, 0.6)) == doctest::Approx(0.1));

  Phantom r = preset_phantom("resistive_two_disk");
  r.inclusions[0].contrast = r.gamma0;
  CHECK_THROWS_AS(r.validate(), InvalidArgument);
  Phantom out = preset_phantom("two_disk");
  out.inclusions[0].center = Point(0.85, 0.0);
  CHECK_THROWS_AS(out.validate(), InvalidArgument);

  Inclusion sq;
  sq.shape = InclusionShape::polygon;
  sq.vertices = {Point(0, 0), Point(0.2, 0), Point(0.2, 0.2), Point(0, 0.2)};
  sq.contrast = 1.0;
  CHECK(sq.area() == doctest::Approx(0.04));
  CHECK(sq.contains(Point(0.1, 0.1)));
  CHECK_FALSE(sq.contains(Point(0.3, 0.1)));
  CHECK(sq.distance(Point(0.5, 0.1)) == doctest::Approx(0.3));
}

TEST_CASE("rasterised inclusion area") {
  const Mesh mesh = electrode_mesh(0.012);
  for (const char* name : {"two_disk", "convex", "l_shape"}) {
    const Phantom p = preset_phantom(name);
    const Conductivity g = rasterize_phantom(p, mesh);
    double area = 0.0, exact = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if (g.values(t) > p.gamma0) area += mesh.area(t);
    for (const auto& inc : p.inclusions) exact += inc.area();
    CHECK(std::abs(area - exact) / exact < 0.03);
  }
}

TEST_CASE("noise model") {
  const Mesh mesh = electrode_mesh(0.05);
  const auto layout = build_electrode_layout(mesh, 16, 0.5);
  const auto basis = current_basis(BasisKind::trig, 16);
  const Phantom p = preset_phantom("two_disk");
  CemSystem sys(mesh, layout, rasterize_phantom(p, mesh), ContactImpedance::uniform(16, 0.1));
  const Mat v = sys.solve_voltages(basis.currents);

  const auto clean = apply_noise(v, basis, {0.0, 5});
  CHECK((clean.noisy - v).norm() == 0.0);
  CHECK((clean.symmetrized - v).norm() < 1e-10 * v.norm());
  CHECK(clean.delta_bound < 1e-10);

  const auto a = apply_noise(v, basis, {5e-3, 5});
  const auto b = apply_noise(v, basis, {5e-3, 5});
  const auto c = apply_noise(v, basis, {5e-3, 6});
  CHECK((a.noisy - b.noisy).norm() == 0.0);
  CHECK((a.noisy - c.noisy).norm() > 0.0);
  CHECK(a.relative_error > 0.0025 / 2);
  CHECK(a.relative_error < 0.005 * 2);
  CHECK(a.delta_bound > 0.0);

  const auto frame = orthonormal_frame(basis.currents);
  const Mat rep = frame_representation(a.symmetrized, frame);
  CHECK((rep - rep.transpose()).norm() < 1e-12 * rep.norm());
  CHECK_THROWS_AS(apply_noise(v, basis, {-1.0, 5}), InvalidArgument);
}

TEST_CASE("measurement spectrum does not depend on the current basis") {
  const Mesh mesh = electrode_mesh(0.05);
  const auto layout = build_electrode_layout(mesh, 16, 0.5);
  CemSystem sys(mesh, layout, rasterize_phantom(preset_phantom("convex"), mesh),
                ContactImpedance::uniform(16, 0.1));
  Vec ref;
  for (BasisKind kind : {BasisKind::trig, BasisKind::dipole, BasisKind::gram_schmidt}) {
    const auto m = measurement_matrix(sys, current_basis(kind, 16, 2.0));
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(m.entries).eigenvalues();
    if (ref.size() == 0) ref = ev;
    CHECK((ev - ref).norm() < 1e-10 * ref.norm());
    CHECK(ev.minCoeff() > 0.0);
  }
}
