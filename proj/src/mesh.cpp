#include "monoeit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace monoeit {

namespace {

constexpr std::size_t kNodeBudget = 4'000'000;
constexpr double kAngleTol = 1e-9;

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t -= kTwoPi;
  return t;
}

std::vector<double> boundary_ring_angles(double h, std::span<const double> breakpoints) {
  std::vector<double> fixed;
  fixed.reserve(breakpoints.size());
  for (double a : breakpoints) fixed.push_back(wrap_angle(a));
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end(),
                          [](double x, double y) { return std::abs(x - y) < kAngleTol; }),
              fixed.end());
  if (fixed.size() > 1 && kTwoPi - fixed.back() + fixed.front() < kAngleTol) fixed.pop_back();

  std::vector<double> angles;
  if (fixed.empty()) {
    const int n = std::max(6, static_cast<int>(std::ceil(kTwoPi / h)));
    for (int m = 0; m < n; ++m) angles.push_back(kTwoPi * m / n);
    return angles;
  }
  for (std::size_t g = 0; g < fixed.size(); ++g) {
    const double a = fixed[g];
    const double b = (g + 1 < fixed.size()) ? fixed[g + 1] : fixed.front() + kTwoPi;
    const int parts = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int m = 0; m < parts; ++m) angles.push_back(a + (b - a) * m / parts);
  }
  // Keep at least a hexagon's worth of boundary nodes.
  while (angles.size() < 6) {
    std::vector<double> refined;
    for (std::size_t m = 0; m < angles.size(); ++m) {
      const double a = angles[m];
      const double b = (m + 1 < angles.size()) ? angles[m + 1] : angles.front() + kTwoPi;
      refined.push_back(a);
      refined.push_back(0.5 * (a + b));
    }
    angles = std::move(refined);
  }
  for (double& a : angles) a = wrap_angle(a);
  std::sort(angles.begin(), angles.end());
  return angles;
}

double orient(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

// Triangulates the annulus between two concentric node rings by merging on angle.
void zip_rings(const std::vector<int>& inner, const std::vector<double>& inner_theta,
               const std::vector<int>& outer, const std::vector<double>& outer_theta,
               const std::vector<Point>& nodes, std::vector<std::array<int, 3>>& tris) {
  const int p = static_cast<int>(inner.size());
  const int q = static_cast<int>(outer.size());
  int j0 = 0;
  double best = 1e300;
  for (int j = 0; j < q; ++j) {
    double d = std::abs(wrap_angle(outer_theta[j] - inner_theta[0] + kPi) - kPi);
    if (d < best) {
      best = d;
      j0 = j;
    }
  }
  auto ang_a = [&](int ii) { return inner_theta[ii % p] + kTwoPi * (ii / p); };
  double shift = 0.0;
  {
    const double b0 = outer_theta[j0];
    if (b0 - inner_theta[0] > kPi) shift = -kTwoPi;
    if (b0 - inner_theta[0] < -kPi) shift = kTwoPi;
  }
  auto ang_b = [&](int jj) {
    const int idx = j0 + jj;
    return outer_theta[idx % q] + kTwoPi * (idx / q) + shift;
  };
  auto node_a = [&](int ii) { return inner[ii % p]; };
  auto node_b = [&](int jj) { return outer[(j0 + jj) % q]; };

  int ia = 0;
  int jb = 0;
  while (ia < p || jb < q) {
    const bool advance_inner = (jb == q) || (ia < p && ang_a(ia + 1) < ang_b(jb + 1));
    std::array<int, 3> t{};
    if (advance_inner) {
      t = {node_a(ia), node_a(ia + 1), node_b(jb)};
      ++ia;
    } else {
      t = {node_a(ia), node_b(jb), node_b(jb + 1)};
      ++jb;
    }
    if (orient(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0) std::swap(t[1], t[2]);
    tris.push_back(t);
  }
}

}  // namespace

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  return orient(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

Point Mesh::centroid(int t) const {
  const auto& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

double Mesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& tri : triangles)
    for (int e = 0; e < 3; ++e) m = std::max(m, (nodes[tri[e]] - nodes[tri[(e + 1) % 3]]).norm());
  return m;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += signed_area(t);
  return a;
}

void validate_mesh(const Mesh& mesh) {
  const int n = mesh.num_nodes();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= n)
        throw InvalidArgument("triangle " + std::to_string(t) + " references missing node " +
                              std::to_string(v));
    if (!(mesh.signed_area(t) > 0.0))
      throw InvalidArgument("triangle " + std::to_string(t) + " has non-positive area");
  }
  if (mesh.boundary.size() < 3) throw InvalidArgument("boundary loop has fewer than 3 edges");
  for (std::size_t e = 0; e < mesh.boundary.size(); ++e) {
    const auto& be = mesh.boundary[e];
    const auto& next = mesh.boundary[(e + 1) % mesh.boundary.size()];
    if (be.a < 0 || be.a >= n || be.b < 0 || be.b >= n)
      throw InvalidArgument("boundary edge references missing node");
    if (be.b != next.a) throw InvalidArgument("boundary edges do not form a closed loop");
    if (!(be.theta_b > be.theta_a)) throw InvalidArgument("boundary edge angles not increasing");
    if (std::abs(mesh.nodes[be.a].norm() - 1.0) > 1e-9)
      throw InvalidArgument("boundary node off the unit circle");
  }
}

Mesh generate_disk_mesh(double target_h, std::span<const double> boundary_angles) {
  if (!(target_h > 0.0 && target_h < 1.0))
    throw InvalidArgument("generate_disk_mesh: target_h must lie in (0, 1)");
  // Radial spacing a bit below target_h keeps the zipper diagonals short.
  const int rings = static_cast<int>(std::ceil(1.2 / target_h - 1e-12));
  // Node count estimate: sum of ring sizes.
  const double estimate = 1.0 + kPi * (rings + 1.0) / target_h * 1.05;
  if (estimate > static_cast<double>(kNodeBudget))
    throw InvalidArgument("generate_disk_mesh: target_h too small for node budget");

  Mesh mesh;
  mesh.nodes.emplace_back(0.0, 0.0);
  std::vector<int> prev_ids;
  std::vector<double> prev_theta;

  for (int i = 1; i <= rings; ++i) {
    const double r = static_cast<double>(i) / rings;
    std::vector<double> theta;
    if (i == rings) {
      theta = boundary_ring_angles(target_h, boundary_angles);
    } else {
      const int count = std::max(6, static_cast<int>(std::ceil(kTwoPi * r / target_h - 1e-9)));
      const double offset = (i % 2 == 0) ? 0.5 : 0.0;
      for (int m = 0; m < count; ++m) theta.push_back(kTwoPi * (m + offset) / count);
    }
    std::vector<int> ids;
    for (double t : theta) {
      ids.push_back(mesh.num_nodes());
      mesh.nodes.emplace_back(r * std::cos(t), r * std::sin(t));
    }
    if (i == 1) {
      const int c = static_cast<int>(ids.size());
      for (int m = 0; m < c; ++m) mesh.triangles.push_back({0, ids[m], ids[(m + 1) % c]});
    } else {
      zip_rings(prev_ids, prev_theta, ids, theta, mesh.nodes, mesh.triangles);
    }
    prev_ids = std::move(ids);
    prev_theta = std::move(theta);
  }

  const int nb = static_cast<int>(prev_ids.size());
  for (int m = 0; m < nb; ++m) {
    BoundaryEdge e;
    e.a = prev_ids[m];
    e.b = prev_ids[(m + 1) % nb];
    e.theta_a = prev_theta[m];
    e.theta_b = (m + 1 < nb) ? prev_theta[m + 1] : prev_theta[0] + kTwoPi;
    mesh.boundary.push_back(e);
  }
  validate_mesh(mesh);
  return mesh;
}

bool Arc::contains(double theta) const {
  double t = theta;
  while (t < start) t += kTwoPi;
  while (t >= start + kTwoPi) t -= kTwoPi;
  return t < end;
}

std::vector<Arc> equispaced_arcs(int k, double coverage) {
  if (k < 2) throw InvalidArgument("electrode count must be at least 2");
  if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidArgument("coverage must lie in (0, 1)");
  const double width = coverage * kTwoPi / k;
  std::vector<Arc> arcs;
  for (int j = 0; j < k; ++j) {
    const double c = kPi / k + kTwoPi * j / k;
    arcs.push_back({c - 0.5 * width, c + 0.5 * width});
  }
  return arcs;
}

std::vector<double> electrode_breakpoints(int k, double coverage) {
  std::vector<double> out;
  for (const Arc& a : equispaced_arcs(k, coverage)) {
    out.push_back(a.start);
    out.push_back(a.end);
  }
  return out;
}

ElectrodeLayout build_electrode_layout(const Mesh& mesh, int k, double coverage) {
  ElectrodeLayout layout;
  layout.k = k;
  layout.coverage = coverage;
  layout.electrodes = equispaced_arcs(k, coverage);
  layout.edges.resize(k);
  layout.lengths.assign(k, 0.0);
  for (int j = 0; j < k; ++j) {
    const Arc& arc = layout.electrodes[j];
    double covered = 0.0;
    for (std::size_t e = 0; e < mesh.boundary.size(); ++e) {
      const auto& be = mesh.boundary[e];
      if (be.theta_a >= arc.start - kAngleTol && be.theta_b <= arc.end + kAngleTol) {
        layout.edges[j].push_back(static_cast<int>(e));
        covered += be.theta_b - be.theta_a;
        layout.lengths[j] += mesh.edge_length(be);
      }
    }
    if (std::abs(covered - arc.width()) > 1e-8) {
      std::ostringstream msg;
      msg << "electrode " << j << " endpoints are not mesh nodes (covered " << covered << " of "
          << arc.width() << " rad)";
      throw ResolutionError(msg.str());
    }
    if (layout.edges[j].size() < 2)
      throw ResolutionError("electrode " + std::to_string(j) + " spans fewer than 2 mesh edges");
  }
  return layout;
}

ExtendedElectrodeLayout build_extended_electrodes(int k, double coverage) {
  const auto arcs = equispaced_arcs(k, coverage);
  ExtendedElectrodeLayout ext;
  ext.c_min = 1.0;
  for (int j = 0; j < k; ++j) {
    const double c = 0.5 * (arcs[j].start + arcs[j].end);
    ext.extended.push_back({c - kPi / k, c + kPi / k});
    ext.c_min = std::min(ext.c_min, arcs[j].width() / ext.extended.back().width());
  }
  return ext;
}

ExtendedElectrodeLayout build_extended_electrodes(const ElectrodeLayout& layout) {
  return build_extended_electrodes(layout.k, layout.coverage);
}

std::array<int, 2> hex_axial(const Point& p, double diam) {
  const double s = 0.5 * diam;
  const double qf = (2.0 / 3.0 * p.x()) / s;
  const double rf = (-1.0 / 3.0 * p.x() + std::sqrt(3.0) / 3.0 * p.y()) / s;
  const double yf = -qf - rf;
  double q = std::round(qf);
  double r = std::round(rf);
  const double y = std::round(yf);
  const double dq = std::abs(q - qf);
  const double dr = std::abs(r - rf);
  const double dy = std::abs(y - yf);
  if (dq > dr && dq > dy) {
    q = -y - r;
  } else if (dr > dy) {
    r = -q - y;
  }
  return {static_cast<int>(q), static_cast<int>(r)};
}

Point hex_center(int q, int r, double diam) {
  const double s = 0.5 * diam;
  return {s * 1.5 * q, s * std::sqrt(3.0) * (r + 0.5 * q)};
}

std::array<Point, 6> hex_vertices(const Point& center, double diam) {
  const double s = 0.5 * diam;
  std::array<Point, 6> v;
  for (int i = 0; i < 6; ++i)
    v[i] = center + s * Point(std::cos(kPi / 3.0 * i), std::sin(kPi / 3.0 * i));
  return v;
}

TestSetCollection build_hex_test_sets(const Mesh& mesh, double diam) {
  const double guard = 3.0 * mesh.max_edge_length();
  if (!(diam >= guard)) {
    std::ostringstream msg;
    msg << "test-set diameter " << diam << " below 3 x max edge (" << guard << ")";
    throw ResolutionError(msg.str());
  }
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto ax = hex_axial(mesh.centroid(t), diam);
    groups[{ax[0], ax[1]}].push_back(t);
  }
  TestSetCollection out;
  out.diam = diam;
  const double hex_area_factor = 1.5 * std::sqrt(3.0);  // area = factor * s^2
  for (auto& [key, tris] : groups) {
    const Point c = hex_center(key.first, key.second, diam);
    bool touches_boundary = false;
    for (const Point& v : hex_vertices(c, diam)) touches_boundary |= v.norm() >= 1.0;
    if (touches_boundary || tris.size() < 3) continue;
    TestCell cell;
    cell.q = key.first;
    cell.r = key.second;
    cell.center = c;
    double area = 0.0;
    for (int t : tris) area += mesh.area(t);
    cell.diameter = 2.0 * std::sqrt(area / hex_area_factor);
    cell.triangles = std::move(tris);
    out.cells.push_back(std::move(cell));
  }
  return out;
}

}  // namespace monoeit
