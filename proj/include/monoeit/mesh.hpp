#pragma once

#include <array>
#include <span>
#include <vector>

#include "monoeit/types.hpp"

namespace monoeit {

// Boundary edge between nodes a -> b, traversed counter-clockwise.
// theta_b > theta_a always; the closing edge has theta_b = theta(b) + 2*pi.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  double theta_a = 0.0;
  double theta_b = 0.0;
};

struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;  // closed loop, sorted by theta_a

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const;
  double area(int t) const { return signed_area(t); }
  Point centroid(int t) const;
  double edge_length(const BoundaryEdge& e) const { return (nodes[e.b] - nodes[e.a]).norm(); }
  double max_edge_length() const;
  double total_area() const;
};

// Throws InvalidArgument describing the first violated mesh invariant.
void validate_mesh(const Mesh& mesh);

/// Structured polar-ring triangulation of the unit disk.
///
/// Rings are spaced 1/ceil(1.2/target_h) apart with roughly 2*pi*r/target_h
/// nodes each. The boundary ring is built so that every angle listed in
/// `boundary_angles` is a node; between consecutive such angles the nodes are
/// spread uniformly. Deterministic for fixed inputs.
Mesh generate_disk_mesh(double target_h, std::span<const double> boundary_angles = {});

/// Electrode endpoint angles for k equispaced electrodes covering the given
/// fraction of the boundary, first electrode centred at pi/k.
std::vector<double> electrode_breakpoints(int k, double coverage);

struct Arc {
  double start = 0.0;
  double end = 0.0;
  double width() const { return end - start; }
  bool contains(double theta) const;  // [start, end) modulo 2*pi
};

struct ElectrodeLayout {
  int k = 0;
  double coverage = 0.0;
  std::vector<Arc> electrodes;
  // Boundary edge indices lying on each electrode.
  std::vector<std::vector<int>> edges;
  // Polygonal length of each electrode (sum of its edge lengths).
  std::vector<double> lengths;
};

/// k equispaced arcs of angular width coverage*2*pi/k, the first centred at pi/k.
/// Throws ResolutionError unless each arc endpoint is a boundary node and each
/// electrode spans at least two boundary edges.
ElectrodeLayout build_electrode_layout(const Mesh& mesh, int k, double coverage);

// Equispaced arcs without mesh association (used by boundary-grid operators).
std::vector<Arc> equispaced_arcs(int k, double coverage);

struct ExtendedElectrodeLayout {
  std::vector<Arc> extended;
  double c_min = 0.0;
};

ExtendedElectrodeLayout build_extended_electrodes(const ElectrodeLayout& layout);
ExtendedElectrodeLayout build_extended_electrodes(int k, double coverage);

struct TestCell {
  std::vector<int> triangles;
  Point center;
  double diameter = 0.0;  // diameter of the hexagon with the same area
  int q = 0;              // axial hexagon coordinates
  int r = 0;
};

struct TestSetCollection {
  double diam = 0.0;  // vertex-to-vertex diameter of the tiling hexagons
  std::vector<TestCell> cells;
};

/// Flat-top hexagonal tiling anchored at the origin. Triangles are assigned to
/// the hexagon containing their centroid; hexagons reaching the boundary or
/// holding fewer than three triangles are dropped.
TestSetCollection build_hex_test_sets(const Mesh& mesh, double diam);

// Axial coordinates of the flat-top hexagon (vertex diameter `diam`) containing p.
std::array<int, 2> hex_axial(const Point& p, double diam);
Point hex_center(int q, int r, double diam);
std::array<Point, 6> hex_vertices(const Point& center, double diam);

}  // namespace monoeit
