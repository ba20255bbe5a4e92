#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monoeit/fem.hpp"
#include "monoeit/mesh.hpp"
#include "monoeit/types.hpp"

namespace monoeit {

// SplitMix64 stream: value n is a fixed mix of seed + n * golden gamma, so the
// sequence depends only on (seed, position) and is identical on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // in (0, 1)
  // Standard normal via Box-Muller; consumes uniforms in pairs.
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class InclusionShape { disk, polygon };

struct Inclusion {
  InclusionShape shape = InclusionShape::disk;
  Point center = Point::Zero();
  double radius = 0.0;
  std::vector<Point> vertices;  // counter-clockwise for polygons
  double contrast = 0.0;        // kappa > 0
  bool resistive = false;       // gamma0 - kappa inside instead of gamma0 + kappa

  bool contains(const Point& p) const;
  // Euclidean distance from p to the closed inclusion (0 inside).
  double distance(const Point& p) const;
  double area() const;
};

struct Phantom {
  double gamma0 = 1.0;
  std::vector<Inclusion> inclusions;

  // Closure of each inclusion strictly inside the unit disk, positive contrast,
  // positive resulting conductivity.
  void validate() const;
  double value_at(const Point& p) const;
  double distance_to_inclusions(const Point& p) const;
};

// Declared default geometries: "homogeneous", "two_disk", "convex",
// "resistive_two_disk", "l_shape", "tank".
Phantom preset_phantom(const std::string& name);

// Triangle value taken at the centroid; overlapping inclusions add up.
Conductivity rasterize_phantom(const Phantom& phantom, const Mesh& mesh);

// k x (k-1) current matrix. trig requires even k.
CurrentBasis current_basis(BasisKind kind, int k, double amplitude = 1.0);

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct NoisyData {
  Mat noisy;           // V + N, before symmetrisation
  Mat symmetrized;     // V^delta
  double delta_bound = 0.0;     // spectral norm of rep(V^delta) - rep(V)
  double relative_error = 0.0;  // ||V - V^delta||_F / ||V||_F
};

/// Multiplicative Gaussian noise: noisy(i, j) = V(i, j) * (1 + sigma * Y_ij) with Y
/// drawn column by column from a SplitMix64 stream seeded by spec.seed.
NoisyData apply_noise(const Mat& voltages, const CurrentBasis& basis, const NoiseSpec& spec);

}  // namespace monoeit
