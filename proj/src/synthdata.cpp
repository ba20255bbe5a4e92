#include "monoeit/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "monoeit/spectral.hpp"

namespace monoeit {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double SplitMix64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

namespace {

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

bool Inclusion::contains(const Point& p) const {
  if (shape == InclusionShape::disk) return (p - center).norm() < radius;
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = vertices[i];
    const Point& b = vertices[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

double Inclusion::distance(const Point& p) const {
  if (shape == InclusionShape::disk) return std::max(0.0, (p - center).norm() - radius);
  if (contains(p)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) d = std::min(d, segment_distance(p, vertices[i], vertices[(i + 1) % n]));
  return d;
}

double Inclusion::area() const {
  if (shape == InclusionShape::disk) return kPi * radius * radius;
  double a = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = vertices[i];
    const Point& q = vertices[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

void Phantom::validate() const {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw InvalidArgument("gamma0 must be positive");
  for (std::size_t i = 0; i < inclusions.size(); ++i) {
    const Inclusion& inc = inclusions[i];
    const std::string tag = "inclusion " + std::to_string(i);
    if (!(inc.contrast > 0.0) || !std::isfinite(inc.contrast))
      throw InvalidArgument(tag + ": contrast must be positive");
    if (inc.shape == InclusionShape::disk) {
      if (!(inc.radius > 0.0)) throw InvalidArgument(tag + ": radius must be positive");
      if (!(inc.center.norm() + inc.radius < 1.0))
        throw InvalidArgument(tag + ": disk not strictly inside the unit disk");
    } else {
      if (inc.vertices.size() < 3) throw InvalidArgument(tag + ": polygon needs 3 vertices");
      for (const Point& v : inc.vertices)
        if (!(v.norm() < 1.0)) throw InvalidArgument(tag + ": polygon vertex outside the unit disk");
      if (!(inc.area() > 0.0)) throw InvalidArgument(tag + ": degenerate polygon");
    }
    if (inc.resistive && !(inc.contrast < gamma0))
      throw InvalidArgument(tag + ": resistive contrast must be below gamma0");
  }
}

double Phantom::value_at(const Point& p) const {
  double v = gamma0;
  for (const Inclusion& inc : inclusions)
    if (inc.contains(p)) v += inc.resistive ? -inc.contrast : inc.contrast;
  return v;
}

double Phantom::distance_to_inclusions(const Point& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (const Inclusion& inc : inclusions) d = std::min(d, inc.distance(p));
  return d;
}

namespace {

Inclusion disk(double x, double y, double r, double kappa, bool resistive = false) {
  Inclusion inc;
  inc.shape = InclusionShape::disk;
  inc.center = Point(x, y);
  inc.radius = r;
  inc.contrast = kappa;
  inc.resistive = resistive;
  return inc;
}

Inclusion polygon(std::vector<Point> vertices, double kappa) {
  Inclusion inc;
  inc.shape = InclusionShape::polygon;
  inc.vertices = std::move(vertices);
  inc.contrast = kappa;
  return inc;
}

}  // namespace

Phantom preset_phantom(const std::string& name) {
  Phantom ph;
  ph.gamma0 = 1.0;
  if (name == "homogeneous") {
  } else if (name == "two_disk") {
    ph.inclusions = {disk(-0.4, 0.3, 0.2, 4.0), disk(0.35, -0.35, 0.2, 4.0)};
  } else if (name == "convex") {
    ph.inclusions = {polygon({{-0.6, -0.1}, {-0.2, -0.1}, {-0.2, 0.3}, {-0.6, 0.3}}, 2.0),
                     polygon({{0.15, -0.55}, {0.55, -0.35}, {0.3, -0.05}}, 2.0)};
  } else if (name == "resistive_two_disk") {
    ph.inclusions = {disk(-0.4, 0.3, 0.2, 0.9, true), disk(0.35, -0.35, 0.2, 0.9, true)};
  } else if (name == "l_shape") {
    ph.inclusions = {polygon(
        {{-0.45, -0.45}, {0.45, -0.45}, {0.45, 0.0}, {0.0, 0.0}, {0.0, 0.45}, {-0.45, 0.45}}, 1.0)};
  } else if (name == "tank") {
    // Two metallic-like targets in a tap-water background, radius scaled to 1.
    ph.gamma0 = 0.0243;
    ph.inclusions = {disk(-0.45, 0.2, 0.18, 2.0), disk(0.4, -0.3, 0.18, 2.0)};
  } else {
    throw InvalidArgument("unknown phantom preset '" + name + "'");
  }
  return ph;
}

Conductivity rasterize_phantom(const Phantom& phantom, const Mesh& mesh) {
  phantom.validate();
  Conductivity c;
  c.values.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) c.values[t] = phantom.value_at(mesh.centroid(t));
  const double lo = c.values.size() > 0 ? c.values.minCoeff() : phantom.gamma0;
  if (!(lo > 0.0)) throw InvalidArgument("phantom yields non-positive conductivity");
  c.lower_bound = lo;
  return c;
}

CurrentBasis current_basis(BasisKind kind, int k, double amplitude) {
  if (k < 2) throw InvalidArgument("current basis needs k >= 2");
  CurrentBasis b;
  b.kind = kind;
  b.currents = Mat::Zero(k, k - 1);
  switch (kind) {
    case BasisKind::trig: {
      if (k % 2 != 0) throw InvalidArgument("trig current basis needs even k");
      const int half = k / 2;
      for (int m = 1; m <= half; ++m)
        for (int j = 1; j <= k; ++j) b.currents(j - 1, m - 1) = std::cos(m * kTwoPi * j / k);
      for (int m = 1; m < half; ++m)
        for (int j = 1; j <= k; ++j) b.currents(j - 1, half + m - 1) = std::sin(m * kTwoPi * j / k);
      break;
    }
    case BasisKind::dipole:
      for (int m = 0; m < k - 1; ++m) {
        b.currents(0, m) = 1.0;
        b.currents(m + 1, m) = -1.0;
      }
      break;
    case BasisKind::gram_schmidt:
      // Orthonormalised e1 - e2, e1 + e2 - 2 e3, ...
      for (int m = 1; m < k; ++m) {
        const double s = 1.0 / std::sqrt(static_cast<double>(m) * (m + 1));
        for (int j = 0; j < m; ++j) b.currents(j, m - 1) = s;
        b.currents(m, m - 1) = -m * s;
      }
      break;
  }
  b.currents *= amplitude;
  return b;
}

NoisyData apply_noise(const Mat& voltages, const CurrentBasis& basis, const NoiseSpec& spec) {
  if (!voltages.allFinite()) throw InvalidArgument("apply_noise: non-finite voltages");
  if (!(spec.sigma >= 0.0)) throw InvalidArgument("apply_noise: sigma must be non-negative");
  if (voltages.rows() != basis.k() || voltages.cols() != basis.dim())
    throw InvalidArgument("apply_noise: voltage shape does not match the basis");
  NoisyData out;
  out.noisy = voltages;
  if (spec.sigma > 0.0) {
    SplitMix64 rng(spec.seed);
    for (Eigen::Index j = 0; j < voltages.cols(); ++j)
      for (Eigen::Index i = 0; i < voltages.rows(); ++i)
        out.noisy(i, j) += voltages(i, j) * spec.sigma * rng.normal();
  }
  out.symmetrized = symmetrize_data(out.noisy, basis.currents);
  const auto frame = orthonormal_frame(basis.currents);
  const Mat diff = sym(frame_representation(out.symmetrized, frame)) -
                   sym(frame_representation(voltages, frame));
  out.delta_bound = max_abs_eigenvalue(diff);
  const double vn = voltages.norm();
  out.relative_error = vn > 0.0 ? (voltages - out.symmetrized).norm() / vn : 0.0;
  return out;
}

}  // namespace monoeit
