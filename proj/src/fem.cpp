#include "monoeit/fem.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "monoeit/spectral.hpp"

namespace monoeit {

struct CemSystem::Factor {
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

Conductivity Conductivity::constant(int num_triangles, double value) {
  Conductivity c;
  c.values = Vec::Constant(num_triangles, value);
  c.lower_bound = value;
  return c;
}

void Conductivity::validate() const {
  if (!(lower_bound > 0.0)) throw InvalidArgument("conductivity lower bound must be positive");
  if (!values.allFinite()) throw InvalidArgument("conductivity has non-finite values");
  if (values.size() > 0 && values.minCoeff() < lower_bound)
    throw InvalidArgument("conductivity value below its lower bound");
}

ContactImpedance ContactImpedance::uniform(int k, double value) {
  return ContactImpedance{Vec::Constant(k, value)};
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::trig:
      return "trig";
    case BasisKind::dipole:
      return "dipole";
    case BasisKind::gram_schmidt:
      return "gram_schmidt";
  }
  return "unknown";
}

BasisKind parse_basis_kind(const std::string& name) {
  if (name == "trig") return BasisKind::trig;
  if (name == "dipole") return BasisKind::dipole;
  if (name == "gram_schmidt") return BasisKind::gram_schmidt;
  throw InvalidArgument("unknown basis kind '" + name + "'");
}

Eigen::Matrix<double, 2, 3> p1_gradients(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Point& a = mesh.nodes[tri[0]];
  const Point& b = mesh.nodes[tri[1]];
  const Point& c = mesh.nodes[tri[2]];
  const double two_area = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  Eigen::Matrix<double, 2, 3> g;
  g << b.y() - c.y(), c.y() - a.y(), a.y() - b.y(),  //
      c.x() - b.x(), a.x() - c.x(), b.x() - a.x();
  return g / two_area;
}

SpMat assemble_stiffness(const Mesh& mesh, const Vec& coefficients) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (coefficients[t] == 0.0) continue;
    const auto g = p1_gradients(mesh, t);
    const Eigen::Matrix3d local = coefficients[t] * mesh.area(t) * (g.transpose() * g);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local(i, j));
  }
  SpMat k(mesh.num_nodes(), mesh.num_nodes());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Mat field_gradients(const Mesh& mesh, const Vec& nodal) {
  Mat out(mesh.num_triangles(), 2);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector3d local(nodal[tri[0]], nodal[tri[1]], nodal[tri[2]]);
    out.row(t) = (p1_gradients(mesh, t) * local).transpose();
  }
  return out;
}

CemSystem::CemSystem(const Mesh& mesh, const ElectrodeLayout& layout, const Conductivity& gamma,
                     const ContactImpedance& z)
    : mesh_(&mesh), layout_(&layout), gamma_(gamma), z_(z) {
  num_nodes_ = mesh.num_nodes();
  k_ = layout.k;
  gamma_.validate();
  if (gamma_.values.size() != mesh.num_triangles())
    throw InvalidArgument("conductivity size does not match triangle count");
  if (z_.z.size() != k_) throw InvalidArgument("contact impedance size does not match electrodes");
  for (int j = 0; j < k_; ++j)
    if (!(z_.z[j] > 0.0) || !std::isfinite(z_.z[j]))
      throw InvalidArgument("contact impedance z_" + std::to_string(j) + " must be positive");

  const int n = num_nodes_ + k_;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangles.size() + 8 * mesh.boundary.size() + k_ * k_);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = p1_gradients(mesh, t);
    const Eigen::Matrix3d local = gamma_.values[t] * mesh.area(t) * (g.transpose() * g);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local(i, j));
  }
  for (int j = 0; j < k_; ++j) {
    const double inv_z = 1.0 / z_.z[j];
    const int vj = num_nodes_ + j;
    for (int e : layout.edges[j]) {
      const auto& be = mesh.boundary[e];
      const double len = mesh.edge_length(be);
      const double d = inv_z * len / 3.0;
      const double o = inv_z * len / 6.0;
      trip.emplace_back(be.a, be.a, d);
      trip.emplace_back(be.b, be.b, d);
      trip.emplace_back(be.a, be.b, o);
      trip.emplace_back(be.b, be.a, o);
      const double c = -inv_z * len / 2.0;
      trip.emplace_back(be.a, vj, c);
      trip.emplace_back(vj, be.a, c);
      trip.emplace_back(be.b, vj, c);
      trip.emplace_back(vj, be.b, c);
      trip.emplace_back(vj, vj, inv_z * len);
    }
  }
  form_.resize(n, n);
  form_.setFromTriplets(trip.begin(), trip.end());

  double scale = 0.0;
  for (int j = 0; j < k_; ++j) scale = std::max(scale, form_.coeff(num_nodes_ + j, num_nodes_ + j));
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j) trip.emplace_back(num_nodes_ + i, num_nodes_ + j, scale / k_);
  augmented_.resize(n, n);
  augmented_.setFromTriplets(trip.begin(), trip.end());

  auto factor = std::make_shared<Factor>();
  factor->llt.compute(augmented_);
  if (factor->llt.info() != Eigen::Success)
    throw NumericalError("CEM system is singular; check mesh and electrode layout");
  factor_ = std::move(factor);
}

double CemSystem::relative_residual(const Vec& x, const Vec& rhs) const {
  const double nb = rhs.norm();
  if (nb == 0.0) return x.norm();
  return (augmented_ * x - rhs).norm() / nb;
}

Vec CemSystem::solve_rhs(const Vec& rhs) const {
  if (rhs.size() != num_nodes_ + k_) throw InvalidArgument("right-hand side has wrong size");
  if (rhs.squaredNorm() == 0.0) return Vec::Zero(rhs.size());
  Vec x = factor_->llt.solve(rhs);
  double res = relative_residual(x, rhs);
  if (res > 1e-12) {
    x += factor_->llt.solve(rhs - augmented_ * x);
    res = relative_residual(x, rhs);
  }
  if (!(res <= 1e-10)) throw NumericalError("CEM solve residual " + std::to_string(res));
  return x;
}

CemSolution CemSystem::solve(const Vec& current) const {
  if (current.size() != k_) throw InvalidArgument("current vector length differs from k");
  const double scale = current.cwiseAbs().sum();
  if (std::abs(current.sum()) > 1e-12 * std::max(scale, 1e-300) && scale > 0.0)
    throw InvalidArgument("current pattern must sum to zero");
  Vec rhs = Vec::Zero(num_nodes_ + k_);
  rhs.tail(k_) = current;
  const Vec x = solve_rhs(rhs);
  return {x.head(num_nodes_), x.tail(k_)};
}

std::vector<CemSolution> CemSystem::solve_all(const Mat& currents) const {
  std::vector<CemSolution> out(currents.cols());
  for (Eigen::Index m = 0; m < currents.cols(); ++m) out[m] = solve(currents.col(m));
  return out;
}

Mat CemSystem::solve_voltages(const Mat& currents) const {
  Mat out(k_, currents.cols());
  for (Eigen::Index m = 0; m < currents.cols(); ++m) out.col(m) = solve(currents.col(m)).V;
  return out;
}

Vec contact_energies(const CemSystem& system, const CemSolution& sol) {
  const Mesh& mesh = system.mesh();
  const ElectrodeLayout& layout = system.layout();
  Vec out = Vec::Zero(layout.k);
  for (int j = 0; j < layout.k; ++j) {
    for (int e : layout.edges[j]) {
      const auto& be = mesh.boundary[e];
      const double a = sol.v[be.a] - sol.V[j];
      const double b = sol.v[be.b] - sol.V[j];
      out[j] += mesh.edge_length(be) * (a * a + a * b + b * b) / 3.0;
    }
  }
  return out;
}

Mat MeasurementMatrix::standard() const {
  const auto f = orthonormal_frame(basis.currents);
  return f.frame * entries * f.frame.transpose();
}

MeasurementMatrix measurement_matrix(const CemSystem& system, const CurrentBasis& basis) {
  if (basis.k() != system.k()) throw InvalidArgument("basis size differs from electrode count");
  const auto frame = orthonormal_frame(basis.currents);
  const Mat v_frame = system.solve_voltages(frame.frame);
  const Mat raw = frame.frame.transpose() * v_frame;
  MeasurementMatrix out;
  out.raw_asymmetry = (raw - raw.transpose()).norm() / std::max(raw.norm(), 1e-300);
  out.entries = sym(raw);
  out.basis = basis;
  out.voltages = v_frame * frame.chol_lower.transpose();
  return out;
}

MeasurementMatrix measurement_from_voltages(const Mat& voltages, const CurrentBasis& basis) {
  if (voltages.rows() != basis.k() || voltages.cols() != basis.dim())
    throw InvalidArgument("voltage matrix shape does not match the current basis");
  const auto frame = orthonormal_frame(basis.currents);
  const Mat raw = frame_representation(voltages, frame);
  MeasurementMatrix out;
  out.raw_asymmetry = (raw - raw.transpose()).norm() / std::max(raw.norm(), 1e-300);
  out.entries = sym(raw);
  out.basis = basis;
  out.voltages = voltages;
  return out;
}

SensitivityTensor::SensitivityTensor(int num_triangles, int dim)
    : dim_(dim), slot_(num_triangles, -1) {}

void SensitivityTensor::reserve(int count) {
  if (2 * count > rows_.rows()) rows_.conservativeResize(2 * count, dim_);
}

bool SensitivityTensor::covers(int triangle) const {
  return triangle >= 0 && triangle < static_cast<int>(slot_.size()) && slot_[triangle] >= 0;
}

void SensitivityTensor::set(int triangle, double area,
                            const Eigen::Matrix<double, 2, Eigen::Dynamic>& grads) {
  if (triangle < 0 || triangle >= static_cast<int>(slot_.size()))
    throw InvalidArgument("triangle index out of range");
  if (slot_[triangle] < 0) {
    if (2 * used_ >= rows_.rows()) reserve(std::max(8, 2 * used_));
    slot_[triangle] = used_++;
  }
  rows_.middleRows(2 * slot_[triangle], 2) = std::sqrt(area) * grads;
}

Mat SensitivityTensor::block(int triangle) const {
  if (!covers(triangle))
    throw InvalidArgument("triangle " + std::to_string(triangle) + " not in sensitivity tensor");
  const auto r = rows_.middleRows(2 * slot_[triangle], 2);
  return -factor_ * (r.transpose() * r);
}

Mat SensitivityTensor::apply(std::span<const int> triangles) const {
  Mat stacked(2 * triangles.size(), dim_);
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const int t = triangles[i];
    if (!covers(t))
      throw InvalidArgument("triangle " + std::to_string(t) + " not in sensitivity tensor");
    stacked.middleRows(2 * i, 2) = rows_.middleRows(2 * slot_[t], 2);
  }
  Mat out = Mat::Zero(dim_, dim_);
  out.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose(), -factor_);
  return out.selfadjointView<Eigen::Lower>();
}

SensitivityTensor SensitivityTensor::scaled(double factor) const {
  SensitivityTensor out = *this;
  out.factor_ *= factor;
  return out;
}

SensitivityTensor sensitivity_tensor(const CemSystem& background, const CurrentBasis& basis,
                                     std::optional<std::span<const int>> subset) {
  if (basis.k() != background.k()) throw InvalidArgument("basis size differs from electrode count");
  const Mesh& mesh = background.mesh();
  const auto frame = orthonormal_frame(basis.currents);
  const int dim = basis.dim();
  Mat potentials(mesh.num_nodes(), dim);
  for (int m = 0; m < dim; ++m) potentials.col(m) = background.solve(frame.frame.col(m)).v;

  std::vector<int> tris;
  if (subset) {
    tris.assign(subset->begin(), subset->end());
  } else {
    tris.resize(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) tris[t] = t;
  }
  SensitivityTensor out(mesh.num_triangles(), dim);
  out.reserve(static_cast<int>(tris.size()));
  for (int t : tris) {
    if (t < 0 || t >= mesh.num_triangles()) throw InvalidArgument("triangle index out of range");
    const auto& tri = mesh.triangles[t];
    Eigen::Matrix<double, 3, Eigen::Dynamic> local(3, dim);
    for (int i = 0; i < 3; ++i) local.row(i) = potentials.row(tri[i]);
    out.set(t, mesh.area(t), p1_gradients(mesh, t) * local);
  }
  return out;
}

Mat apply_sensitivity(const SensitivityTensor& tensor, const TestCell& cell) {
  return tensor.apply(cell.triangles);
}

}  // namespace monoeit
