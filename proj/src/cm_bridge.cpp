#include "monoeit/cm_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "monoeit/spectral.hpp"
#include "monoeit/synthdata.hpp"

namespace monoeit {

CmCurrentBasis CmCurrentBasis::trig(int p) {
  if (p < 2 || p % 2 != 0) throw InvalidArgument("CM trig basis needs an even p >= 2");
  return CmCurrentBasis{p};
}

double CmCurrentBasis::density(int m, double theta) const {
  const double s = 1.0 / std::sqrt(kPi);
  const int half = p / 2;
  if (m < half) return s * std::cos((m + 1) * theta);
  return s * std::sin((m + 1 - half) * theta);
}

struct NeumannSystem::Factor {
  Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

NeumannSystem::NeumannSystem(const Mesh& mesh, const Conductivity& gamma)
    : mesh_(&mesh), gamma_(gamma) {
  gamma_.validate();
  if (gamma_.values.size() != mesh.num_triangles())
    throw InvalidArgument("conductivity size does not match triangle count");
  mass_ = Vec::Zero(mesh.num_nodes());
  for (const auto& be : mesh.boundary) {
    const double len = mesh.edge_length(be);
    mass_[be.a] += 0.5 * len;
    mass_[be.b] += 0.5 * len;
  }
  // Pin node 0 (the centre); mean-free loads only fix u up to a constant anyway.
  matrix_ = assemble_stiffness(mesh, gamma_.values);
  for (int col = 0; col < matrix_.outerSize(); ++col)
    for (SpMat::InnerIterator it(matrix_, col); it; ++it)
      if (it.row() == 0 || it.col() == 0) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
  auto factor = std::make_shared<Factor>();
  factor->llt.compute(matrix_);
  if (factor->llt.info() != Eigen::Success) throw NumericalError("Neumann system is singular");
  factor_ = std::move(factor);
}

Vec NeumannSystem::load(const std::function<double(double)>& f) const {
  const Mesh& mesh = *mesh_;
  static const double gs[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  Vec out = Vec::Zero(mesh.num_nodes());
  for (const auto& be : mesh.boundary) {
    const Point& a = mesh.nodes[be.a];
    const Point& b = mesh.nodes[be.b];
    const double len = (b - a).norm();
    for (int q = 0; q < 3; ++q) {
      const Point x = (1.0 - gs[q]) * a + gs[q] * b;
      const double val = f(std::atan2(x.y(), x.x())) * gw[q] * len;
      out[be.a] += (1.0 - gs[q]) * val;
      out[be.b] += gs[q] * val;
    }
  }
  out -= (out.sum() / mass_.sum()) * mass_;
  return out;
}

Vec NeumannSystem::solve(const Vec& load) const {
  if (load.size() != mesh_->num_nodes()) throw InvalidArgument("load vector has wrong size");
  if (std::abs(load.sum()) > 1e-10 * std::max(1.0, load.cwiseAbs().sum()))
    throw InvalidArgument("Neumann load must have zero mean");
  Vec rhs = load;
  rhs[0] = 0.0;
  Vec u = factor_->llt.solve(rhs);
  if (!u.allFinite()) throw NumericalError("Neumann solve produced non-finite values");
  u -= (mass_.dot(u) / mass_.sum()) * Vec::Ones(u.size());
  return u;
}

Mat cm_loads(const NeumannSystem& system, const CmCurrentBasis& basis) {
  Mat f(system.mesh().num_nodes(), basis.p);
  for (int m = 0; m < basis.p; ++m)
    f.col(m) = system.load([&](double t) { return basis.density(m, t); });
  return f;
}

namespace {

Mat solve_columns(const NeumannSystem& system, const Mat& loads) {
  Mat u(loads.rows(), loads.cols());
  for (Eigen::Index m = 0; m < loads.cols(); ++m) u.col(m) = system.solve(loads.col(m));
  return u;
}

}  // namespace

Mat cm_forward_nd(const Mesh& mesh, const Conductivity& gamma, const CmCurrentBasis& basis) {
  NeumannSystem system(mesh, gamma);
  const Mat f = cm_loads(system, basis);
  return sym(f.transpose() * solve_columns(system, f));
}

CmBackground cm_background(const Mesh& mesh, const Conductivity& gamma0,
                           const CmCurrentBasis& basis) {
  NeumannSystem system(mesh, gamma0);
  const Mat f = cm_loads(system, basis);
  CmBackground out;
  out.potentials = solve_columns(system, f);
  out.nd = sym(f.transpose() * out.potentials);
  out.sensitivity = SensitivityTensor(mesh.num_triangles(), basis.p);
  out.sensitivity.reserve(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    Eigen::Matrix<double, 3, Eigen::Dynamic> local(3, basis.p);
    for (int i = 0; i < 3; ++i) local.row(i) = out.potentials.row(tri[i]);
    out.sensitivity.set(t, mesh.area(t), p1_gradients(mesh, t) * local);
  }
  return out;
}

Mat cm_linearized_test_matrix(const CmBackground& background, double beta, const TestCell& cell,
                              const Mat& data) {
  if (data.rows() != background.nd.rows() || data.cols() != background.nd.cols())
    throw InvalidArgument("CM data matrix has wrong size");
  return background.nd + beta * apply_sensitivity(background.sensitivity, cell) - data;
}

CmMonotonicityBounds cm_monotonicity_bounds(const NeumannSystem& tilde, const NeumannSystem& sys,
                                            const Vec& load) {
  const Mesh& mesh = tilde.mesh();
  const Vec ut = tilde.solve(load);
  const Vec u = sys.solve(load);
  const Mat grad = field_gradients(mesh, ut);
  const Vec& g = sys.conductivity().values;
  const Vec& gt = tilde.conductivity().values;
  CmMonotonicityBounds b;
  b.value = load.dot(ut - u);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double e = mesh.area(t) * grad.row(t).squaredNorm();
    b.lower += gt[t] / g[t] * (g[t] - gt[t]) * e;
    b.upper += (g[t] - gt[t]) * e;
  }
  return b;
}

ProjectionOperators::ProjectionOperators(int k, double coverage, const Vec& z, int grid)
    : k_(k), z_(z) {
  if (grid < 4 * k) throw InvalidArgument("boundary grid too coarse for the electrode count");
  if (z.size() != k) throw InvalidArgument("contact impedance size differs from k");
  extended_ = build_extended_electrodes(k, coverage);
  const auto electrodes = equispaced_arcs(k, coverage);
  weight_ = kTwoPi / grid;
  theta_.resize(grid);
  ext_of_.resize(grid);
  elec_of_.assign(grid, -1);
  ext_measure_ = Vec::Zero(k);
  for (int i = 0; i < grid; ++i) {
    const double t = (i + 0.5) * weight_;
    theta_[i] = t;
    int j = static_cast<int>(std::floor(t / (kTwoPi / k)));
    j = std::clamp(j, 0, k - 1);
    ext_of_[i] = j;
    ext_measure_[j] += weight_;
    if (electrodes[j].contains(t)) elec_of_[i] = j;
  }
  elec_length_.resize(k);
  for (int j = 0; j < k; ++j) elec_length_[j] = electrodes[j].width();
}

Vec ProjectionOperators::sample(const std::function<double(double)>& f) const {
  Vec out(grid_size());
  for (int i = 0; i < grid_size(); ++i) out[i] = f(theta_[i]);
  return out;
}

Vec ProjectionOperators::Q(const Vec& W) const {
  if (W.size() != k_) throw InvalidArgument("Q: vector length differs from k");
  Vec out(grid_size());
  for (int i = 0; i < grid_size(); ++i) out[i] = W[ext_of_[i]];
  return out;
}

Vec ProjectionOperators::Qstar(const Vec& f) const {
  if (f.size() != grid_size()) throw InvalidArgument("Q*: density not on the boundary grid");
  Vec out = Vec::Zero(k_);
  for (int i = 0; i < grid_size(); ++i) out[ext_of_[i]] += f[i] * weight_;
  return out;
}

Mat ProjectionOperators::Qstar(const Mat& columns) const {
  Mat out(k_, columns.cols());
  for (Eigen::Index c = 0; c < columns.cols(); ++c) out.col(c) = Qstar(Vec(columns.col(c)));
  return out;
}

Vec ProjectionOperators::L(const Vec& f) const {
  return f - Vec::Constant(f.size(), mean(f));
}

Vec ProjectionOperators::P(const Vec& f) const {
  if (f.size() != grid_size()) throw InvalidArgument("P: density not on the boundary grid");
  Vec sum = Vec::Zero(k_);
  Vec count = Vec::Zero(k_);
  for (int i = 0; i < grid_size(); ++i) {
    if (elec_of_[i] < 0) continue;
    sum[elec_of_[i]] += f[i];
    count[elec_of_[i]] += 1.0;
  }
  return sum.cwiseQuotient(count);
}

Mat ProjectionOperators::Z() const {
  return z_.cwiseQuotient(elec_length_).asDiagonal();
}

double ProjectionOperators::inner(const Vec& f, const Vec& g) const {
  return weight_ * f.dot(g);
}

double ProjectionOperators::mean(const Vec& f) const { return f.mean(); }

Vec ProjectionOperators::density_of(const Vec& I) const {
  if (I.size() != k_) throw InvalidArgument("density_of: vector length differs from k");
  return Q(I.cwiseQuotient(ext_measure_));
}

CemCmOperator::CemCmOperator(const Mat& r_standard, const ProjectionOperators& ops)
    : ops_(&ops) {
  if (r_standard.rows() != ops.k() || r_standard.cols() != ops.k())
    throw InvalidArgument("CEM map size differs from the extended-electrode count");
  r_minus_z_ = r_standard - ops.Z();
}

Vec CemCmOperator::apply(const Vec& f) const {
  if (std::abs(ops_->mean(f)) > 1e-10 * std::max(f.cwiseAbs().maxCoeff(), 1e-300))
    throw InvalidArgument("density is not mean-free");
  return ops_->L(ops_->Q(r_minus_z_ * ops_->Qstar(f)));
}

Mat CemCmOperator::gram(const Mat& densities) const {
  const Mat phi = ops_->Qstar(densities);
  return sym(phi.transpose() * r_minus_z_ * phi);
}

CemCmOperator cem_to_cm_approximation(const MeasurementMatrix& r, const ProjectionOperators& ops) {
  if (r.basis.k() != ops.k()) throw InvalidArgument("measurement and projection sizes differ");
  return CemCmOperator(r.standard(), ops);
}

TransferVerdict semidefiniteness_transfer_check(const Mat& A, const Mat& frame,
                                                const ProjectionOperators& ops,
                                                int random_samples, std::uint64_t seed) {
  if (A.rows() != A.cols() || A.rows() != frame.cols() || frame.rows() != ops.k())
    throw InvalidArgument("transfer check: inconsistent dimensions");
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(A));
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 1e-10 * scale;
  const Mat a_std = frame * sym(A) * frame.transpose();

  TransferVerdict v;
  v.matrix_psd = es.eigenvalues().minCoeff() >= -tol;
  v.operator_psd = true;
  auto form = [&](const Vec& f) {
    return ops.inner(ops.L(ops.Q(a_std * ops.Qstar(f))), f);
  };
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    const Vec f = ops.density_of(frame * es.eigenvectors().col(c));
    const double qf = ops.Qstar(f).squaredNorm();
    if (form(f) < -tol * qf) v.operator_psd = false;
  }
  SplitMix64 rng(seed);
  for (int s = 0; s < random_samples; ++s) {
    Vec f(ops.grid_size());
    for (int i = 0; i < f.size(); ++i) f[i] = rng.normal();
    f = ops.L(f);
    const double qf = ops.Qstar(f).squaredNorm();
    if (form(f) < -tol * qf) v.operator_psd = false;
  }
  return v;
}

double poincare_defect(const ProjectionOperators& ops, const std::function<double(double)>& f) {
  const Vec g = ops.sample(f);
  return ops.norm(g - ops.Q(ops.P(g)));
}

std::vector<ConvergenceRow> convergence_sweep(const Mesh& mesh, const Conductivity& gamma,
                                              std::span<const int> ks, double coverage, double z,
                                              int grid) {
  if (ks.empty()) throw InvalidArgument("convergence sweep needs at least one k");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1]) throw InvalidArgument("k list must be strictly increasing");
  std::vector<ConvergenceRow> rows;
  for (int k : ks) {
    const auto layout = build_electrode_layout(mesh, k, coverage);
    CemSystem system(mesh, layout, gamma, ContactImpedance::uniform(k, z));
    const auto r = measurement_matrix(system, current_basis(BasisKind::gram_schmidt, k));
    ProjectionOperators ops(k, coverage, Vec::Constant(k, z), grid);
    const auto basis = CmCurrentBasis::trig(2 * k);
    Mat densities(ops.grid_size(), basis.p);
    for (int m = 0; m < basis.p; ++m)
      densities.col(m) = ops.sample([&](double t) { return basis.density(m, t); });
    const Mat nd = cm_forward_nd(mesh, gamma, basis);
    const Mat approx = cem_to_cm_approximation(r, ops).gram(densities);
    ConvergenceRow row;
    row.k = k;
    row.h_extended = 2.0 * std::sin(kPi / k);
    row.norm_estimate = max_abs_eigenvalue(sym(nd - approx));
    row.ratio_vs_prev = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : row.norm_estimate / rows.back().norm_estimate;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace monoeit
