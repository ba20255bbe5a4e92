#include "monoeit/spectral.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace monoeit {

namespace {

void require_square_finite(const Mat& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidArgument(std::string(what) + ": matrix not square");
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
}

Vec eigenvalues(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return es.eigenvalues();
}

}  // namespace

Mat pseudoinverse(const Mat& currents) {
  if (currents.cols() == 0 || currents.rows() < currents.cols())
    throw InvalidArgument("pseudoinverse: need at least as many rows as columns");
  const Mat gram = currents.transpose() * currents;
  const Vec ev = eigenvalues(gram);
  if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff()))
    throw InvalidArgument("pseudoinverse: current basis is rank deficient");
  return gram.ldlt().solve(currents.transpose());
}

OrthonormalFrame orthonormal_frame(const Mat& currents) {
  pseudoinverse(currents);  // rank check
  Eigen::LLT<Mat> llt(currents.transpose() * currents);
  OrthonormalFrame out;
  out.chol_lower = llt.matrixL();
  // frame^T = L^{-1} currents^T
  out.frame = llt.matrixL().solve(currents.transpose()).transpose();
  return out;
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

Mat symmetrize_data(const Mat& vtilde, const Mat& currents) {
  if (vtilde.rows() != currents.rows() || vtilde.cols() != currents.cols())
    throw InvalidArgument("symmetrize_data: voltage and current matrices differ in shape");
  Mat centred = vtilde.rowwise() - vtilde.colwise().mean();
  const Mat map = sym(centred * pseudoinverse(currents));
  Mat out = map * currents;
  out.rowwise() -= out.colwise().mean();
  return out;
}

Mat frame_representation(const Mat& voltages, const OrthonormalFrame& frame) {
  // R * frame = voltages * L^{-T}
  const Mat r_frame =
      frame.chol_lower.triangularView<Eigen::Lower>().solve(voltages.transpose()).transpose();
  return frame.frame.transpose() * r_frame;
}

double min_eigenvalue(const Mat& m) {
  require_square_finite(m, "min_eigenvalue");
  if (m.rows() == 0) return 0.0;
  return eigenvalues(m).minCoeff();
}

double max_abs_eigenvalue(const Mat& m) {
  require_square_finite(m, "max_abs_eigenvalue");
  if (m.rows() == 0) return 0.0;
  return eigenvalues(m).cwiseAbs().maxCoeff();
}

bool spectral_continuity_check(const Mat& s, const Mat& t) {
  if (s.rows() != t.rows() || s.cols() != t.cols())
    throw InvalidArgument("spectral_continuity_check: dimension mismatch");
  const double gap = std::abs(min_eigenvalue(s) - min_eigenvalue(t));
  return gap <= max_abs_eigenvalue(s - t) + 1e-12;
}

}  // namespace monoeit
