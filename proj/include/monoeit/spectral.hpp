#pragma once

#include "monoeit/types.hpp"

namespace monoeit {

/// Moore-Penrose pseudoinverse (I^T I)^{-1} I^T of a full-column-rank matrix.
/// Throws InvalidArgument when the columns are (numerically) dependent.
Mat pseudoinverse(const Mat& currents);

// Orthonormal frame spanning the same subspace as the columns of a current matrix:
// frame = currents * L^{-T} with currents^T currents = L L^T.
struct OrthonormalFrame {
  Mat frame;
  Mat chol_lower;
};

OrthonormalFrame orthonormal_frame(const Mat& currents);

// Symmetric part (M + M^T) / 2.
Mat sym(const Mat& m);

/// Noisy voltage columns (one per current pattern) projected to a self-adjoint
/// map: columns are made mean-free, the induced electrode-space map
/// Vtilde * pinv(I) is symmetrised and applied back to I.
Mat symmetrize_data(const Mat& vtilde, const Mat& currents);

/// Matrix of the linear map R with R * currents = voltages, expressed in the
/// orthonormal frame of `currents`. Similar to pinv(currents) * voltages, hence
/// the same spectrum; symmetric whenever R is self-adjoint.
Mat frame_representation(const Mat& voltages, const OrthonormalFrame& frame);

double min_eigenvalue(const Mat& m);
double max_abs_eigenvalue(const Mat& m);  // spectral norm of a symmetric matrix

/// |min eig(S) - min eig(T)| <= ||S - T||_2 (+1e-12 slack).
bool spectral_continuity_check(const Mat& s, const Mat& t);

}  // namespace monoeit
