#pragma once

#include <Eigen/Dense>

#include <complex>

namespace arxid {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-neg_tol, clamp_below) are clamped to zero; anything more negative is
/// rejected with InvalidParameter.
Mat psd_sqrt(const Mat& S, double neg_tol = 1e-10, double clamp_below = 1e-12);

/// Largest singular value.
double spectral_norm(const Mat& M);

/// Smallest eigenvalue of a real symmetric matrix.
double lambda_min(const Mat& S);

struct HermitianEigen {
  Vec values;    // ascending
  CMat vectors;  // unit-norm columns matching `values`
};

/// Eigendecomposition of a complex Hermitian matrix through the real
/// symmetric embedding [[Re, -Im], [Im, Re]]. Each eigenvalue of the
/// embedding appears twice; one representative per pair is kept.
HermitianEigen hermitian_eig(const CMat& H);

/// Rotates `v` so that its first entry with modulus above `tol` is real and
/// positive.
CVec normalize_phase(const CVec& v, double tol = 1e-12);

/// Largest absolute deviation from Hermitian symmetry.
double hermitian_residual(const CMat& H);

}  // namespace arxid
