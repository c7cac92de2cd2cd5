#include "arxid/linalg.hpp"

#include "arxid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace arxid {

Mat psd_sqrt(const Mat& S, double neg_tol, double clamp_below) {
  if (S.rows() != S.cols()) throw DimensionMismatch("psd_sqrt: matrix is not square");
  if (S.size() == 0) return S;
  if (!S.isApprox(S.transpose(), 1e-10) && (S - S.transpose()).cwiseAbs().maxCoeff() > neg_tol) {
    throw InvalidParameter("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (S + S.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("psd_sqrt: eigendecomposition failed");
  Vec d = eig.eigenvalues();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < -neg_tol * scale) {
      std::ostringstream os;
      os << "psd_sqrt: matrix is not PSD (eigenvalue " << d(i) << ")";
      throw InvalidParameter(os.str());
    }
    d(i) = d(i) < clamp_below ? 0.0 : std::sqrt(d(i));
  }
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

double lambda_min(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(S, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("lambda_min: eigendecomposition failed");
  return eig.eigenvalues()(0);
}

HermitianEigen hermitian_eig(const CMat& H) {
  const Eigen::Index n = H.rows();
  Mat E(2 * n, 2 * n);
  const Mat re = 0.5 * (H.real() + H.real().transpose());
  const Mat im = 0.5 * (H.imag() - H.imag().transpose());
  E << re, -im, im, re;
  Eigen::SelfAdjointEigenSolver<Mat> eig(E);
  if (eig.info() != Eigen::Success) throw NumericalError("hermitian_eig: eigendecomposition failed");

  // Eigenvalues come in pairs: [a; b] and [-b; a] share a value and map to
  // v and i*v. Within each cluster of (numerically) equal eigenvalues of
  // size 2m, pick m complex vectors by pivoted Gram-Schmidt.
  HermitianEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  const Vec& ev = eig.eigenvalues();
  const double tol = 1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Eigen::Index kept = 0;
  Eigen::Index start = 0;
  while (start < 2 * n) {
    Eigen::Index stop = start + 1;
    while (stop < 2 * n && ev(stop) - ev(stop - 1) <= tol) ++stop;
    std::vector<CVec> cand;
    for (Eigen::Index j = start; j < stop; ++j) {
      CVec v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(eig.eigenvectors()(i, j), eig.eigenvectors()(i + n, j));
      cand.push_back(v);
    }
    const Eigen::Index want = (stop - start + 1) / 2;
    for (Eigen::Index w = 0; w < want && kept < n; ++w) {
      std::size_t best = 0;
      double best_norm = -1.0;
      for (std::size_t c = 0; c < cand.size(); ++c) {
        const double nc = cand[c].norm();
        if (nc > best_norm) {
          best_norm = nc;
          best = c;
        }
      }
      if (best_norm < 1e-6) break;
      CVec v = cand[best] / best_norm;
      out.values(kept) = ev.segment(start, stop - start).mean();
      out.vectors.col(kept) = v;
      ++kept;
      for (auto& c : cand) c -= v.dot(c) * v;
    }
    start = stop;
  }
  if (kept != n) throw NumericalError("hermitian_eig: could not separate eigenvector pairs");
  return out;
}

CVec normalize_phase(const CVec& v, double tol) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > tol) return v * (std::conj(v(i)) / a);
  }
  return v;
}

double hermitian_residual(const CMat& H) {
  if (H.size() == 0) return 0.0;
  return (H - H.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace arxid
