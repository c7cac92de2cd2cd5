#pragma once

#include "arxid/linalg.hpp"

#include <vector>

namespace arxid {

/// An ARX system
///   y_t = sum_i A_i y_{t-i} + sum_j B_j u_{t-j} + Sigma_w^{1/2} w_t
/// with known orders (p, q).
struct ARXParams {
  int p = 1;
  int q = 1;
  int n_y = 1;
  int n_u = 1;
  std::vector<Mat> A;  // p matrices, n_y x n_y
  std::vector<Mat> B;  // q matrices, n_y x n_u
  Mat sigma_w;         // n_y x n_y, symmetric PSD

  int n_x() const { return p * n_y + q * n_u; }

  /// Throws InvalidParameter / DimensionMismatch when the fields are
  /// inconsistent or Sigma_w is not symmetric PSD (tolerance 1e-10).
  void validate() const;
};

/// The stacked parameter matrix [A_1 ... A_p B_1 ... B_q] (n_y x n_x).
struct ThetaMatrix {
  Mat entries;

  static ThetaMatrix pack(const ARXParams& params);
  /// Rebuilds an ARXParams with the given orders and noise covariance.
  ARXParams unpack(int p, int q, int n_u, const Mat& sigma_w) const;
};

/// Regressor dynamics x_{t+1} = A x_t + B_u u_t + B_w w_t.
struct LiftedSystem {
  Mat A;    // n_x x n_x
  Mat B_u;  // n_x x n_u
  Mat B_w;  // n_x x n_y
  int n_x = 0;
  int n_y_block = 0;  // p * n_y, size of the output-history block

  Mat A11() const { return A.topLeftCorner(n_y_block, n_y_block); }
  Mat A12() const { return A.topRightCorner(n_y_block, n_x - n_y_block); }
  Mat A22() const { return A.bottomRightCorner(n_x - n_y_block, n_x - n_y_block); }
};

/// x_t = [y_{t-1}; ...; y_{t-p}; u_{t-1}; ...; u_{t-q}].
struct Regressor {
  Vec x;
};

LiftedSystem lift(const ARXParams& params);

/// Lift of an estimate: the dynamics come from `theta`, B_u from the orders,
/// and B_w from `sigma_w`.
LiftedSystem lift(const ThetaMatrix& theta, int p, int q, int n_u, const Mat& sigma_w);

/// Maximum eigenvalue modulus. Throws NumericalError if the Schur iteration
/// does not converge.
double spectral_radius(const Mat& M);

struct TransientOptions {
  int min_k = 20;
  int patience = 50;
  int max_k = 100000;
};

/// beta(A) = sup_k ||A^k|| ((1 + rho)/2)^{-k}, approximated by scanning k
/// upward. The scan stops once k >= min_k and the term has stayed below the
/// running maximum for `patience` consecutive steps. This is a heuristic: the
/// supremum runs over all k.
double transient_constant(const LiftedSystem& L, const TransientOptions& opts = {});
double transient_constant(const Mat& A, const TransientOptions& opts = {});

/// Stacks the regressor at time t from histories indexed from time 0.
/// Entries with negative time index are zero.
Regressor pack_regressor(const std::vector<Vec>& y_history, const std::vector<Vec>& u_history, int t, int p,
                         int q);

/// The 2-output, 2-input example system (p = 2, q = 1, Sigma_w = I).
ARXParams paper_system();

}  // namespace arxid
