#pragma once

// Reference computations used to check the library. Everything here is
// written from the defining formulas (sums, enumeration, fixed points)
// without calling the library routine it is meant to check.

#include "arxid/designer.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace arxid::oracles {

/// Companion-form lift built entry by entry from the ARX matrices.
struct DirectLift {
  Mat A, B_u, B_w;
};
DirectLift direct_lift(const ARXParams& params);

/// Roots of the characteristic polynomial (Faddeev-LeVerrier coefficients,
/// Durand-Kerner iteration); the largest modulus.
double spectral_radius_by_roots(const Mat& M);

/// sum_{s<t} A^s B B^T (A^s)^T by repeated multiplication.
Mat gramian_by_sum(const Mat& A, const Mat& B, int t);

/// Largest singular value by power iteration on M^T M.
double power_iteration_norm(const Mat& M, int max_iter = 10000, double tol = 1e-15);

/// Solution of X = A X A^T + Q by fixed-point iteration.
Mat lyapunov_fixed_point(const Mat& A, const Mat& Q, int max_iter = 100000, double tol = 1e-14);

/// u_t = (1/k) sum_l c_l e^{j 2 pi l t / k} by direct summation, complex.
std::vector<CVec> inverse_dft(const FourierCoefficients& c);

/// F_l = (z I - A)^{-1} B_u solved column by column with a dense LU.
CMat resolvent_response(const Mat& A, const Mat& B, int l, int k);

/// Noiseless lifted process driven by the periodic input of `c`: discards
/// `discard` steps, then averages x x^T over `periods` full periods and
/// divides by gamma^2.
Mat time_average_covariance(const DirectLift& L, const FourierCoefficients& c, std::int64_t discard, int periods);

/// Exhaustive search over trace allocations (s_0, s_1) with s_0 + s_1 <= budget
/// on a grid of the given relative step, for n_u = 1 and k = 2.
struct GridResult {
  double value = 0.0;
  double s0 = 0.0;
  double s1 = 0.0;
  std::int64_t evaluations = 0;
};
GridResult grid_search_k2(const DesignProblem& p, double step = 1e-3);

/// Central difference of lambda_min along a direction in allocation space.
double lambda_min_directional_fd(const DesignProblem& p, const FrequencyAllocation& a,
                                 const FrequencyAllocation& direction, double h);

/// Least squares through the normal equations with a Cholesky factor.
Mat normal_equations(const Mat& X, const Mat& Y);

/// A random stable ARX instance: Gaussian coefficients, then A_i scaled by
/// s^i so that rho(A11) equals `rho`.
ARXParams random_stable_system(int n_y, int n_u, int p, int q, double rho, std::uint64_t seed);

}  // namespace arxid::oracles
