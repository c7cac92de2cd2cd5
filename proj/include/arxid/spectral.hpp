#pragma once

#include "arxid/arx_model.hpp"
#include "arxid/simulator.hpp"

#include <vector>

namespace arxid {

/// F_l = (e^{j 2 pi l / k} I - A)^{-1} B_u for l = 0..k-1.
struct FrequencyResponse {
  std::vector<CMat> F;
  int k = 0;
  double max_condition = 0.0;  // worst resolvent condition estimate
  bool ill_conditioned = false;  // some resolvent had condition > 1e12
};

/// Complex Fourier coefficients of a period-k input. Realness requires
/// bins[k - l] == conj(bins[l]).
struct FourierCoefficients {
  std::vector<CVec> bins;
  double gamma = 1.0;

  int k() const { return static_cast<int>(bins.size()); }
  Eigen::Index n_u() const { return bins.empty() ? 0 : bins.front().size(); }
  double energy() const;  // sum_l ||u_l||^2
  /// Largest |bins[k-l] - conj(bins[l])|.
  double symmetry_residual() const;
};

/// Hermitian PSD matrices U_l over k frequency bins, the relaxed design
/// variable.
struct FrequencyAllocation {
  std::vector<CMat> bins;

  int k() const { return static_cast<int>(bins.size()); }
  Eigen::Index n_u() const { return bins.empty() ? 0 : bins.front().rows(); }
  double total_trace() const;
  static FrequencyAllocation zeros(int k, Eigen::Index n_u);
  static FrequencyAllocation outer(const FourierCoefficients& c);
};

/// Mirror bin: (k - l) mod k.
inline int mirror_bin(int l, int k) { return (k - l) % k; }

/// sum_{s=0}^{t-1} A^s B B^T (A^s)^T.
Mat gramian_t(const Mat& A, const Mat& B, int t);

FrequencyResponse frequency_response(const LiftedSystem& L, int k);

/// (1/(gamma^2 k^2)) sum_l F_l u_l u_l^H F_l^H, returned as a real symmetric
/// matrix. Throws InconsistentCoefficients if the imaginary residue exceeds
/// 1e-8 (relative).
Mat steady_cov_vec(const FrequencyResponse& fr, const FourierCoefficients& coeffs);
Mat steady_cov_vec(const LiftedSystem& L, const FourierCoefficients& coeffs);

/// (1/(gamma^2 k^2)) sum_l F_l U_l F_l^H for Hermitian U_l.
Mat steady_cov_mat(const FrequencyResponse& fr, const FrequencyAllocation& alloc, double gamma);
Mat steady_cov_mat(const LiftedSystem& L, const FrequencyAllocation& alloc, double gamma);

/// u_t = (1/k) sum_l u_l e^{j 2 pi l t / k}, t = 0..k-1. Rejects coefficient
/// sets that are not conjugate-symmetric (tolerance 1e-10, relative).
InputSignal synthesize_input(const FourierCoefficients& coeffs);

/// Forward transform of one period: u_l = sum_t u_t e^{-j 2 pi l t / k}.
FourierCoefficients analyze_period(const std::vector<Vec>& one_period, double gamma = 1.0);

}  // namespace arxid
