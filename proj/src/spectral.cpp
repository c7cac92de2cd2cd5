#include "arxid/spectral.hpp"

#include "arxid/errors.hpp"

#include <cmath>
#include <numbers>

namespace arxid {

namespace {

Complex unit_root(long long num, int k) {
  const double ang = 2.0 * std::numbers::pi * static_cast<double>(num % k) / static_cast<double>(k);
  return {std::cos(ang), std::sin(ang)};
}

Mat realify(const CMat& S, const char* who) {
  const double re_scale = std::max(1.0, S.real().cwiseAbs().maxCoeff());
  const double im = S.size() ? S.imag().cwiseAbs().maxCoeff() : 0.0;
  if (im > 1e-8 * re_scale) {
    throw InconsistentCoefficients(std::string(who) +
                                   ": covariance has an imaginary part; coefficients are not conjugate-symmetric");
  }
  Mat R = S.real();
  return 0.5 * (R + R.transpose());
}

}  // namespace

double FourierCoefficients::energy() const {
  double e = 0.0;
  for (const auto& b : bins) e += b.squaredNorm();
  return e;
}

double FourierCoefficients::symmetry_residual() const {
  double r = 0.0;
  const int kk = k();
  for (int l = 0; l < kk; ++l) {
    const int m = mirror_bin(l, kk);
    r = std::max(r, (bins[m] - bins[l].conjugate()).cwiseAbs().maxCoeff());
  }
  return r;
}

double FrequencyAllocation::total_trace() const {
  double t = 0.0;
  for (const auto& b : bins) t += b.trace().real();
  return t;
}

FrequencyAllocation FrequencyAllocation::zeros(int k, Eigen::Index n_u) {
  FrequencyAllocation a;
  a.bins.assign(k, CMat::Zero(n_u, n_u));
  return a;
}

FrequencyAllocation FrequencyAllocation::outer(const FourierCoefficients& c) {
  FrequencyAllocation a;
  for (const auto& b : c.bins) a.bins.push_back(b * b.adjoint());
  return a;
}

Mat gramian_t(const Mat& A, const Mat& B, int t) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) throw DimensionMismatch("gramian_t: shapes disagree");
  if (t < 1) throw InvalidParameter("gramian_t: t must be >= 1");
  Mat G = Mat::Zero(A.rows(), A.rows());
  Mat P = B;
  for (int s = 0; s < t; ++s) {
    G.noalias() += P * P.transpose();
    P = A * P;
  }
  return 0.5 * (G + G.transpose());
}

FrequencyResponse frequency_response(const LiftedSystem& L, int k) {
  if (k < 1) throw InvalidParameter("frequency_response: k must be >= 1");
  FrequencyResponse fr;
  fr.k = k;
  fr.F.reserve(k);
  const CMat A = L.A.cast<Complex>();
  const CMat Bu = L.B_u.cast<Complex>();
  for (int l = 0; l < k; ++l) {
    // Exact mirror for real systems keeps conjugate symmetry bit-for-bit.
    const int m = mirror_bin(l, k);
    if (m < l) {
      fr.F.push_back(fr.F[m].conjugate());
      continue;
    }
    CMat R = unit_root(l, k) * CMat::Identity(L.n_x, L.n_x) - A;
    Eigen::PartialPivLU<CMat> lu(R);
    const double cond = 1.0 / std::max(lu.rcond(), 1e-300);
    fr.max_condition = std::max(fr.max_condition, cond);
    if (cond > 1e12) fr.ill_conditioned = true;
    fr.F.push_back(lu.solve(Bu));
  }
  return fr;
}

Mat steady_cov_vec(const FrequencyResponse& fr, const FourierCoefficients& coeffs) {
  if (coeffs.k() != fr.k) throw DimensionMismatch("steady_cov_vec: bin count mismatch");
  const auto n_x = fr.F.front().rows();
  CMat S = CMat::Zero(n_x, n_x);
  for (int l = 0; l < fr.k; ++l) {
    const CVec z = fr.F[l] * coeffs.bins[l];
    S.noalias() += z * z.adjoint();
  }
  S /= coeffs.gamma * coeffs.gamma * fr.k * static_cast<double>(fr.k);
  return realify(S, "steady_cov_vec");
}

Mat steady_cov_vec(const LiftedSystem& L, const FourierCoefficients& coeffs) {
  return steady_cov_vec(frequency_response(L, coeffs.k()), coeffs);
}

Mat steady_cov_mat(const FrequencyResponse& fr, const FrequencyAllocation& alloc, double gamma) {
  if (alloc.k() != fr.k) throw DimensionMismatch("steady_cov_mat: bin count mismatch");
  const auto n_x = fr.F.front().rows();
  CMat S = CMat::Zero(n_x, n_x);
  for (int l = 0; l < fr.k; ++l) {
    const CMat& U = alloc.bins[l];
    if (hermitian_residual(U) > 1e-10 * std::max(1.0, U.cwiseAbs().maxCoeff())) {
      throw InvalidParameter("steady_cov_mat: allocation bin is not Hermitian");
    }
    S.noalias() += fr.F[l] * U * fr.F[l].adjoint();
  }
  S /= gamma * gamma * fr.k * static_cast<double>(fr.k);
  return realify(S, "steady_cov_mat");
}

Mat steady_cov_mat(const LiftedSystem& L, const FrequencyAllocation& alloc, double gamma) {
  return steady_cov_mat(frequency_response(L, alloc.k()), alloc, gamma);
}

InputSignal synthesize_input(const FourierCoefficients& coeffs) {
  const int k = coeffs.k();
  if (k < 1) throw InvalidParameter("synthesize_input: no coefficients");
  double mag = 0.0;
  for (const auto& b : coeffs.bins) mag = std::max(mag, b.cwiseAbs().maxCoeff());
  const double res = coeffs.symmetry_residual();
  if (res > 1e-10 * std::max(1.0, mag)) {
    throw InconsistentCoefficients("synthesize_input: coefficients violate conjugate symmetry (residual " +
                                   std::to_string(res) + ")");
  }
  const auto n_u = coeffs.n_u();
  std::vector<Vec> period;
  period.reserve(k);
  for (int t = 0; t < k; ++t) {
    CVec acc = CVec::Zero(n_u);
    for (int l = 0; l < k; ++l) acc += coeffs.bins[l] * unit_root(static_cast<long long>(l) * t, k);
    acc /= static_cast<double>(k);
    period.push_back(acc.real());
  }
  return InputSignal::periodic(std::move(period));
}

FourierCoefficients analyze_period(const std::vector<Vec>& one_period, double gamma) {
  const int k = static_cast<int>(one_period.size());
  FourierCoefficients c;
  c.gamma = gamma;
  if (k == 0) return c;
  const auto n_u = one_period.front().size();
  for (int l = 0; l < k; ++l) {
    CVec acc = CVec::Zero(n_u);
    for (int t = 0; t < k; ++t) acc += one_period[t].cast<Complex>() * std::conj(unit_root(static_cast<long long>(l) * t, k));
    c.bins.push_back(acc);
  }
  return c;
}

}  // namespace arxid
