#include "doctest.h"

#include "arxid/errors.hpp"
#include "arxid/oracles/oracles.hpp"
#include "arxid/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace arxid;

namespace {

FourierCoefficients random_symmetric(int k, int n_u, std::mt19937_64& g, double gamma = 1.0) {
  std::normal_distribution<double> N;
  FourierCoefficients c;
  c.gamma = gamma;
  c.bins.assign(k, CVec::Zero(n_u));
  for (int l = 0; l <= k / 2; ++l) {
    const int m = mirror_bin(l, k);
    for (int i = 0; i < n_u; ++i) c.bins[l](i) = m == l ? Complex(N(g), 0.0) : Complex(N(g), N(g));
    c.bins[m] = c.bins[l].conjugate();
  }
  return c;
}

LiftedSystem scalar_lift() {
  ARXParams s;
  s.A = {Mat::Constant(1, 1, 0.5)};
  s.B = {Mat::Constant(1, 1, 1.0)};
  s.sigma_w = Mat::Identity(1, 1);
  return lift(s);
}

Complex unit(double ang) { return {std::cos(ang), std::sin(ang)}; }

}  // namespace

TEST_CASE("gramian examples") {
  const LiftedSystem L = lift(paper_system());
  CHECK((gramian_t(L.A, L.B_u, 1) - L.B_u * L.B_u.transpose()).norm() == 0.0);
  const Mat Z = Mat::Zero(L.n_x, L.n_x);
  CHECK((gramian_t(Z, L.B_u, 25) - L.B_u * L.B_u.transpose()).norm() == 0.0);
  const Mat G = gramian_t(L.A, L.B_w, 10000);
  const Mat X = oracles::lyapunov_fixed_point(L.A, L.B_w * L.B_w.transpose());
  CHECK((G - X).norm() / X.norm() < 1e-8);
  CHECK((gramian_t(L.A, L.B_u, 37) - oracles::gramian_by_sum(L.A, L.B_u, 37)).norm() < 1e-10);
  CHECK_THROWS_AS(gramian_t(L.A, L.B_u, 0), InvalidParameter);
}

TEST_CASE("frequency response examples") {
  LiftedSystem Z = lift(paper_system());
  Z.A.setZero();
  const int k = 7;
  const FrequencyResponse fz = frequency_response(Z, k);
  for (int l = 0; l < k; ++l) {
    const CMat expect = unit(-2.0 * std::numbers::pi * l / k) * Z.B_u.cast<Complex>();
    CHECK((fz.F[l] - expect).norm() < 1e-14);
  }

  const LiftedSystem L = lift(paper_system());
  const FrequencyResponse fr = frequency_response(L, 10);
  const Mat I = Mat::Identity(L.n_x, L.n_x);
  CHECK((fr.F[0] - ((I - L.A).inverse() * L.B_u).cast<Complex>()).norm() < 1e-12);
  CHECK_FALSE(fr.ill_conditioned);
  for (int l = 1; l < 10; ++l) CHECK((fr.F[10 - l] - fr.F[l].conjugate()).norm() < 1e-12);
  for (int l = 0; l < 10; ++l) CHECK((fr.F[l] - oracles::resolvent_response(L.A, L.B_u, l, 10)).norm() < 1e-12);
}

TEST_CASE("scalar resolvent by hand at the quarter frequency") {
  // (jI - [[0.5, 1], [0, 0]])^{-1} [0; 1] = [1 / (j (j - 0.5)); 1 / j]
  const FrequencyResponse fr = frequency_response(scalar_lift(), 4);
  CHECK(std::abs(fr.F[1](0, 0) - Complex(-0.8, 0.4)) < 1e-14);
  CHECK(std::abs(fr.F[1](1, 0) - Complex(0.0, -1.0)) < 1e-14);
}

TEST_CASE("steady covariance from coefficients") {
  const LiftedSystem L = lift(paper_system());
  FourierCoefficients zero;
  zero.bins.assign(5, CVec::Zero(2));
  CHECK(steady_cov_vec(L, zero).norm() == 0.0);

  std::mt19937_64 g(3);
  const FourierCoefficients c = random_symmetric(8, 2, g, 4.0);
  const Mat v = steady_cov_vec(L, c);
  const Mat m = steady_cov_mat(L, FrequencyAllocation::outer(c), c.gamma);
  CHECK((v - m).norm() <= 1e-12 * v.norm());
  CHECK((v - v.transpose()).norm() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Mat>(v).eigenvalues()(0) >= -1e-12);

  FourierCoefficients bad = c;
  bad.bins[1](0) += Complex(0.0, 1.0);
  CHECK_THROWS_AS(steady_cov_vec(L, bad), InconsistentCoefficients);
}

TEST_CASE("steady covariance matches the time average") {
  std::mt19937_64 g(17);
  for (int i = 0; i < 20; ++i) {
    const ARXParams P = oracles::random_stable_system(1 + i % 2, 1 + (i / 2) % 2, 1 + (i / 4) % 2, 1 + i % 2, 0.85, g());
    const FourierCoefficients c = random_symmetric(3 + i % 9, P.n_u, g, 1.5);
    const oracles::DirectLift D = oracles::direct_lift(P);
    const auto discard = static_cast<std::int64_t>(std::ceil(std::log(1e-6) / std::log(0.85)));
    const Mat avg = oracles::time_average_covariance(D, c, discard, 100);
    const Mat G = steady_cov_vec(lift(P), c);
    CHECK((avg - G).norm() / G.norm() < 1e-3);
  }
}

TEST_CASE("steady covariance from allocations") {
  const LiftedSystem L = lift(paper_system());
  const int k = 6;
  const FrequencyResponse fr = frequency_response(L, k);
  FrequencyAllocation eye = FrequencyAllocation::zeros(k, 2);
  CMat S = CMat::Zero(L.n_x, L.n_x);
  for (int l = 0; l < k; ++l) {
    eye.bins[l] = CMat::Identity(2, 2);
    S += fr.F[l] * fr.F[l].adjoint();
  }
  const double gamma = 2.0;
  CHECK((steady_cov_mat(fr, eye, gamma) - S.real() / (gamma * gamma * k * k)).norm() < 1e-12);

  std::mt19937_64 g(8);
  const FrequencyAllocation U = FrequencyAllocation::outer(random_symmetric(k, 2, g));
  const FrequencyAllocation V = FrequencyAllocation::outer(random_symmetric(k, 2, g));
  FrequencyAllocation W = U;
  for (int l = 0; l < k; ++l) W.bins[l] += V.bins[l];
  const Mat lhs = steady_cov_mat(fr, W, gamma);
  const Mat rhs = steady_cov_mat(fr, U, gamma) + steady_cov_mat(fr, V, gamma);
  CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));

  FrequencyAllocation skew = U;
  skew.bins[0](0, 1) += Complex(1.0, 0.0);
  CHECK_THROWS_AS(steady_cov_mat(fr, skew, gamma), InvalidParameter);
}

TEST_CASE("synthesis examples") {
  const int k = 5;
  FourierCoefficients flat;
  flat.bins.assign(k, CVec::Constant(2, Complex(3.0, 0.0)));
  const InputSignal imp = synthesize_input(flat);
  REQUIRE(imp.period.has_value());
  CHECK(*imp.period == k);
  CHECK((imp.at(0) - Vec::Constant(2, 3.0)).norm() < 1e-14);
  for (int t = 1; t < k; ++t) CHECK(imp.at(t).norm() < 1e-14);

  FourierCoefficients dc;
  dc.bins.assign(k, CVec::Zero(2));
  dc.bins[0] = CVec::Constant(2, Complex(2.5, 0.0));
  const InputSignal c = synthesize_input(dc);
  for (int t = 0; t < k; ++t) CHECK((c.at(t) - Vec::Constant(2, 0.5)).norm() < 1e-15);
}

TEST_CASE("synthesis is real, satisfies Parseval and inverts the DFT") {
  std::mt19937_64 g(4);
  for (int i = 0; i < 30; ++i) {
    const int k = 1 + i % 16;
    const FourierCoefficients c = random_symmetric(k, 1 + i % 3, g, 2.0);
    const InputSignal s = synthesize_input(c);
    const auto ref = oracles::inverse_dft(c);
    double energy = 0.0, scale = 1.0;
    for (int t = 0; t < k; ++t) {
      energy += s.at(t).squaredNorm();
      scale = std::max(scale, ref[t].cwiseAbs().maxCoeff());
    }
    for (int t = 0; t < k; ++t) {
      CHECK(ref[t].imag().cwiseAbs().maxCoeff() < 1e-10 * scale);
      CHECK((ref[t].real() - s.at(t)).cwiseAbs().maxCoeff() < 1e-12 * scale);
    }
    CHECK(std::abs(energy - c.energy() / k) < 1e-10 * (1.0 + energy));
    const FourierCoefficients back = analyze_period(s.samples, c.gamma);
    for (int l = 0; l < k; ++l) CHECK((back.bins[l] - c.bins[l]).norm() < 1e-10 * (1.0 + c.bins[l].norm()));
    CHECK(c.symmetry_residual() < 1e-15);
  }
}

TEST_CASE("asymmetric coefficients are rejected, not realified") {
  FourierCoefficients c;
  c.bins.assign(4, CVec::Zero(1));
  c.bins[1](0) = Complex(1.0, 1.0);
  CHECK_THROWS_AS(synthesize_input(c), InconsistentCoefficients);
  c.bins[3](0) = Complex(1.0, -1.0);
  CHECK_NOTHROW(synthesize_input(c));
  c.bins[0](0) = Complex(0.0, 0.5);  // self-mirror bin must be real
  CHECK_THROWS_AS(synthesize_input(c), InconsistentCoefficients);
}
