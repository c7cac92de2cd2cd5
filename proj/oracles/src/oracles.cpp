#include "arxid/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace arxid::oracles {

DirectLift direct_lift(const ARXParams& prm) {
  const int ny = prm.n_y, nu = prm.n_u, p = prm.p, q = prm.q;
  const int nx = p * ny + q * nu;
  DirectLift L;
  L.A = Mat::Zero(nx, nx);
  L.B_u = Mat::Zero(nx, nu);
  L.B_w = Mat::Zero(nx, ny);
  // Row block 0: y_t = sum A_i y_{t-i} + sum B_j u_{t-j}
  for (int i = 0; i < p; ++i)
    for (int r = 0; r < ny; ++r)
      for (int c = 0; c < ny; ++c) L.A(r, i * ny + c) = prm.A[i](r, c);
  for (int j = 0; j < q; ++j)
    for (int r = 0; r < ny; ++r)
      for (int c = 0; c < nu; ++c) L.A(r, p * ny + j * nu + c) = prm.B[j](r, c);
  // Output history shifts down by one block.
  for (int i = 1; i < p; ++i)
    for (int r = 0; r < ny; ++r) L.A(i * ny + r, (i - 1) * ny + r) = 1.0;
  // Input history: the newest input enters from B_u, older ones shift.
  for (int j = 1; j < q; ++j)
    for (int r = 0; r < nu; ++r) L.A(p * ny + j * nu + r, p * ny + (j - 1) * nu + r) = 1.0;
  for (int r = 0; r < nu; ++r) L.B_u(p * ny + r, r) = 1.0;
  // Noise enters through the symmetric square root of Sigma_w.
  Eigen::SelfAdjointEigenSolver<Mat> es(prm.sigma_w);
  const Mat S = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                es.eigenvectors().transpose();
  L.B_w.topRows(ny) = S;
  return L;
}

namespace {

// Coefficients c_0..c_n of det(zI - M) = z^n + c_1 z^{n-1} + ... + c_n.
std::vector<double> characteristic_polynomial(const Mat& M) {
  const Eigen::Index n = M.rows();
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  Mat Mk = Mat::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    Mk = M * Mk + c[k - 1] * Mat::Identity(n, n);
    c[k] = -(M * Mk).trace() / static_cast<double>(k);
  }
  return c;
}

}  // namespace

double spectral_radius_by_roots(const Mat& M) {
  const Eigen::Index n = M.rows();
  if (n == 0) return 0.0;
  const std::vector<double> c = characteristic_polynomial(M);
  auto eval = [&](std::complex<double> z) {
    std::complex<double> v = 1.0;
    for (Eigen::Index k = 1; k <= n; ++k) v = v * z + c[k];
    return v;
  };
  double bound = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) bound = std::max(bound, std::abs(c[k]));
  const double R = 1.0 + bound;
  std::vector<std::complex<double>> z(n);
  const std::complex<double> seed(0.4, 0.9);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = std::pow(seed, static_cast<double>(i)) * (0.5 * R);
  for (int it = 0; it < 5000; ++it) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::complex<double> denom = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      if (std::abs(denom) < 1e-300) denom = 1e-300;
      const std::complex<double> step = eval(z[i]) / denom;
      z[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-15 * R) break;
  }
  double rho = 0.0;
  for (const auto& r : z) rho = std::max(rho, std::abs(r));
  return rho;
}

Mat gramian_by_sum(const Mat& A, const Mat& B, int t) {
  Mat G = Mat::Zero(A.rows(), A.rows());
  Mat P = Mat::Identity(A.rows(), A.rows());
  for (int s = 0; s < t; ++s) {
    const Mat PB = P * B;
    G += PB * PB.transpose();
    P = A * P;
  }
  return G;
}

double power_iteration_norm(const Mat& M, int max_iter, double tol) {
  if (M.size() == 0) return 0.0;
  const Mat G = M.transpose() * M;
  Vec v = Vec::LinSpaced(G.rows(), 1.0, 2.0);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = G * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    w /= n;
    const double next = w.dot(G * w);
    v = w;
    if (std::abs(next - lam) <= tol * std::max(1.0, next)) {
      lam = next;
      break;
    }
    lam = next;
  }
  return std::sqrt(std::max(lam, 0.0));
}

Mat lyapunov_fixed_point(const Mat& A, const Mat& Q, int max_iter, double tol) {
  Mat X = Q;
  for (int it = 0; it < max_iter; ++it) {
    const Mat next = A * X * A.transpose() + Q;
    const double diff = (next - X).norm();
    X = next;
    if (diff <= tol * std::max(1.0, X.norm())) break;
  }
  return X;
}

std::vector<CVec> inverse_dft(const FourierCoefficients& c) {
  const int k = c.k();
  std::vector<CVec> out;
  for (int t = 0; t < k; ++t) {
    CVec u = CVec::Zero(c.n_u());
    for (int l = 0; l < k; ++l) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(l) * static_cast<double>(t) / k;
      u += c.bins[l] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out.push_back(u / static_cast<double>(k));
  }
  return out;
}

CMat resolvent_response(const Mat& A, const Mat& B, int l, int k) {
  const double ang = 2.0 * std::numbers::pi * l / k;
  const std::complex<double> z(std::cos(ang), std::sin(ang));
  CMat R = -A.cast<std::complex<double>>();
  R.diagonal().array() += z;
  return Eigen::FullPivLU<CMat>(R).solve(B.cast<std::complex<double>>());
}

Mat time_average_covariance(const DirectLift& L, const FourierCoefficients& c, std::int64_t discard, int periods) {
  const std::vector<CVec> period = inverse_dft(c);
  const int k = c.k();
  Vec x = Vec::Zero(L.A.rows());
  for (std::int64_t t = 0; t < discard; ++t) x = L.A * x + L.B_u * period[t % k].real();
  Mat S = Mat::Zero(x.size(), x.size());
  const std::int64_t n = static_cast<std::int64_t>(periods) * k;
  for (std::int64_t t = discard; t < discard + n; ++t) {
    S += x * x.transpose();
    x = L.A * x + L.B_u * period[t % k].real();
  }
  return S / (static_cast<double>(n) * c.gamma * c.gamma);
}

GridResult grid_search_k2(const DesignProblem& p, double step) {
  const Mat A = p.model.A, B = p.model.B_u;
  const CMat F0 = resolvent_response(A, B, 0, 2), F1 = resolvent_response(A, B, 1, 2);
  const double c = static_cast<double>(p.horizon) / 8.0;  // T / (2 k^2), k = 2
  const Mat G0 = c * (F0 * F0.adjoint()).real(), G1 = c * (F1 * F1.adjoint()).real();
  const int n = static_cast<int>(std::llround(1.0 / step));
  GridResult best;
  best.value = -1e300;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double s0 = p.budget * i / n, s1 = p.budget * j / n;
      const Mat M = p.past + s0 * G0 + s1 * G1;
      const double v = Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
      ++best.evaluations;
      if (v > best.value) {
        best.value = v;
        best.s0 = s0;
        best.s1 = s1;
      }
    }
  }
  return best;
}

double lambda_min_directional_fd(const DesignProblem& p, const FrequencyAllocation& a,
                                 const FrequencyAllocation& d, double h) {
  auto shifted = [&](double s) {
    FrequencyAllocation b = a;
    for (int l = 0; l < a.k(); ++l) b.bins[l] += s * d.bins[l];
    CMat S = CMat::Zero(p.n_x(), p.n_x());
    for (int l = 0; l < a.k(); ++l) {
      const CMat F = resolvent_response(p.model.A, p.model.B_u, l, p.k);
      S += F * b.bins[l] * F.adjoint();
    }
    const Mat M = p.past + p.weight() * S.real();
    return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
  };
  return (shifted(h) - shifted(-h)) / (2.0 * h);
}

Mat normal_equations(const Mat& X, const Mat& Y) {
  const Mat G = X.transpose() * X;
  const Mat R = X.transpose() * Y;
  return Eigen::LLT<Mat>(G).solve(R).transpose();
}

ARXParams random_stable_system(int n_y, int n_u, int p, int q, double rho, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  ARXParams P;
  P.n_y = n_y;
  P.n_u = n_u;
  P.p = p;
  P.q = q;
  for (int i = 0; i < p; ++i) {
    Mat A(n_y, n_y);
    for (Eigen::Index e = 0; e < A.size(); ++e) A(e) = N(g);
    P.A.push_back(A);
  }
  for (int j = 0; j < q; ++j) {
    Mat B(n_y, n_u);
    for (Eigen::Index e = 0; e < B.size(); ++e) B(e) = N(g);
    P.B.push_back(B);
  }
  P.sigma_w = Mat::Identity(n_y, n_y);
  // Scaling A_i by s^i scales every root of the AR polynomial by s.
  const double r0 = spectral_radius_by_roots(direct_lift(P).A.topLeftCorner(p * n_y, p * n_y));
  const double s = r0 > 0.0 ? rho / r0 : 1.0;
  for (int i = 0; i < p; ++i) P.A[i] *= std::pow(s, i + 1);
  return P;
}

}  // namespace arxid::oracles
