#include "arxid/arx_model.hpp"

#include "arxid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace arxid {

void ARXParams::validate() const {
  if (p < 1 || q < 1 || n_y < 1 || n_u < 1) throw InvalidParameter("ARXParams: orders and dimensions must be positive");
  if (static_cast<int>(A.size()) != p) throw DimensionMismatch("ARXParams: expected p output matrices");
  if (static_cast<int>(B.size()) != q) throw DimensionMismatch("ARXParams: expected q input matrices");
  for (const auto& a : A) {
    if (a.rows() != n_y || a.cols() != n_y) throw DimensionMismatch("ARXParams: A_i must be n_y x n_y");
  }
  for (const auto& b : B) {
    if (b.rows() != n_y || b.cols() != n_u) throw DimensionMismatch("ARXParams: B_j must be n_y x n_u");
  }
  if (sigma_w.rows() != n_y || sigma_w.cols() != n_y) throw DimensionMismatch("ARXParams: Sigma_w must be n_y x n_y");
  if ((sigma_w - sigma_w.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidParameter("ARXParams: Sigma_w is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(sigma_w, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) < -1e-10) throw InvalidParameter("ARXParams: Sigma_w is not PSD");
}

ThetaMatrix ThetaMatrix::pack(const ARXParams& params) {
  params.validate();
  ThetaMatrix th;
  th.entries.resize(params.n_y, params.n_x());
  int col = 0;
  for (const auto& a : params.A) {
    th.entries.middleCols(col, params.n_y) = a;
    col += params.n_y;
  }
  for (const auto& b : params.B) {
    th.entries.middleCols(col, params.n_u) = b;
    col += params.n_u;
  }
  return th;
}

ARXParams ThetaMatrix::unpack(int p, int q, int n_u, const Mat& sigma_w) const {
  ARXParams out;
  out.p = p;
  out.q = q;
  out.n_y = static_cast<int>(entries.rows());
  out.n_u = n_u;
  if (entries.cols() != out.n_x()) throw DimensionMismatch("ThetaMatrix::unpack: column count does not match orders");
  int col = 0;
  for (int i = 0; i < p; ++i, col += out.n_y) out.A.push_back(entries.middleCols(col, out.n_y));
  for (int j = 0; j < q; ++j, col += n_u) out.B.push_back(entries.middleCols(col, n_u));
  out.sigma_w = sigma_w;
  return out;
}

LiftedSystem lift(const ThetaMatrix& theta, int p, int q, int n_u, const Mat& sigma_w) {
  const int n_y = static_cast<int>(theta.entries.rows());
  const int n_x = p * n_y + q * n_u;
  if (theta.entries.cols() != n_x) throw DimensionMismatch("lift: theta has the wrong number of columns");
  if (sigma_w.rows() != n_y || sigma_w.cols() != n_y) throw DimensionMismatch("lift: Sigma_w must be n_y x n_y");

  LiftedSystem L;
  L.n_x = n_x;
  L.n_y_block = p * n_y;
  L.A = Mat::Zero(n_x, n_x);
  L.A.topRows(n_y) = theta.entries;
  // output history shift
  for (int i = 1; i < p; ++i) L.A.block(i * n_y, (i - 1) * n_y, n_y, n_y).setIdentity();
  // input history shift
  const int u0 = p * n_y;
  for (int j = 1; j < q; ++j) L.A.block(u0 + j * n_u, u0 + (j - 1) * n_u, n_u, n_u).setIdentity();

  L.B_u = Mat::Zero(n_x, n_u);
  L.B_u.block(u0, 0, n_u, n_u).setIdentity();
  L.B_w = Mat::Zero(n_x, n_y);
  L.B_w.topRows(n_y) = psd_sqrt(sigma_w);
  return L;
}

LiftedSystem lift(const ARXParams& params) {
  return lift(ThetaMatrix::pack(params), params.p, params.q, params.n_u, params.sigma_w);
}

double spectral_radius(const Mat& M) {
  if (M.rows() != M.cols()) throw DimensionMismatch("spectral_radius: matrix is not square");
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es;
  es.setMaxIterations(200);
  es.compute(M, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration did not converge",
                         200 * static_cast<int>(M.rows()));
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double transient_constant(const Mat& A, const TransientOptions& opts) {
  const double rho = spectral_radius(A);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "transient_constant: spectral radius " << rho << " >= 1";
    throw InstabilityError(os.str());
  }
  const double r = 0.5 * (1.0 + rho);
  double best = 1.0;  // k = 0 term
  int below = 0;
  Mat P = A;
  double scale = 1.0 / r;
  for (int k = 1; k <= opts.max_k; ++k) {
    const double term = spectral_norm(P) * scale;
    if (term > best) {
      best = term;
      below = 0;
    } else {
      ++below;
    }
    if (k >= opts.min_k && below >= opts.patience) break;
    // Renormalize so neither P nor scale leaves the floating range.
    P = P * A;
    scale /= r;
    const double pn = P.cwiseAbs().maxCoeff();
    if (pn == 0.0) break;
    if (pn < 1e-150 || pn > 1e150) {
      P /= pn;
      scale *= pn;
    }
  }
  return best;
}

double transient_constant(const LiftedSystem& L, const TransientOptions& opts) {
  return transient_constant(L.A, opts);
}

Regressor pack_regressor(const std::vector<Vec>& y_history, const std::vector<Vec>& u_history, int t, int p,
                         int q) {
  if (y_history.empty() || u_history.empty()) {
    throw InvalidParameter("pack_regressor: histories must carry at least one sample to fix dimensions");
  }
  const auto n_y = y_history.front().size();
  const auto n_u = u_history.front().size();
  Regressor r;
  r.x = Vec::Zero(p * n_y + q * n_u);
  for (int i = 1; i <= p; ++i) {
    const int s = t - i;
    if (s >= 0 && s < static_cast<int>(y_history.size())) r.x.segment((i - 1) * n_y, n_y) = y_history[s];
  }
  for (int j = 1; j <= q; ++j) {
    const int s = t - j;
    if (s >= 0 && s < static_cast<int>(u_history.size())) r.x.segment(p * n_y + (j - 1) * n_u, n_u) = u_history[s];
  }
  return r;
}

ARXParams paper_system() {
  ARXParams s;
  s.p = 2;
  s.q = 1;
  s.n_y = 2;
  s.n_u = 2;
  Mat a1(2, 2), a2(2, 2), b1(2, 2);
  a1 << 0.7, 0.1, 0.0, 0.9;
  a2 << -0.5, 0.0, 0.1, -0.2;
  b1 << 0.1, 0.0, 0.0, 5.0;
  s.A = {a1, a2};
  s.B = {b1};
  s.sigma_w = Mat::Identity(2, 2);
  return s;
}

}  // namespace arxid
