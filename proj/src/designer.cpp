#include "arxid/designer.hpp"

#include "arxid/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

namespace arxid {

namespace {

bool self_mirror(int l, int k) { return mirror_bin(l, k) == l; }

// Bins that carry independent data under mirror coupling: 0..floor(k/2).
std::vector<int> free_bins(int k) {
  std::vector<int> out;
  for (int l = 0; l <= k / 2; ++l) out.push_back(l);
  return out;
}

struct Spectrum {
  Vec lambda;  // ascending
  Mat V;
};

Spectrum sym_eig(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("designer: symmetric eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Soft-min f = -tau log sum exp(-lambda_i / tau) and its weights.
struct SoftMin {
  double f = 0.0;
  Vec w;
};

SoftMin soft_min(const Vec& lambda, double tau) {
  SoftMin s;
  const double l0 = lambda(0);
  s.w.resize(lambda.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    s.w(i) = std::exp(-(lambda(i) - l0) / tau);
    sum += s.w(i);
  }
  s.w /= sum;
  s.f = l0 - tau * std::log(sum);
  return s;
}

// Divided differences of the soft-min weights, Gamma_ab = (w_a - w_b) / (l_a - l_b),
// evaluated from the side with the larger weight to avoid overflow.
Mat weight_divided_differences(const Vec& lambda, const Vec& w, double tau) {
  const Eigen::Index n = lambda.size();
  Mat G(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      Eigen::Index lo = a, hi = b;
      if (lambda(lo) > lambda(hi)) std::swap(lo, hi);
      const double d = lambda(hi) - lambda(lo);
      if (d <= 1e-300) {
        G(a, b) = -w(lo) / tau;
      } else {
        G(a, b) = w(lo) * std::expm1(-d / tau) / d;
      }
    }
  }
  return G;
}

struct TopEigen {
  double value = -std::numeric_limits<double>::infinity();
  int index = 0;
  CVec vector;
};

// Eigenpairs of one gradient bin in descending order. Self-mirrored bins are
// real symmetric and get real eigenvectors.
std::vector<std::pair<double, CVec>> bin_eigen_desc(const CMat& G, bool real_bin) {
  std::vector<std::pair<double, CVec>> out;
  const Eigen::Index n = G.rows();
  if (real_bin) {
    Mat R = G.real();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (R + R.transpose()));
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      Vec v = es.eigenvectors().col(i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(v(j)) > 1e-12) {
          if (v(j) < 0) v = -v;
          break;
        }
      }
      out.emplace_back(es.eigenvalues()(i), v.cast<Complex>());
    }
  } else {
    HermitianEigen he = hermitian_eig(G);
    for (Eigen::Index i = n - 1; i >= 0; --i) out.emplace_back(he.values(i), normalize_phase(he.vectors.col(i)));
  }
  return out;
}

void place_vertex(FrequencyAllocation& a, int bin, const CVec& v, double mass) {
  const int k = a.k();
  const int m = mirror_bin(bin, k);
  if (m == bin) {
    a.bins[bin] += mass * v * v.adjoint();
  } else {
    a.bins[bin] += 0.5 * mass * v * v.adjoint();
    const CVec vc = v.conjugate();
    a.bins[m] += 0.5 * mass * vc * vc.adjoint();
  }
}

// A vertex of the feasible set: the whole budget on (bin, v), with its mirror.
struct Atom {
  int bin = 0;
  CVec v;
  Mat A;  // its contribution to M
};

Mat atom_matrix(const DesignProblem& p, int bin, const CVec& v) {
  const CVec z = p.response.F[bin] * v;
  Mat A = (p.weight() * p.budget) * (z * z.adjoint()).real();
  return 0.5 * (A + A.transpose());
}

// Master problem over the convex hull of the current atoms.
class Master {
 public:
  Master(const DesignProblem& p, double tau) : p_(p), tau_(tau) {}

  std::vector<Atom> atoms;
  Vec alpha;

  void set_tau(double tau) { tau_ = tau; }

  Mat assemble(const Vec& a) const {
    Mat M = p_.past;
    for (std::size_t j = 0; j < atoms.size(); ++j) M.noalias() += a(j) * atoms[j].A;
    return M;
  }

  double value(const Vec& a) const { return soft_min(sym_eig(assemble(a)).lambda, tau_).f; }

  // A new atom joins at zero weight; the next Newton step decides how much
  // mass it takes from the others.
  void add(Atom atom) {
    atoms.push_back(std::move(atom));
    const Eigen::Index m = static_cast<Eigen::Index>(atoms.size());
    Vec a = Vec::Zero(m);
    if (m == 1) {
      a(0) = 1.0;
    } else {
      a.head(m - 1) = alpha;
    }
    alpha = a;
  }

  // Active-set Newton on the simplex face. Atoms at zero weight stay on the
  // face only while the Newton direction pushes them inward.
  void solve(int max_steps) {
    for (int step = 0; step < max_steps; ++step) {
      const Eigen::Index m = static_cast<Eigen::Index>(atoms.size());
      if (m <= 1) return;
      const Spectrum sp = sym_eig(assemble(alpha));
      const SoftMin sm = soft_min(sp.lambda, tau_);
      const Mat Gam = weight_divided_differences(sp.lambda, sm.w, tau_);
      const Eigen::Index n = sp.lambda.size();

      Mat Q(n * n, m);
      Vec g(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Mat At = sp.V.transpose() * atoms[j].A * sp.V;
        g(j) = sm.w.dot(At.diagonal());
        Q.col(j) = Eigen::Map<const Vec>(At.data(), n * n);
      }
      const Vec gam = Eigen::Map<const Vec>(Gam.data(), n * n);
      Mat H = Q.transpose() * gam.asDiagonal() * Q + (g * g.transpose()) / tau_;
      H = 0.5 * (H + H.transpose());

      std::vector<Eigen::Index> face(m);
      for (Eigen::Index j = 0; j < m; ++j) face[j] = j;
      Vec d = Vec::Zero(m);
      while (face.size() > 1) {
        const Eigen::Index f = static_cast<Eigen::Index>(face.size());
        Mat K(f, f);
        Vec gf(f);
        for (Eigen::Index r = 0; r < f; ++r) {
          gf(r) = g(face[r]);
          for (Eigen::Index c = 0; c < f; ++c) K(r, c) = -H(face[r], face[c]);
        }
        const double mu = 1e-12 * std::max(K.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        K.diagonal().array() += mu;
        Eigen::LDLT<Mat> ldlt(K);
        const Vec a = ldlt.solve(gf);
        const Vec b = ldlt.solve(Vec::Ones(f));
        Vec df = a - (a.sum() / b.sum()) * b;
        df.array() -= df.mean();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index r = 0; r < f; ++r) {
          if (!(alpha(face[r]) <= 0.0 && df(r) < 0.0)) keep.push_back(face[r]);
        }
        if (keep.size() == face.size()) {
          d.setZero();
          for (Eigen::Index r = 0; r < f; ++r) d(face[r]) = df(r);
          break;
        }
        face = std::move(keep);
      }
      const double decrement = g.dot(d);
      if (!(decrement > 1e-16 * (1.0 + std::abs(sm.f)))) return;

      double t_max = std::numeric_limits<double>::infinity();
      Eigen::Index blocking = -1;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (d(j) < 0.0) {
          const double r = alpha(j) / -d(j);
          if (r < t_max) {
            t_max = r;
            blocking = j;
          }
        }
      }
      double t = std::min(1.0, t_max);
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        Vec trial = alpha + t * d;
        if (t == t_max && blocking >= 0) trial(blocking) = 0.0;
        trial = trial.cwiseMax(0.0);
        trial /= trial.sum();
        const double f_new = value(trial);
        if (f_new >= sm.f + 1e-4 * t * decrement) {
          alpha = trial;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) return;
      prune();
    }
  }

  void prune() {
    std::vector<Atom> keep;
    std::vector<double> a;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (alpha(j) > 1e-14) {
        keep.push_back(std::move(atoms[j]));
        a.push_back(alpha(j));
      }
    }
    atoms = std::move(keep);
    alpha = Eigen::Map<Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
    alpha /= alpha.sum();
  }

  FrequencyAllocation allocation() const {
    FrequencyAllocation out = FrequencyAllocation::zeros(p_.k, p_.n_u());
    for (std::size_t j = 0; j < atoms.size(); ++j) place_vertex(out, atoms[j].bin, atoms[j].v, alpha(j) * p_.budget);
    for (auto& U : out.bins) U = 0.5 * (U + U.adjoint());
    return out;
  }

 private:
  const DesignProblem& p_;
  double tau_;
};

// Upper bound on the optimum from any trace-one PSD weight W:
// <W, past> + budget * max_l lambda_max(c F_l^H W F_l).
struct DualBound {
  double upper = 0.0;
  LmoResult lmo;
};

DualBound dual_bound(const DesignProblem& p, const Mat& W) {
  DualBound d;
  d.lmo = lmo(weighted_gradient(p, W), p.budget);
  d.upper = (W.cwiseProduct(p.past)).sum() + d.lmo.value;
  return d;
}

// Dual weight from complementary slackness. An optimal W lives on the
// lambda_min eigenspace of M and gives every atom in the support the same
// linear value. Restrict W = Q Z Q^T to eigenvalues within `window` of the
// smallest, impose those equalities in the least-squares sense closest to the
// smoothed weight, then project back onto trace-one PSD matrices.
Mat slackness_weight(const Spectrum& sp, const std::vector<Atom>& atoms, const Mat& W_smooth, double window) {
  const Eigen::Index n = sp.lambda.size();
  Eigen::Index m = 1;
  while (m < n && sp.lambda(m) - sp.lambda(0) <= window) ++m;
  const Mat Q = sp.V.leftCols(m);
  if (m == 1) return Q * Q.transpose();

  std::vector<std::pair<Eigen::Index, Eigen::Index>> basis;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b) basis.emplace_back(a, b);
  const Eigen::Index s = static_cast<Eigen::Index>(basis.size());
  auto inner = [&](const Mat& S, std::size_t i) {
    const auto [a, b] = basis[i];
    return a == b ? S(a, a) : S(a, b) + S(b, a);
  };

  const Eigen::Index rows = static_cast<Eigen::Index>(atoms.size()) + 1;
  Mat C = Mat::Zero(rows, s + 1);
  Vec rhs = Vec::Zero(rows);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const Mat Aj = Q.transpose() * atoms[j].A * Q;
    for (Eigen::Index i = 0; i < s; ++i) C(j, i) = inner(Aj, i);
    C(j, s) = -1.0;
  }
  for (Eigen::Index i = 0; i < s; ++i) C(rows - 1, i) = basis[i].first == basis[i].second ? 1.0 : 0.0;
  rhs(rows - 1) = 1.0;
  // Scale the atom rows so the trace row is not drowned out.
  const double row_scale = std::max(C.topRows(rows - 1).cwiseAbs().maxCoeff(), 1e-300);
  C.topRows(rows - 1) /= row_scale;

  const Mat Zs = Q.transpose() * W_smooth * Q;
  Vec x0(s + 1);
  for (Eigen::Index i = 0; i < s; ++i) x0(i) = Zs(basis[i].first, basis[i].second);
  x0(s) = 0.0;
  {
    double mean = 0.0;
    for (Eigen::Index j = 0; j < rows - 1; ++j) mean += C.row(j).head(s).dot(x0.head(s));
    x0(s) = mean / std::max<Eigen::Index>(rows - 1, 1);
  }
  const Vec resid = C * x0 - rhs;
  const Mat CCt = C * C.transpose();
  const Vec y = Eigen::CompleteOrthogonalDecomposition<Mat>(CCt).solve(resid);
  const Vec x = x0 - C.transpose() * y;

  Mat Z(m, m);
  for (Eigen::Index i = 0; i < s; ++i) {
    Z(basis[i].first, basis[i].second) = x(i);
    Z(basis[i].second, basis[i].first) = x(i);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(Z);
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.sum() <= 0.0) return sp.V.col(0) * sp.V.col(0).transpose();
  ev /= ev.sum();
  const Mat Zp = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return Q * Zp * Q.transpose();
}

double secondary_mass(const FrequencyAllocation& a) {
  double worst = 0.0;
  for (int l = 0; l < a.k(); ++l) {
    const double tr = a.bins[l].trace().real();
    if (tr <= 1e-14) continue;
    const HermitianEigen he = hermitian_eig(a.bins[l]);
    worst = std::max(worst, 1.0 - he.values(he.values.size() - 1) / tr);
  }
  return std::max(worst, 0.0);
}

}  // namespace

namespace {

// Rank-1 coefficients packed into one real vector z with ||z||^2 equal to the
// total coefficient energy. Self-mirrored bins hold n_u reals; paired bins
// hold sqrt(2) [Re u; Im u].
class Rank1Param {
 public:
  explicit Rank1Param(const DesignProblem& p) : p_(p) {
    for (int l : free_bins(p.k)) {
      const bool self = self_mirror(l, p.k);
      bins_.push_back({l, self, dim_});
      dim_ += (self ? 1 : 2) * static_cast<int>(p.n_u());
    }
  }

  int dim() const { return dim_; }

  Mat information(const Vec& z) const {
    Mat M = p_.past;
    const double c = p_.weight();
    for (const auto& b : bins_) {
      const Eigen::Index nu = p_.n_u();
      const CMat& F = p_.response.F[b.l];
      if (b.self) {
        const Vec P = F.real() * z.segment(b.offset, nu);
        M.noalias() += c * P * P.transpose();
      } else {
        const Vec zr = z.segment(b.offset, nu), zi = z.segment(b.offset + nu, nu);
        const Vec P = F.real() * zr - F.imag() * zi;
        const Vec Q = F.imag() * zr + F.real() * zi;
        M.noalias() += c * (P * P.transpose() + Q * Q.transpose());
      }
    }
    return 0.5 * (M + M.transpose());
  }

  // Gradient of <W, M(z)>.
  Vec gradient(const Vec& z, const Mat& W) const {
    Vec g = Vec::Zero(dim_);
    const double c = p_.weight();
    for (const auto& b : bins_) {
      const Eigen::Index nu = p_.n_u();
      const Mat Fr = p_.response.F[b.l].real(), Fi = p_.response.F[b.l].imag();
      if (b.self) {
        g.segment(b.offset, nu) = 2.0 * c * Fr.transpose() * (W * (Fr * z.segment(b.offset, nu)));
      } else {
        const Vec zr = z.segment(b.offset, nu), zi = z.segment(b.offset + nu, nu);
        const Vec WP = W * (Fr * zr - Fi * zi);
        const Vec WQ = W * (Fi * zr + Fr * zi);
        g.segment(b.offset, nu) = 2.0 * c * (Fr.transpose() * WP + Fi.transpose() * WQ);
        g.segment(b.offset + nu, nu) = 2.0 * c * (-Fi.transpose() * WP + Fr.transpose() * WQ);
      }
    }
    return g;
  }

  Vec pack(const FourierCoefficients& c) const {
    Vec z(dim_);
    const Eigen::Index nu = p_.n_u();
    for (const auto& b : bins_) {
      if (b.self) {
        z.segment(b.offset, nu) = c.bins[b.l].real();
      } else {
        z.segment(b.offset, nu) = std::sqrt(2.0) * c.bins[b.l].real();
        z.segment(b.offset + nu, nu) = std::sqrt(2.0) * c.bins[b.l].imag();
      }
    }
    return z;
  }

  FourierCoefficients coefficients(const Vec& z) const {
    FourierCoefficients c;
    c.gamma = p_.gamma;
    c.bins.assign(p_.k, CVec::Zero(p_.n_u()));
    const Eigen::Index nu = p_.n_u();
    for (const auto& b : bins_) {
      if (b.self) {
        c.bins[b.l] = z.segment(b.offset, nu).cast<Complex>();
      } else {
        CVec u(nu);
        for (Eigen::Index i = 0; i < nu; ++i) {
          u(i) = Complex(z(b.offset + i), z(b.offset + nu + i)) / std::sqrt(2.0);
        }
        c.bins[b.l] = u;
        c.bins[mirror_bin(b.l, p_.k)] = u.conjugate();
      }
    }
    return c;
  }

 private:
  struct Slot {
    int l;
    bool self;
    int offset;
  };
  const DesignProblem& p_;
  std::vector<Slot> bins_;
  int dim_ = 0;
};

// Smoothed objective on the sphere ||z|| = r through z = r y / ||y||, and its
// gradient with respect to y.
struct SphereObjective {
  const Rank1Param& param;
  double radius;
  double tau;

  double eval(const Vec& y, Vec* grad) const {
    const double ny = y.norm();
    const Vec z = (radius / ny) * y;
    const Spectrum sp = sym_eig(param.information(z));
    const SoftMin sm = soft_min(sp.lambda, tau);
    if (grad) {
      const Mat W = sp.V * sm.w.asDiagonal() * sp.V.transpose();
      const Vec gz = param.gradient(z, W);
      const Vec yh = y / ny;
      *grad = (radius / ny) * (gz - yh * yh.dot(gz));
    }
    return sm.f;
  }
};

// Limited-memory quasi-Newton ascent with backtracking. The objective must be
// invariant to the scale of y.
template <class Objective>
Vec ascend(const Objective& obj, Vec y, int max_iter) {
  constexpr int kMemory = 8;
  std::deque<std::pair<Vec, Vec>> mem;
  Vec g;
  double f = obj.eval(y, &g);
  for (int it = 0; it < max_iter; ++it) {
    // two-loop recursion on the negated problem
    Vec q = g;
    std::vector<double> al(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const auto& [s, yv] = mem[i];
      al[i] = s.dot(q) / yv.dot(s);
      q -= al[i] * yv;
    }
    if (!mem.empty()) {
      const auto& [s, yv] = mem.back();
      q *= s.dot(yv) / yv.dot(yv);
    } else {
      q *= y.norm() / std::max(g.norm(), 1e-300) * 0.1;
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, yv] = mem[i];
      const double be = yv.dot(q) / yv.dot(s);
      q += s * (al[i] - be);
    }
    Vec d = q;
    double slope = g.dot(d);
    if (!(slope > 0.0)) {
      mem.clear();
      d = g * (y.norm() / std::max(g.norm(), 1e-300) * 0.1);
      slope = g.dot(d);
      if (!(slope > 0.0)) break;
    }
    double t = 1.0;
    Vec y_new, g_new;
    double f_new = f;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      y_new = y + t * d;
      f_new = obj.eval(y_new, &g_new);
      if (f_new >= f + 1e-4 * t * slope) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    Vec s = y_new - y, yv = g - g_new;  // curvature of -f
    if (s.dot(yv) > 1e-14 * s.norm() * yv.norm()) {
      mem.emplace_back(s, yv);
      if (static_cast<int>(mem.size()) > kMemory) mem.pop_front();
    }
    const double gain = f_new - f;
    y = y_new / y_new.norm();
    f = obj.eval(y, &g);
    if (gain <= 1e-15 * (1.0 + std::abs(f))) break;
  }
  return y;
}

// Follows the smoothed maximizer down a decreasing temperature ladder.
Vec anneal(const Rank1Param& param, double radius, Vec y, int n_x) {
  const double scale = std::max(param.information(radius * y / y.norm()).trace() / n_x, 1e-300);
  for (double rel = 1e-1; rel >= 1e-9; rel *= 0.1) y = ascend(SphereObjective{param, radius, rel * scale}, y, 300);
  return radius * y / y.norm();
}

}  // namespace

DesignProblem DesignProblem::make(const LiftedSystem& model, std::int64_t horizon, int k, double gamma,
                                  const Mat& past) {
  DesignProblem p;
  p.model = model;
  p.horizon = horizon;
  p.k = k;
  p.gamma = gamma;
  p.budget = 0.5 * k * static_cast<double>(k) * gamma * gamma;
  p.past = past.size() == 0 ? Mat::Zero(model.n_x, model.n_x) : past;
  p.validate();
  p.response = frequency_response(model, k);
  return p;
}

void DesignProblem::validate() const {
  if (k < 1) throw InvalidParameter("DesignProblem: k must be >= 1");
  if (horizon < 1) throw InvalidParameter("DesignProblem: horizon must be >= 1");
  if (!(budget >= 0.0)) throw InvalidParameter("DesignProblem: budget must be non-negative");
  if (!(gamma > 0.0)) throw InvalidParameter("DesignProblem: gamma must be positive");
  if (past.rows() != model.n_x || past.cols() != model.n_x) throw DimensionMismatch("DesignProblem: past has the wrong shape");
  if ((past - past.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, past.cwiseAbs().maxCoeff())) {
    throw InvalidParameter("DesignProblem: past is not symmetric");
  }
  if (lambda_min(0.5 * (past + past.transpose())) < -1e-8 * std::max(1.0, past.cwiseAbs().maxCoeff())) {
    throw InvalidParameter("DesignProblem: past is not PSD");
  }
}

Mat information_matrix(const DesignProblem& p, const FrequencyAllocation& a) {
  if (a.k() != p.k || a.n_u() != p.n_u()) throw DimensionMismatch("information_matrix: allocation shape mismatch");
  CMat S = CMat::Zero(p.n_x(), p.n_x());
  for (int l = 0; l < p.k; ++l) S.noalias() += p.response.F[l] * a.bins[l] * p.response.F[l].adjoint();
  Mat M = p.past + p.weight() * S.real();
  return 0.5 * (M + M.transpose());
}

double objective(const DesignProblem& p, const FrequencyAllocation& a) { return lambda_min(information_matrix(p, a)); }

std::vector<CMat> weighted_gradient(const DesignProblem& p, const Mat& W) {
  std::vector<CMat> g(p.k);
  const CMat Wc = W.cast<Complex>();
  for (int l : free_bins(p.k)) {
    CMat G = p.weight() * (p.response.F[l].adjoint() * Wc * p.response.F[l]);
    G = 0.5 * (G + G.adjoint());
    g[l] = G;
    const int m = mirror_bin(l, p.k);
    if (m != l) g[m] = G.conjugate();
  }
  return g;
}

std::vector<CMat> ascent_direction(const DesignProblem& p, const FrequencyAllocation& a, double tau) {
  const Spectrum sp = sym_eig(information_matrix(p, a));
  Mat W;
  if (tau > 0.0) {
    const SoftMin sm = soft_min(sp.lambda, tau);
    W = sp.V * sm.w.asDiagonal() * sp.V.transpose();
  } else {
    W = sp.V.col(0) * sp.V.col(0).transpose();
  }
  return weighted_gradient(p, W);
}

LmoResult lmo(const std::vector<CMat>& gradient, double budget) {
  const int k = static_cast<int>(gradient.size());
  if (k == 0) throw InvalidParameter("lmo: empty gradient");
  const Eigen::Index n_u = gradient.front().rows();
  double scale = 0.0;
  for (const auto& G : gradient) scale = std::max(scale, G.cwiseAbs().maxCoeff());
  const double tie = 1e-12 * std::max(scale, 1e-300);

  LmoResult best;
  best.value = -std::numeric_limits<double>::infinity();
  double best_eig = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < k; ++l) {
    const auto pairs = bin_eigen_desc(gradient[l], self_mirror(l, k));
    for (int i = 0; i < static_cast<int>(pairs.size()); ++i) {
      if (pairs[i].first > best_eig + tie) {
        best_eig = pairs[i].first;
        best.bin = l;
        best.index = i;
        best.direction = pairs[i].second;
      }
    }
  }
  best.value = budget * best_eig;
  best.vertex = FrequencyAllocation::zeros(k, n_u);
  place_vertex(best.vertex, best.bin, best.direction, budget);
  return best;
}

namespace {

// Negated smoothed dual bound as a function of W = R R^T / ||R||^2, with the
// largest bin eigenvalue replaced by a soft-max at temperature tau.
struct DualObjective {
  const DesignProblem& p;
  double tau;

  double eval(const Vec& y, Vec* grad) const {
    const Eigen::Index n = p.n_x();
    const Mat R = Eigen::Map<const Mat>(y.data(), n, n);
    const double s = y.squaredNorm();
    const Mat Z = R * R.transpose() / s;
    const std::vector<CMat> G = weighted_gradient(p, Z);

    std::vector<int> bins;
    std::vector<Vec> mu;
    std::vector<CMat> vecs;
    double top = -std::numeric_limits<double>::infinity();
    for (int l : free_bins(p.k)) {
      const HermitianEigen he = hermitian_eig(G[l]);
      bins.push_back(l);
      mu.push_back(he.values);
      vecs.push_back(he.vectors);
      top = std::max(top, he.values.maxCoeff());
    }
    double sum = 0.0;
    for (const Vec& m : mu) sum += (m.array() - top).unaryExpr([&](double x) { return std::exp(x / tau); }).sum();
    const double f = Z.cwiseProduct(p.past).sum() + p.budget * (top + tau * std::log(sum));

    if (grad) {
      Mat H = p.past;
      for (std::size_t b = 0; b < bins.size(); ++b) {
        for (Eigen::Index i = 0; i < mu[b].size(); ++i) {
          const double w = std::exp((mu[b](i) - top) / tau) / sum;
          if (w < 1e-300) continue;
          const CVec z = p.response.F[bins[b]] * vecs[b].col(i);
          H += (w * p.budget * p.weight()) * (z * z.adjoint()).real();
        }
      }
      H = 0.5 * (H + H.transpose());
      const Mat gR = (2.0 / s) * (H * R - H.cwiseProduct(Z).sum() * R);
      *grad = -Eigen::Map<const Vec>(gR.data(), gR.size());
    }
    return -f;
  }
};

// Lowers the certificate by minimizing the smoothed dual bound over all
// trace-one PSD weights, starting from W0. Every iterate gives a valid bound;
// the smallest exact one is returned.
double refine_dual(const DesignProblem& p, const Mat& W0, double upper) {
  const Eigen::Index n = p.n_x();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (W0 + W0.transpose()));
  // Keep every direction slightly alive so the factor can move there.
  const Vec ev = es.eigenvalues().cwiseMax(0.0).array() + 1e-6 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
  Mat R = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  Vec y = Eigen::Map<const Vec>(R.data(), R.size());
  double best = upper;
  const double scale = std::max(std::abs(upper), 1e-300) / std::max(p.budget, 1e-300);
  for (double rel = 1e-3; rel >= 1e-10; rel *= 0.1) {
    y = ascend(DualObjective{p, rel * scale}, y, 200);
    const Mat Rm = Eigen::Map<const Mat>(y.data(), n, n);
    best = std::min(best, dual_bound(p, Rm * Rm.transpose() / y.squaredNorm()).upper);
  }
  return best;
}

}  // namespace

ConvexSolution solve_convex(const DesignProblem& p, const SolverOptions& opts) {
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  ConvexSolution sol;
  SolverReport& rep = sol.report;
  const int n = p.n_x();

  if (p.budget <= 0.0) {
    sol.allocation = FrequencyAllocation::zeros(p.k, p.n_u());
    rep.objective = lambda_min(p.past);
    rep.upper_bound = rep.objective;
    rep.termination = "zero-budget";
    rep.wall_time = elapsed();
    return sol;
  }

  // Start from the vertex that is best for the isotropic weight.
  Master master(p, 1.0);
  {
    const DualBound d0 = dual_bound(p, Mat::Identity(n, n) / n);
    master.alpha = Vec();
    master.add({d0.lmo.bin, d0.lmo.direction, atom_matrix(p, d0.lmo.bin, d0.lmo.direction)});
  }
  const double scale = std::max(master.assemble(master.alpha).trace() / n, 1e-300);
  double tau = opts.tau_initial * scale;
  master.set_tau(tau);

  double best_upper = std::numeric_limits<double>::infinity();
  Mat best_W;
  auto offer = [&](const Mat& Wc, double upper) {
    if (upper < best_upper) {
      best_upper = upper;
      best_W = Wc;
    }
  };
  int stage = 0;
  double stalled_value = -std::numeric_limits<double>::infinity();
  while (true) {
    master.solve(opts.max_master_steps);
    const Mat M = master.assemble(master.alpha);
    const Spectrum sp = sym_eig(M);
    const SoftMin sm = soft_min(sp.lambda, tau);
    rep.smoothed_history.push_back(sm.f);
    rep.stage_of_history.push_back(stage);

    const Mat W = sp.V * sm.w.asDiagonal() * sp.V.transpose();
    const DualBound smooth_bound = dual_bound(p, W);
    const DualBound sharp_bound = dual_bound(p, sp.V.col(0) * sp.V.col(0).transpose());
    offer(W, smooth_bound.upper);
    offer(sp.V.col(0) * sp.V.col(0).transpose(), sharp_bound.upper);
    for (double rel : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2}) {
      const Mat Ws = slackness_weight(sp, master.atoms, W, rel * (1.0 + std::abs(sp.lambda(0))));
      offer(Ws, dual_bound(p, Ws).upper);
    }

    const double lmin = sp.lambda(0);
    double current_linear = 0.0;
    for (std::size_t j = 0; j < master.atoms.size(); ++j) {
      current_linear += master.alpha(j) * W.cwiseProduct(master.atoms[j].A).sum();
    }
    const double smooth_gap = smooth_bound.lmo.value - current_linear;

    rep.objective = lmin;
    rep.upper_bound = best_upper;
    rep.gap = best_upper - lmin;
    if (rep.gap <= opts.tol * (1.0 + std::abs(lmin))) {
      rep.termination = "converged";
      break;
    }
    if (rep.iterations >= opts.max_iter) {
      rep.termination = "max-iterations";
      break;
    }
    const bool duplicate = std::any_of(master.atoms.begin(), master.atoms.end(), [&](const Atom& a) {
      return a.bin == smooth_bound.lmo.bin && std::abs(a.v.dot(smooth_bound.lmo.direction)) > 1.0 - 1e-12;
    });
    const bool stalled = sm.f <= stalled_value + 1e-15 * (1.0 + std::abs(sm.f));
    stalled_value = -std::numeric_limits<double>::infinity();
    if (smooth_gap <= 0.05 * tau || duplicate || stalled) {
      tau *= opts.tau_factor;
      ++stage;
      if (tau < opts.tau_floor * scale) {
        rep.termination = "tau-floor";
        break;
      }
      master.set_tau(tau);
      continue;
    }
    master.add({smooth_bound.lmo.bin, smooth_bound.lmo.direction,
                atom_matrix(p, smooth_bound.lmo.bin, smooth_bound.lmo.direction)});
    ++rep.iterations;
    stalled_value = sm.f;
  }

  sol.allocation = master.allocation();
  rep.objective = objective(p, sol.allocation);
  if (rep.termination == "tau-floor" || rep.termination == "max-iterations") {
    rep.upper_bound = std::min(rep.upper_bound, refine_dual(p, best_W, rep.upper_bound));
    if (rep.upper_bound - rep.objective <= opts.tol * (1.0 + std::abs(rep.objective))) rep.termination = "converged";
  }
  rep.gap = rep.upper_bound - rep.objective;
  rep.stages = stage + 1;
  rep.secondary_eigen_mass = secondary_mass(sol.allocation);

  // The optimal set is usually not a single point. When the solution found
  // has rank > 1 in some bin, look for a rank-1 point that still meets the
  // certificate and return that instead. An uncertified solution gets the
  // same search and keeps any rank-1 point that improves on it.
  const bool certified = rep.converged();
  if (!certified || rep.secondary_eigen_mass > 1e-9) {
    const Rank1Param param(p);
    const double radius = std::sqrt(p.budget);
    const Vec z0 = param.pack(extract_rank1(sol.allocation, p.gamma));
    NoiseSource rng(0x5eedULL);
    for (int attempt = 0; attempt < opts.rank1_attempts; ++attempt) {
      Vec y = z0.norm() > 0.0 ? Vec(z0 / z0.norm()) : Vec::Ones(param.dim());
      if (attempt > 0) {
        const Vec e = rng.normal_vector(param.dim());
        y += 0.5 * e / e.norm();
      }
      const Vec z = anneal(param, radius, y / y.norm(), n);
      const FourierCoefficients c = param.coefficients(z);
      const double v = rank1_objective(p, c);
      const bool meets = rep.upper_bound - v <= opts.tol * (1.0 + std::abs(v));
      if (meets || (!certified && v > rep.objective)) {
        sol.allocation = FrequencyAllocation::outer(c);
        rep.objective = v;
        rep.gap = rep.upper_bound - v;
        rep.secondary_eigen_mass = secondary_mass(sol.allocation);
      }
      if (meets) {
        if (!certified) rep.termination = "converged";
        break;
      }
    }
  }
  rep.wall_time = elapsed();
  return sol;
}

FourierCoefficients extract_rank1(const FrequencyAllocation& a, double gamma) {
  const int k = a.k();
  FourierCoefficients c;
  c.gamma = gamma;
  c.bins.assign(k, CVec::Zero(a.n_u()));
  for (int l : free_bins(k)) {
    const CMat U = 0.5 * (a.bins[l] + a.bins[l].adjoint());
    const double tr = U.trace().real();
    if (tr <= 0.0) continue;
    const auto pairs = bin_eigen_desc(U, self_mirror(l, k));
    const CVec u = std::sqrt(tr) * pairs.front().second;
    c.bins[l] = u;
    const int m = mirror_bin(l, k);
    if (m != l) c.bins[m] = u.conjugate();
  }
  return c;
}

std::vector<FourierCoefficients> eigen_signals(const FrequencyAllocation& a, double gamma) {
  const int k = a.k();
  const Eigen::Index n_u = a.n_u();
  std::vector<FourierCoefficients> out(n_u);
  for (auto& c : out) {
    c.gamma = gamma;
    c.bins.assign(k, CVec::Zero(n_u));
  }
  for (int l : free_bins(k)) {
    const CMat U = 0.5 * (a.bins[l] + a.bins[l].adjoint());
    if (U.trace().real() <= 0.0) continue;
    const auto pairs = bin_eigen_desc(U, self_mirror(l, k));
    const int m = mirror_bin(l, k);
    for (Eigen::Index j = 0; j < n_u; ++j) {
      const double lam = std::max(pairs[j].first, 0.0);
      const CVec u = std::sqrt(static_cast<double>(n_u) * lam) * pairs[j].second;
      out[j].bins[l] = u;
      if (m != l) out[j].bins[m] = u.conjugate();
    }
  }
  return out;
}

double rank1_objective(const DesignProblem& p, const FourierCoefficients& c) {
  return objective(p, FrequencyAllocation::outer(c));
}

OracleResult nonconvex_oracle(const DesignProblem& p, int restarts, std::uint64_t seed) {
  p.validate();
  OracleResult best;
  best.restarts = restarts;
  best.value = -std::numeric_limits<double>::infinity();
  const Rank1Param param(p);
  const double radius = std::sqrt(p.budget);
  if (radius == 0.0) {
    best.coeffs = param.coefficients(Vec::Zero(param.dim()));
    best.value = rank1_objective(p, best.coeffs);
    return best;
  }
  NoiseSource rng(seed);
  for (int r = 0; r < restarts; ++r) {
    Vec y = rng.normal_vector(param.dim());
    const Vec z = anneal(param, radius, y / y.norm(), p.n_x());
    const double v = lambda_min(param.information(z));
    if (v > best.value) {
      best.value = v;
      best.coeffs = param.coefficients(z);
    }
  }
  return best;
}

DesignedInput design_input(const DesignProblem& p, const SolverOptions& opts) {
  DesignedInput out;
  ConvexSolution sol = solve_convex(p, opts);
  out.allocation = std::move(sol.allocation);
  out.report = std::move(sol.report);
  out.coeffs = extract_rank1(out.allocation, p.gamma);
  out.rank1_value = rank1_objective(p, out.coeffs);
  // When the relaxation is not tight, plain extraction loses value; search
  // locally over rank-1 coefficients from the extracted point and from
  // perturbations of it, keeping the best point only if it improves.
  const bool exact = out.report.objective - out.rank1_value <= opts.tol * (1.0 + std::abs(out.rank1_value));
  if (!exact && opts.rank1_attempts > 0 && p.budget > 0.0) {
    const Rank1Param param(p);
    const double radius = std::sqrt(p.budget);
    const Vec z0 = param.pack(out.coeffs);
    NoiseSource rng(0x5eedULL + 1);
    for (int attempt = 0; attempt < opts.rank1_attempts; ++attempt) {
      Vec y = z0.norm() > 0.0 ? Vec(z0 / z0.norm()) : Vec::Ones(param.dim());
      if (attempt > 0) {
        const Vec e = rng.normal_vector(param.dim());
        y += 0.5 * e / e.norm();
      }
      const FourierCoefficients c = param.coefficients(anneal(param, radius, y / y.norm(), p.n_x()));
      const double v = rank1_objective(p, c);
      if (v > out.rank1_value) {
        out.coeffs = c;
        out.rank1_value = v;
        out.refined = true;
      }
    }
  }
  out.signal = synthesize_input(out.coeffs);
  return out;
}

InputSignal opt_input(const DesignProblem& p, double tol) {
  SolverOptions opts;
  opts.tol = tol;
  return design_input(p, opts).signal;
}

}  // namespace arxid
