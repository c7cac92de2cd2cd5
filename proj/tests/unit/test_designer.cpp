#include "doctest.h"

#include "arxid/designer.hpp"
#include "arxid/errors.hpp"
#include "arxid/json_io.hpp"
#include "arxid/oracles/oracles.hpp"

#include <cmath>
#include <random>

using namespace arxid;

namespace {

Mat random_spd(int n, std::mt19937_64& g, double shift = 0.1) {
  std::normal_distribution<double> N;
  Mat R(n, n);
  for (Eigen::Index e = 0; e < R.size(); ++e) R(e) = N(g);
  return R * R.transpose() + shift * Mat::Identity(n, n);
}

// A feasible, mirror-symmetric allocation with random PSD bins.
FrequencyAllocation random_allocation(int k, Eigen::Index n_u, double budget, std::mt19937_64& g) {
  std::normal_distribution<double> N;
  FrequencyAllocation a = FrequencyAllocation::zeros(k, n_u);
  for (int l = 0; l <= k / 2; ++l) {
    const int m = mirror_bin(l, k);
    CMat R(n_u, n_u);
    for (Eigen::Index e = 0; e < R.size(); ++e) R(e) = m == l ? Complex(N(g), 0.0) : Complex(N(g), N(g));
    a.bins[l] = R * R.adjoint();
    a.bins[m] = a.bins[l].conjugate();
  }
  const double s = budget / a.total_trace();
  for (auto& U : a.bins) U *= s;
  return a;
}

DesignProblem random_problem(int ny, int nu, int p, int q, int k, std::uint64_t seed, double past_scale = 1.0) {
  std::mt19937_64 g(seed);
  const ARXParams P = oracles::random_stable_system(ny, nu, p, q, 0.6, seed);
  const LiftedSystem L = lift(P);
  return DesignProblem::make(L, 200, k, 1.0, past_scale * random_spd(L.n_x, g));
}

double lambda_min_of(const Mat& M) {
  return Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double directional(const std::vector<CMat>& G, const FrequencyAllocation& d) {
  double s = 0.0;
  for (std::size_t l = 0; l < G.size(); ++l) s += (G[l] * d.bins[l]).trace().real();
  return s;
}

}  // namespace

TEST_CASE("problem construction and validation") {
  const LiftedSystem L = lift(paper_system());
  const DesignProblem p = DesignProblem::make(L, 200, 10, 10.0);
  CHECK(p.budget == doctest::Approx(100.0 * 100.0 / 2.0));
  CHECK(p.weight() == doctest::Approx(200.0 / 200.0));
  CHECK(p.past.rows() == L.n_x);
  CHECK(p.past.norm() == 0.0);
  CHECK(p.response.k == 10);

  DesignProblem bad = p;
  bad.budget = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.past = Mat::Identity(3, 3);
  CHECK_THROWS_AS(bad.validate(), DimensionMismatch);
  bad = p;
  bad.past(0, 1) = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("objective examples and concavity") {
  std::mt19937_64 g(11);
  DesignProblem p = random_problem(2, 2, 2, 1, 4, 5);
  const FrequencyAllocation z = FrequencyAllocation::zeros(p.k, p.n_u());
  CHECK(objective(p, z) == doctest::Approx(lambda_min_of(p.past)).epsilon(1e-12));

  p.past = Mat::Identity(p.n_x(), p.n_x());
  CHECK(objective(p, z) == doctest::Approx(1.0));

  for (int trial = 0; trial < 20; ++trial) {
    const FrequencyAllocation a = random_allocation(p.k, p.n_u(), p.budget, g);
    const FrequencyAllocation b = random_allocation(p.k, p.n_u(), p.budget, g);
    const double t = std::uniform_real_distribution<double>(0.0, 1.0)(g);
    FrequencyAllocation m = a;
    for (int l = 0; l < p.k; ++l) m.bins[l] = t * a.bins[l] + (1.0 - t) * b.bins[l];
    const double lhs = objective(p, m);
    const double rhs = t * objective(p, a) + (1.0 - t) * objective(p, b);
    CHECK(lhs >= rhs - 1e-9 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("information matrix matches the resolvent sum") {
  std::mt19937_64 g(3);
  const DesignProblem p = random_problem(1, 2, 2, 2, 5, 9);
  const FrequencyAllocation a = random_allocation(p.k, p.n_u(), p.budget, g);
  CMat S = CMat::Zero(p.n_x(), p.n_x());
  for (int l = 0; l < p.k; ++l) {
    const CMat F = oracles::resolvent_response(p.model.A, p.model.B_u, l, p.k);
    S += F * a.bins[l] * F.adjoint();
  }
  CHECK(S.imag().norm() < 1e-9 * S.norm());
  const Mat M = p.past + p.weight() * S.real();
  const Mat got = information_matrix(p, a);
  CHECK((got - M).norm() < 1e-10 * M.norm());
  CHECK((got - got.transpose()).norm() == 0.0);
}

TEST_CASE("ascent direction agrees with finite differences") {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 10; ++trial) {
    const DesignProblem p = random_problem(1 + trial % 2, 1 + (trial / 2) % 2, 2, 1, 2 + trial % 4, 100 + trial);
    const FrequencyAllocation a = random_allocation(p.k, p.n_u(), p.budget, g);
    const FrequencyAllocation d = random_allocation(p.k, p.n_u(), 1.0, g);

    // Only meaningful where lambda_min is simple.
    const Eigen::SelfAdjointEigenSolver<Mat> es(information_matrix(p, a));
    const double sep = es.eigenvalues()(1) - es.eigenvalues()(0);
    if (sep < 1e-3 * (1.0 + std::abs(es.eigenvalues()(0)))) continue;

    const std::vector<CMat> G = ascent_direction(p, a);
    REQUIRE(G.size() == static_cast<std::size_t>(p.k));
    const double h = 1e-6 * std::max(1.0, p.budget);
    const double fd = oracles::lambda_min_directional_fd(p, a, d, h);
    CHECK(directional(G, d) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));

    const Vec v = es.eigenvectors().col(0);
    for (int l = 0; l < p.k; ++l) {
      const CMat F = oracles::resolvent_response(p.model.A, p.model.B_u, l, p.k);
      const CVec Fv = F.adjoint() * v.cast<Complex>();
      const CMat expect = p.weight() * Fv * Fv.adjoint();
      CHECK((G[l] - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
      CHECK((G[l] - G[l].adjoint()).norm() <= 1e-12 * (1.0 + G[l].norm()));
      CHECK(Eigen::SelfAdjointEigenSolver<CMat>(G[l]).eigenvalues()(0) >= -1e-12 * (1.0 + G[l].norm()));
    }

    const std::vector<CMat> W = weighted_gradient(p, v * v.transpose());
    for (int l = 0; l < p.k; ++l) CHECK((W[l] - G[l]).norm() <= 1e-12 * (1.0 + G[l].norm()));
  }
}

TEST_CASE("smoothed gradient is a convex combination of eigen gradients") {
  std::mt19937_64 g(8);
  const DesignProblem p = random_problem(2, 2, 1, 1, 3, 77);
  const FrequencyAllocation a = random_allocation(p.k, p.n_u(), p.budget, g);
  const std::vector<CMat> G = ascent_direction(p, a, 1e-2);
  // <G, U> equals <W, M(U) - past> with W PSD of unit trace, so it is bounded
  // by the extreme eigenvalues of the design part.
  const FrequencyAllocation d = random_allocation(p.k, p.n_u(), 1.0, g);
  DesignProblem q = p;
  q.past.setZero();
  const Eigen::SelfAdjointEigenSolver<Mat> es(information_matrix(q, d));
  const double v = directional(G, d);
  CHECK(v >= es.eigenvalues().minCoeff() - 1e-10);
  CHECK(v <= es.eigenvalues().maxCoeff() + 1e-10);
}

TEST_CASE("linear maximization oracle examples") {
  SUBCASE("single bin") {
    std::vector<CMat> G{CMat::Zero(2, 2)};
    G[0](0, 0) = 2.0;
    G[0](1, 1) = 1.0;
    const LmoResult r = lmo(G, 3.0);
    CHECK(r.bin == 0);
    CHECK(r.value == doctest::Approx(6.0));
    CHECK(std::abs(r.vertex.bins[0](0, 0) - Complex(3.0)) < 1e-14);
    CHECK(std::abs(r.vertex.bins[0](1, 1)) < 1e-14);
  }
  SUBCASE("best bin takes everything") {
    std::vector<CMat> G{CMat::Constant(1, 1, 1.0), CMat::Constant(1, 1, 3.0)};
    const LmoResult r = lmo(G, 2.0);
    CHECK(r.bin == 1);
    CHECK(r.value == doctest::Approx(6.0));
    CHECK(std::abs(r.vertex.bins[0](0, 0)) == 0.0);
    CHECK(std::abs(r.vertex.bins[1](0, 0) - Complex(2.0)) < 1e-14);
  }
  SUBCASE("ties go to the lowest bin") {
    std::vector<CMat> G(4, CMat::Identity(1, 1));
    CHECK(lmo(G, 1.0).bin == 0);
    G[0] *= 0.5;
    // bins 1 and 3 mirror each other; the budget is split between them.
    const LmoResult r = lmo(G, 1.0);
    CHECK(r.bin == 1);
    CHECK(r.vertex.bins[1](0, 0).real() == doctest::Approx(0.5));
    CHECK(r.vertex.bins[3](0, 0).real() == doctest::Approx(0.5));
    CHECK(r.vertex.total_trace() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(lmo({}, 1.0), InvalidParameter);
}

TEST_CASE("convex solve matches the grid for one input and two bins") {
  for (int trial = 0; trial < 5; ++trial) {
    const DesignProblem p = random_problem(1 + trial % 2, 1, 1 + trial % 2, 1, 2, 300 + trial, 0.05);
    const ConvexSolution s = solve_convex(p);
    const oracles::GridResult grid = oracles::grid_search_k2(p, 2e-3);
    CHECK(s.report.converged());
    CHECK(s.report.objective >= grid.value - 1e-9 * (1.0 + std::abs(grid.value)));
    CHECK(s.report.objective - grid.value <= 1e-2 * std::max(1.0, std::abs(grid.value)));
    CHECK(grid.value <= s.report.upper_bound + 1e-9 * (1.0 + std::abs(grid.value)));
  }
}

TEST_CASE("convex solve feasibility and certificate") {
  for (int trial = 0; trial < 6; ++trial) {
    const DesignProblem p = random_problem(1 + trial % 2, 1 + (trial / 2) % 2, 2, 1, 2 + 2 * (trial % 3), 500 + trial);
    const ConvexSolution s = solve_convex(p);
    const FrequencyAllocation& a = s.allocation;
    REQUIRE(a.k() == p.k);
    CHECK(s.report.converged());
    CHECK(a.total_trace() <= p.budget * (1.0 + 1e-8) + 1e-8);
    CHECK(a.total_trace() >= p.budget * (1.0 - 1e-6));
    for (int l = 0; l < p.k; ++l) {
      const CMat& U = a.bins[l];
      CHECK((U - U.adjoint()).norm() <= 1e-10 * (1.0 + U.norm()));
      CHECK(Eigen::SelfAdjointEigenSolver<CMat>(U).eigenvalues()(0) >= -1e-9 * (1.0 + U.norm()));
      CHECK((a.bins[mirror_bin(l, p.k)] - U.conjugate()).norm() <= 1e-10 * (1.0 + U.norm()));
    }
    CHECK(s.report.gap >= -1e-9 * (1.0 + std::abs(s.report.objective)));
    CHECK(s.report.gap <= 1e-6 * (1.0 + std::abs(s.report.objective)));
    CHECK(s.report.objective == doctest::Approx(objective(p, a)).epsilon(1e-12));
    CHECK(s.report.objective >= lambda_min_of(p.past) - 1e-9);
    CHECK(s.report.secondary_eigen_mass >= 0.0);
    CHECK(s.report.smoothed_history.size() == s.report.stage_of_history.size());
  }
}

TEST_CASE("dominant past term solves almost immediately") {
  const LiftedSystem L = lift(paper_system());
  DesignProblem p = DesignProblem::make(L, 200, 4, 1.0, 1e9 * Mat::Identity(L.n_x, L.n_x));
  const ConvexSolution s = solve_convex(p);
  CHECK(s.report.converged());
  CHECK(s.report.objective == doctest::Approx(1e9).epsilon(1e-6));
  CHECK(s.report.iterations <= 5);
}

TEST_CASE("zero budget returns the past") {
  DesignProblem p = random_problem(1, 2, 1, 1, 4, 42);
  p.budget = 0.0;
  const ConvexSolution s = solve_convex(p);
  CHECK(s.report.termination == "zero-budget");
  CHECK(s.report.objective == doctest::Approx(lambda_min_of(p.past)));
  CHECK(s.allocation.total_trace() == 0.0);
  const InputSignal u = opt_input(p);
  for (const auto& x : u.samples) CHECK(x.norm() == 0.0);
}

TEST_CASE("optimal design beats white excitation on the reference system") {
  const LiftedSystem L = lift(paper_system());
  const DesignProblem p = DesignProblem::make(L, 200, 10, 10.0);
  const ConvexSolution s = solve_convex(p);
  CHECK(s.report.converged());
  FrequencyAllocation iso = FrequencyAllocation::zeros(p.k, p.n_u());
  const double per = p.budget / (p.k * static_cast<double>(p.n_u()));
  for (auto& U : iso.bins) U = per * CMat::Identity(p.n_u(), p.n_u());
  CHECK(s.report.objective >= objective(p, iso) - 1e-9);
  CHECK(s.report.objective > 0.0);
}

TEST_CASE("rank-1 extraction") {
  std::mt19937_64 g(4);
  std::normal_distribution<double> N;
  const int k = 6;
  FourierCoefficients c;
  c.gamma = 2.0;
  c.bins.assign(k, CVec::Zero(2));
  for (int l = 1; l <= 2; ++l) {
    c.bins[l] = CVec::Zero(2);
    c.bins[l] << Complex(N(g), N(g)), Complex(N(g), N(g));
    c.bins[mirror_bin(l, k)] = c.bins[l].conjugate();
  }
  const FrequencyAllocation a = FrequencyAllocation::outer(c);
  const FourierCoefficients e = extract_rank1(a, 2.0);
  CHECK(e.gamma == 2.0);
  CHECK(e.symmetry_residual() < 1e-12);
  CHECK(e.energy() == doctest::Approx(a.total_trace()));
  for (int l = 0; l < k; ++l) {
    const CMat back = e.bins[l] * e.bins[l].adjoint();
    CHECK((back - a.bins[l]).norm() <= 1e-10 * (1.0 + a.bins[l].norm()));
  }
  CHECK(e.bins[0].norm() == 0.0);
  CHECK(e.bins[3].norm() == 0.0);
}

TEST_CASE("eigen signals average back to the allocation") {
  std::mt19937_64 g(6);
  const FrequencyAllocation a = random_allocation(5, 2, 10.0, g);
  const std::vector<FourierCoefficients> sig = eigen_signals(a, 1.0);
  REQUIRE(sig.size() == 2);
  for (int l = 0; l < a.k(); ++l) {
    CMat avg = CMat::Zero(2, 2);
    for (const auto& s : sig) avg += s.bins[l] * s.bins[l].adjoint();
    avg /= 2.0;
    CHECK((avg - a.bins[l]).norm() <= 1e-10 * (1.0 + a.bins[l].norm()));
  }
  for (const auto& s : sig) CHECK(s.symmetry_residual() < 1e-12);
}

TEST_CASE("relaxation is tight for a single input") {
  for (int trial = 0; trial < 6; ++trial) {
    const DesignProblem p = random_problem(1 + trial % 2, 1, 1 + trial % 2, 1 + (trial / 2) % 2, 2 + trial, 700 + trial);
    SolverOptions so;
    so.tol = 1e-9;
    const DesignedInput d = design_input(p, so);
    CHECK(d.report.converged());
    CHECK(d.rank1_value == doctest::Approx(rank1_objective(p, d.coeffs)).epsilon(1e-12));
    CHECK(std::abs(d.rank1_value - d.report.objective) <= 1e-6 * (1.0 + std::abs(d.report.objective)));
    CHECK_FALSE(d.refined);
  }
}

TEST_CASE("relaxation can be loose with two inputs") {
  // One output, first order, two inputs, two bins. Both bins are real, so a
  // rank-1 design spans at most two directions of a three-dimensional state.
  ARXParams s;
  s.n_y = 1;
  s.n_u = 2;
  s.A = {Mat::Constant(1, 1, 0.5)};
  Mat b(1, 2);
  b << 1.0, 0.7;
  s.B = {b};
  s.sigma_w = Mat::Identity(1, 1);
  const LiftedSystem L = lift(s);
  REQUIRE(L.n_x == 3);
  const DesignProblem p = DesignProblem::make(L, 200, 2, 1.0);
  const ConvexSolution relaxed = solve_convex(p);
  CHECK(relaxed.report.converged());
  CHECK(relaxed.report.objective > 1e-3);

  const OracleResult o = nonconvex_oracle(p, 16, 3);
  CHECK(std::abs(o.value) <= 1e-9 * (1.0 + p.budget * p.weight()));
  const DesignedInput d = design_input(p);
  CHECK(d.rank1_value <= 1e-9 * (1.0 + p.budget * p.weight()));
}

TEST_CASE("non-convex oracle is bounded by the relaxation") {
  for (int trial = 0; trial < 4; ++trial) {
    const DesignProblem p = random_problem(1, 1 + trial % 2, 1, 1, 2 + 2 * (trial / 2), 900 + trial, 0.1);
    const ConvexSolution s = solve_convex(p);
    const OracleResult o = nonconvex_oracle(p, 16, 1);
    CHECK(o.value <= s.report.upper_bound + 1e-6 * (1.0 + std::abs(s.report.upper_bound)));
    CHECK(o.value == doctest::Approx(rank1_objective(p, o.coeffs)).epsilon(1e-10));
    CHECK(o.coeffs.energy() <= p.budget * (1.0 + 1e-9));
  }
  const DesignProblem p = random_problem(1, 1, 1, 1, 2, 950, 0.05);
  const OracleResult o = nonconvex_oracle(p, 32, 2);
  const oracles::GridResult grid = oracles::grid_search_k2(p, 1e-3);
  CHECK(o.value >= grid.value - 1e-9 * (1.0 + std::abs(grid.value)));
  CHECK(o.value - grid.value <= 1e-2 * std::max(1.0, std::abs(grid.value)));
}

TEST_CASE("synthesized optimal input respects the power budget") {
  const LiftedSystem L = lift(paper_system());
  for (int k : {2, 5, 10}) {
    const double gamma = 3.0;
    const DesignProblem p = DesignProblem::make(L, 200, k, gamma);
    const DesignedInput d = design_input(p);
    REQUIRE(d.signal.period.has_value());
    CHECK(*d.signal.period == k);
    double power = 0.0;
    std::vector<Vec> one;
    for (int t = 0; t < k; ++t) {
      power += d.signal.at(t).squaredNorm();
      one.push_back(d.signal.at(t));
    }
    power /= k;
    CHECK(power <= gamma * gamma / 2.0 * (1.0 + 1e-6));
    const FourierCoefficients back = analyze_period(one, gamma);
    for (int l = 0; l < k; ++l) CHECK((back.bins[l] - d.coeffs.bins[l]).norm() <= 1e-9 * (1.0 + d.coeffs.bins[l].norm()));

    const InputSignal u = opt_input(p);
    CHECK(u.period == d.signal.period);
  }
}

TEST_CASE("report and allocation JSON round trip") {
  std::mt19937_64 g(2);
  const DesignProblem p = random_problem(1, 2, 1, 1, 4, 1234);
  const ConvexSolution s = solve_convex(p);
  json j = s.report;
  const SolverReport r = j.get<SolverReport>();
  CHECK(r.objective == s.report.objective);
  CHECK(r.upper_bound == s.report.upper_bound);
  CHECK(r.gap == s.report.gap);
  CHECK(r.iterations == s.report.iterations);
  CHECK(r.termination == s.report.termination);

  const FrequencyAllocation a = random_allocation(4, 2, 3.0, g);
  json ja = a;
  const FrequencyAllocation b = ja.get<FrequencyAllocation>();
  REQUIRE(b.k() == 4);
  for (int l = 0; l < 4; ++l) CHECK((b.bins[l] - a.bins[l]).norm() == 0.0);
}
