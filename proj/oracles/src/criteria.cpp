#include "arxid/oracles/criteria.hpp"

#include "arxid/harness.hpp"
#include "arxid/oracles/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace arxid::oracles {

void CriteriaContext::record(const SolverReport& r, const std::string& source) {
  reports.push_back(r);
  report_sources.push_back(source);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// lambda_min(past + c sum F u u^H F^H) with F from the oracle resolvent.
double rank1_value_direct(const DesignProblem& p, const FourierCoefficients& c) {
  CMat S = CMat::Zero(p.n_x(), p.n_x());
  for (int l = 0; l < c.k(); ++l) {
    const CVec z = resolvent_response(p.model.A, p.model.B_u, l, c.k()) * c.bins[l];
    S += z * z.adjoint();
  }
  const Mat M = p.past + p.weight() * S.real();
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

// Sum of x_t x_t^T over a Gaussian warm-up of `n` samples with unit gamma.
Mat warmup_information(const ARXParams& P, std::int64_t n, std::uint64_t seed) {
  NoiseSource input_noise(derive_seed(seed, 2));
  const InputSignal u = gaussian_input(1.0, P.n_u, n, input_noise);
  const Trajectory tr = simulate(P, u, NoiseSource(derive_seed(seed, 1)), n);
  Mat S = Mat::Zero(P.n_x(), P.n_x());
  for (std::int64_t t = 0; t < n; ++t) S += tr.x[t] * tr.x[t].transpose();
  return S;
}

// Conjugate-symmetric coefficients with Gaussian entries.
FourierCoefficients random_symmetric(int k, int n_u, std::mt19937_64& g, double gamma) {
  std::normal_distribution<double> N(0.0, 1.0);
  FourierCoefficients c;
  c.gamma = gamma;
  c.bins.assign(k, CVec::Zero(n_u));
  for (int l = 0; l <= k / 2; ++l) {
    const int m = mirror_bin(l, k);
    CVec v(n_u);
    for (int i = 0; i < n_u; ++i) v(i) = m == l ? Complex(N(g), 0.0) : Complex(N(g), N(g));
    c.bins[l] = gamma * v;
    c.bins[m] = c.bins[l].conjugate();
  }
  return c;
}

struct Instance {
  ARXParams system;
  int k = 2;
  Mat past;
  std::string label;
};

Instance draw_instance(std::uint64_t seed, bool single_input_k2) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> one_two(1, 2), kpow(1, 3);
  std::uniform_real_distribution<double> rho(0.3, 0.9);
  Instance in;
  const int ny = one_two(g), nu = single_input_k2 ? 1 : one_two(g), p = one_two(g), q = one_two(g);
  in.k = single_input_k2 ? 2 : (1 << kpow(g));
  const double r = rho(g);
  in.system = random_stable_system(ny, nu, p, q, r, g());
  in.past = warmup_information(in.system, 50, g());
  in.label = fmt("ny=%d nu=%d p=%d q=%d k=%d rho=%.2f", ny, nu, p, q, in.k, r);
  return in;
}

CriterionResult named(int id, const std::string& name) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  return r;
}

bool certified(const SolverReport& r) { return r.gap <= 1e-5 * (1.0 + std::abs(r.objective)); }

}  // namespace

CriterionResult criterion_rank1_exactness(CriteriaContext& ctx) {
  const auto t0 = Clock::now();
  CriterionResult res = named(1, "rank-1 design matches the non-convex oracle");
  int ok = 0, not_tight = 0;
  double worst = 0.0;
  const int n = 30;
  for (int i = 0; i < n; ++i) {
    const Instance in = draw_instance(derive_seed(0xC1, i), false);
    const DesignProblem p = DesignProblem::make(lift(in.system), 200, in.k, 1.0, in.past);
    // The absolute 1e-6 floor below the oracle needs a solve tighter than the
    // default relative tolerance.
    SolverOptions so;
    so.tol = 1e-9;
    const DesignedInput d = design_input(p, so);
    ctx.record(d.report, "criterion 1 instance " + std::to_string(i));
    const OracleResult orc = nonconvex_oracle(p, 64, 1);
    const double v = rank1_value_direct(p, d.coeffs);
    const double o = rank1_value_direct(p, orc.coeffs);
    // Objectives that are exactly zero need an absolute floor at round-off scale.
    const double floor = 1e-9 * (1.0 + spectral_norm(p.past));
    const double rel = std::abs(v - o) / std::max(std::abs(o), 1e-300);
    const bool pass = std::abs(v - o) <= 1e-4 * std::abs(o) + floor && v >= o - 1e-6;
    if (pass) ++ok;
    if (std::abs(o) > floor) worst = std::max(worst, rel);
    // The relaxation value exceeding the best rank-1 value means the convex
    // problem is not tight on this instance.
    const bool loose = d.report.objective - std::max(v, o) > 1e-4 * std::abs(d.report.objective) + floor;
    if (loose) ++not_tight;
    res.details.push_back(fmt("%s #%02d %s rank-1 %.9g oracle %.9g relaxation %.9g rel %.2e%s%s",
                              pass ? "ok  " : "MISS", i, in.label.c_str(), v, o, d.report.objective, rel,
                              d.refined ? " refined" : "", loose ? " not-tight" : ""));
  }
  const double secs = since(t0);
  res.pass = ok == n && secs < 120.0;
  res.summary = fmt("%d/%d instances within 1e-4 relative (worst %.2e), relaxation not tight on %d, %.1f s", ok, n,
                    worst, not_tight, secs);
  res.seconds = secs;
  return res;
}

CriterionResult criterion_grid_optimality(CriteriaContext& ctx) {
  const auto t0 = Clock::now();
  CriterionResult res = named(2, "convex solve matches trace-allocation grid search");
  int ok = 0;
  double worst = 0.0;
  const int n = 10;
  for (int i = 0; i < n; ++i) {
    const Instance in = draw_instance(derive_seed(0xC2, i), true);
    const DesignProblem p = DesignProblem::make(lift(in.system), 200, 2, 1.0, in.past);
    const ConvexSolution s = solve_convex(p);
    ctx.record(s.report, "criterion 2 instance " + std::to_string(i));
    const GridResult grid = grid_search_k2(p, 1e-3);
    const double diff = s.report.objective - grid.value;
    // Relative reading of the 1e-3 tolerance: the grid value itself is only
    // resolved to the step size times the slope, which scales with the objective.
    const double tol = 1e-3 * std::max(1.0, std::abs(grid.value));
    const bool pass = std::abs(diff) <= tol && diff >= -1e-9 * (1.0 + std::abs(grid.value));
    if (pass) ++ok;
    worst = std::max(worst, std::abs(diff) / std::max(1.0, std::abs(grid.value)));
    res.details.push_back(fmt("%s #%02d %s solve %.9g grid %.9g (s0 %.4g s1 %.4g) diff %.2e", pass ? "ok  " : "MISS",
                              i, in.label.c_str(), s.report.objective, grid.value, grid.s0, grid.s1, diff));
  }
  res.seconds = since(t0);
  res.pass = ok == n;
  res.summary = fmt("%d/%d instances within 1e-3 (worst scaled diff %.2e), %.1f s", ok, n, worst, res.seconds);
  return res;
}

CriterionResult criterion_steady_state(CriteriaContext&) {
  const auto t0 = Clock::now();
  CriterionResult res = named(3, "time-averaged covariance matches the frequency-domain formula");
  std::mt19937_64 g(0xC3);
  std::uniform_int_distribution<int> one_two(1, 2), kdist(2, 16);
  std::uniform_real_distribution<double> rho(0.2, 0.95);
  int ok = 0;
  double worst = 0.0;
  const int n = 20;
  for (int i = 0; i < n; ++i) {
    const int ny = one_two(g), nu = one_two(g), p = one_two(g), q = one_two(g), k = kdist(g);
    const double r = rho(g);
    const ARXParams P = random_stable_system(ny, nu, p, q, r, g());
    const FourierCoefficients c = random_symmetric(k, nu, g, 2.0);
    const DirectLift L = direct_lift(P);
    const double r_lift = spectral_radius_by_roots(L.A.topLeftCorner(p * ny, p * ny));
    const auto discard = static_cast<std::int64_t>(std::ceil(std::log(1e-6) / std::log(r_lift)));
    const Mat avg = time_average_covariance(L, c, discard, 200);
    const Mat formula = steady_cov_vec(lift(P), c);
    const double err = (avg - formula).norm() / formula.norm();
    const bool pass = err <= 1e-3;
    if (pass) ++ok;
    worst = std::max(worst, err);
    res.details.push_back(fmt("%s #%02d ny=%d nu=%d p=%d q=%d k=%d rho=%.2f discard %lld rel %.2e", pass ? "ok  " : "MISS",
                              i, ny, nu, p, q, k, r, static_cast<long long>(discard), err));
  }
  res.seconds = since(t0);
  res.pass = ok == n && res.seconds < 60.0;
  res.summary = fmt("%d/%d systems within 1e-3 relative Frobenius (worst %.2e), %.1f s", ok, n, worst, res.seconds);
  return res;
}

CriterionResult criterion_energy(CriteriaContext& ctx) {
  const auto t0 = Clock::now();
  CriterionResult res = named(4, "active inputs respect the energy budget");
  const ARXParams P = paper_system();
  LoopOptions lo;
  lo.keep_inputs = false;
  double sum = 0.0, worst = 0.0;
  const int n = 20;
  for (int s = 0; s < n; ++s) {
    const RunRecord rec = run_active(P, Schedule{}, 10.0, static_cast<std::uint64_t>(s), lo);
    for (const auto& e : rec.episodes)
      if (e.has_report) ctx.record(e.report, fmt("criterion 4 seed %d episode %d", s, e.episode));
    const double ratio = energy_audit(rec.episodes);
    sum += ratio;
    worst = std::max(worst, ratio);
    res.details.push_back(fmt("seed %2d energy ratio %.6f", s, ratio));
  }
  const double mean = sum / n;
  res.seconds = since(t0);
  res.pass = mean <= 1.05;
  res.summary = fmt("mean energy ratio %.6f over %d runs (max %.6f), %.1f s", mean, n, worst, res.seconds);
  return res;
}

CriterionResult criterion_reproduction(CriteriaContext& ctx) {
  const auto t0 = Clock::now();
  CriterionResult res = named(5, "active beats both baselines on the 2x2 example");
  ExperimentConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);
  fs::path dir = ctx.scratch_dir.empty() ? fs::temp_directory_path() / fmt("arxid-acceptance-%lld",
                                                                           static_cast<long long>(Clock::now().time_since_epoch().count()))
                                         : fs::path(ctx.scratch_dir);
  cfg.output_dir = dir.string();
  const ExperimentResult er = run_experiment(cfg);

  std::ifstream jsonl(dir / "episodes.jsonl");
  std::string line;
  while (std::getline(jsonl, line)) {
    const json j = json::parse(line);
    if (j.contains("report")) {
      ctx.record(j.at("report").get<SolverReport>(),
                 fmt("criterion 5 %s run %d episode %d", j.at("strategy").get<std::string>().c_str(),
                     j.at("run").get<int>(), j.at("episode").get<int>()));
    }
  }

  const std::int64_t T = cfg.schedule.total();
  auto final_median = [&](const std::string& s) {
    for (const auto& r : er.summary.series(s))
      if (r.T == T) return r.median;
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double a = final_median("active"), r = final_median("random"), m = final_median("multi-eig");
  const Crossover c = crossover_metric(er.summary, "random", "active");
  for (const auto& s : {"random", "active", "multi-eig"}) {
    for (const auto& row : er.summary.series(s)) {
      if (row.extension) continue;
      res.details.push_back(fmt("%-9s T=%5lld median %.7f IQR [%.7f, %.7f] energy %.4f", s, static_cast<long long>(row.T),
                                row.median, row.p25, row.p75, row.energy_ratio));
    }
  }
  res.details.push_back("crossover: " + c.text());
  res.details.push_back(fmt("completed %d, quarantined %d, archive %s", er.completed, er.quarantined, er.archive.c_str()));
  if (ctx.scratch_dir.empty()) {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  res.seconds = since(t0);
  const bool below_random = a < r, below_multi = a < m, ratio_ok = c.reached && c.ratio > 1.3;
  res.pass = below_random && below_multi && ratio_ok && er.quarantined == 0 && res.seconds < 900.0;
  res.summary = fmt("final medians active %.7f random %.7f multi-eig %.7f; crossover %.3f%s; %.1f s", a, r, m, c.ratio,
                    c.reached ? "" : " (not reached)", res.seconds);
  if (!below_multi) res.summary += "; active not below multi-eig";
  if (!below_random) res.summary += "; active not below random";
  return res;
}

CriterionResult criterion_ols(CriteriaContext&) {
  const auto t0 = Clock::now();
  CriterionResult res = named(6, "least squares recovers the parameters");
  ARXParams P = paper_system();
  const ThetaMatrix truth = ThetaMatrix::pack(P);
  auto fit = [&](const ARXParams& sys, std::uint64_t seed, Dataset& d) {
    NoiseSource in(derive_seed(seed, 2));
    const InputSignal u = gaussian_input(1.0, sys.n_u, 500, in);
    const Trajectory tr = simulate(sys, u, NoiseSource(derive_seed(seed, 1)), 500);
    for (std::int64_t t = 0; t < 500; ++t) d.append(tr.x[t], tr.y[t]);
    return ols(d);
  };

  ARXParams quiet = P;
  quiet.sigma_w = Mat::Zero(P.n_y, P.n_y);
  Dataset d0(P.n_x(), P.n_y);
  const double noiseless = estimation_error(fit(quiet, 0xC6, d0), truth);

  Dataset d1(P.n_x(), P.n_y);
  const Estimate noisy = fit(P, 0xC6 + 1, d1);
  const Mat X = d1.regressors(), Y = d1.outputs();
  const Mat th = noisy.theta.entries;
  const double residual = (X.transpose() * (Y - X * th.transpose())).norm() /
                          (X.norm() * X.norm() * th.norm() + X.norm() * Y.norm());
  const double vs_normal = (normal_equations(X, Y) - th).norm() / th.norm();

  res.pass = noiseless <= 1e-8 && residual < 1e-9;
  res.seconds = since(t0);
  res.details.push_back(fmt("noiseless error %.3e", noiseless));
  res.details.push_back(fmt("normal-equation residual %.3e", residual));
  res.details.push_back(fmt("difference from Cholesky normal equations %.3e", vs_normal));
  res.summary = fmt("noiseless error %.2e, normal-equation residual %.2e", noiseless, residual);
  return res;
}

CriterionResult criterion_certificates(CriteriaContext& ctx) {
  const auto t0 = Clock::now();
  CriterionResult res = named(7, "every convex solve exits with a certificate or a flag");
  int certified_n = 0, flagged = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < ctx.reports.size(); ++i) {
    const SolverReport& r = ctx.reports[i];
    worst = std::max(worst, r.gap / (1.0 + std::abs(r.objective)));
    if (certified(r)) {
      ++certified_n;
    } else if (r.termination == "max-iterations") {
      ++flagged;
      res.details.push_back("flagged: " + ctx.report_sources[i]);
    } else {
      ++bad;
      res.details.push_back(fmt("uncertified: %s gap %.3e objective %.6g termination %s",
                                ctx.report_sources[i].c_str(), r.gap, r.objective, r.termination.c_str()));
    }
  }
  res.seconds = since(t0);
  res.pass = !ctx.reports.empty() && bad == 0;
  res.summary = fmt("%zu solves: %d certified, %d max-iteration flags, %d uncertified; worst scaled gap %.2e",
                    ctx.reports.size(), certified_n, flagged, bad, worst);
  if (ctx.reports.empty()) res.summary = "no solver reports collected (run criteria 1-5 first)";
  return res;
}

CriterionResult criterion_invariants(CriteriaContext&) {
  const auto t0 = Clock::now();
  CriterionResult res = named(8, "structural invariants");
  std::mt19937_64 g(0xC8);

  // Spectral radius of the lift equals that of the output block.
  int rho_ok = 0;
  double rho_worst = 0.0, roots_worst = 0.0;
  {
    std::uniform_int_distribution<int> d13(1, 3);
    std::uniform_real_distribution<double> rr(0.05, 0.99);
    for (int i = 0; i < 100; ++i) {
      const int ny = d13(g), nu = d13(g), p = d13(g), q = d13(g);
      const ARXParams P = random_stable_system(ny, nu, p, q, rr(g), g());
      const LiftedSystem L = lift(P);
      const double full = spectral_radius(L.A), block = spectral_radius(L.A11());
      const double roots = spectral_radius_by_roots(direct_lift(P).A.topLeftCorner(p * ny, p * ny));
      const double diff = std::abs(full - block);
      rho_worst = std::max(rho_worst, diff);
      roots_worst = std::max(roots_worst, std::abs(block - roots));
      const bool lift_ok = (direct_lift(P).A - L.A).norm() == 0.0;
      if (diff <= 1e-9 && std::abs(block - roots) <= 1e-6 && lift_ok) ++rho_ok;
    }
  }
  res.details.push_back(fmt("rho(lift) = rho(A11): %d/100, worst |diff| %.2e, worst vs polynomial roots %.2e", rho_ok,
                            rho_worst, roots_worst));

  // beta = 1 for normal matrices.
  int beta_ok = 0;
  double beta_worst = 0.0;
  {
    std::uniform_int_distribution<int> dn(1, 6);
    std::uniform_real_distribution<double> rad(0.0, 0.98), ang(0.0, 3.14159);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const int n = dn(g);
      Mat D = Mat::Zero(n, n);
      for (int j = 0; j < n;) {
        const double r = rad(g);
        if (j + 1 < n && (g() & 1)) {
          const double a = ang(g);
          D(j, j) = D(j + 1, j + 1) = r * std::cos(a);
          D(j, j + 1) = -r * std::sin(a);
          D(j + 1, j) = r * std::sin(a);
          j += 2;
        } else {
          D(j, j) = (g() & 1) ? r : -r;
          j += 1;
        }
      }
      Mat G(n, n);
      for (Eigen::Index e = 0; e < G.size(); ++e) G(e) = N(g);
      const Mat Q = Eigen::HouseholderQR<Mat>(G).householderQ();
      const Mat A = Q * D * Q.transpose();
      const double beta = transient_constant(A);
      beta_worst = std::max(beta_worst, std::abs(beta - 1.0));
      if (std::abs(beta - 1.0) <= 1e-9) ++beta_ok;
    }
  }
  res.details.push_back(fmt("beta = 1 for normal matrices: %d/20, worst |beta - 1| %.2e", beta_ok, beta_worst));

  // Synthesized inputs are real: designed and random symmetric coefficients.
  int synth_ok = 0, synth_n = 0;
  double imag_worst = 0.0, real_worst = 0.0;
  {
    std::vector<FourierCoefficients> sets;
    const LiftedSystem Lp = lift(paper_system());
    for (int k : {2, 3, 5, 10, 20}) sets.push_back(design_input(DesignProblem::make(Lp, 200, k, 10.0)).coeffs);
    std::uniform_int_distribution<int> dk(1, 24), du(1, 3);
    for (int i = 0; i < 20; ++i) sets.push_back(random_symmetric(dk(g), du(g), g, 10.0));
    for (const auto& c : sets) {
      ++synth_n;
      const auto ref = inverse_dft(c);
      const InputSignal s = synthesize_input(c);
      double scale = 1.0, im = 0.0, re = 0.0;
      for (const auto& v : ref) scale = std::max(scale, v.cwiseAbs().maxCoeff());
      for (std::size_t t = 0; t < ref.size(); ++t) {
        im = std::max(im, ref[t].imag().cwiseAbs().maxCoeff());
        re = std::max(re, (ref[t].real() - s.at(static_cast<std::int64_t>(t))).cwiseAbs().maxCoeff());
      }
      imag_worst = std::max(imag_worst, im / scale);
      real_worst = std::max(real_worst, re / scale);
      if (im < 1e-10 * scale && re < 1e-10 * scale) ++synth_ok;
    }
  }
  res.details.push_back(fmt("synthesized inputs real: %d/%d, worst imaginary residue %.2e, worst mismatch %.2e", synth_ok,
                            synth_n, imag_worst, real_worst));

  // Bound evaluator on the example system with its own design.
  bool bound_ok = true;
  {
    const ARXParams P = paper_system();
    const FourierCoefficients c = design_input(DesignProblem::make(lift(P), 200, 10, 10.0)).coeffs;
    const std::int64_t T = Schedule{}.total();
    double prev = std::numeric_limits<double>::infinity();
    std::string line = "bound at";
    for (std::int64_t m = 1; m <= 4; ++m) {
      const BoundReport b = bound_evaluate(P, 10.0, m * T, c.k(), c, 0.05);
      line += fmt(" T=%lld: %.6g", static_cast<long long>(m * T), b.value);
      if (!(b.finite && std::isfinite(b.value) && b.value > 0.0 && b.value < prev)) bound_ok = false;
      prev = b.value;
    }
    res.details.push_back(line + (bound_ok ? "" : " (not finite, positive and decreasing)"));
  }

  res.seconds = since(t0);
  res.pass = rho_ok == 100 && beta_ok == 20 && synth_ok == synth_n && bound_ok;
  res.summary = fmt("rho %d/100, beta %d/20, real synthesis %d/%d, bound %s", rho_ok, beta_ok, synth_ok, synth_n,
                    bound_ok ? "ok" : "FAILED");
  return res;
}

std::vector<CriterionResult> run_all_criteria(CriteriaContext& ctx,
                                              const std::function<void(const CriterionResult&)>& on_result) {
  using Fn = CriterionResult (*)(CriteriaContext&);
  const Fn all[] = {criterion_rank1_exactness, criterion_grid_optimality, criterion_steady_state,
                    criterion_energy,          criterion_reproduction,    criterion_ols,
                    criterion_certificates,    criterion_invariants};
  std::vector<CriterionResult> out;
  for (Fn f : all) {
    CriterionResult r;
    try {
      r = f(ctx);
    } catch (const std::exception& e) {
      r.pass = false;
      r.summary = std::string("threw: ") + e.what();
    }
    if (r.id == 0) r.id = static_cast<int>(out.size()) + 1;
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.summary;
  return os.str();
}

}  // namespace arxid::oracles
