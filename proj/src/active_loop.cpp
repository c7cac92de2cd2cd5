#include "arxid/active_loop.hpp"

#include "arxid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace arxid {

std::int64_t Schedule::length(int i) const {
  std::int64_t t = T0;
  for (int j = 0; j < i; ++j) t *= 3;
  return t;
}

int Schedule::bins(int i) const {
  int k = k0;
  for (int j = 0; j < i; ++j) k *= 2;
  return k;
}

std::int64_t Schedule::total() const {
  std::int64_t t = warmup;
  for (int i = 0; i < episodes; ++i) t += length(i);
  return t;
}

std::vector<std::int64_t> Schedule::boundaries() const {
  std::vector<std::int64_t> out;
  std::int64_t t = warmup;
  if (warmup > 0) out.push_back(t);
  for (int i = 0; i < episodes; ++i) {
    t += length(i);
    out.push_back(t);
  }
  return out;
}

void Schedule::validate() const {
  if (T0 < 1) throw InvalidParameter("schedule: T0 must be >= 1");
  if (k0 < 1) throw InvalidParameter("schedule: k0 must be >= 1");
  if (episodes < 0) throw InvalidParameter("schedule: episodes must be >= 0");
  if (warmup < 0) throw InvalidParameter("schedule: warmup must be >= 0");
  if (episodes > 20) throw InvalidParameter("schedule: episodes must be <= 20");
}

StreamSeeds StreamSeeds::from(std::uint64_t base) {
  StreamSeeds s;
  s.base = base;
  s.process = derive_seed(base, 1);
  s.gaussian = derive_seed(base, 2);
  s.exploration = derive_seed(base, 3);
  return s;
}

namespace {

void require_stable(const ARXParams& truth) {
  truth.validate();
  const LiftedSystem L = lift(truth);
  if (L.n_y_block > 0 && spectral_radius(L.A11()) >= 1.0) {
    throw InstabilityError("true system violates the stability assumption (rho(A11) >= 1)");
  }
}

class Runner {
 public:
  Runner(const ARXParams& truth, double gamma, std::uint64_t seed, const std::string& strategy,
         const LoopOptions& opts)
      : truth_(truth),
        opts_(opts),
        theta_star_(ThetaMatrix::pack(truth)),
        plant_(truth, NoiseSource(StreamSeeds::from(seed).process)),
        gaussian_(StreamSeeds::from(seed).gaussian),
        explore_(StreamSeeds::from(seed).exploration) {
    if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
    require_stable(truth);
    record_.strategy = strategy;
    record_.seeds = StreamSeeds::from(seed);
    record_.gamma = gamma;
    record_.data = Dataset(truth.n_x(), truth.n_y);
  }

  double gamma() const { return record_.gamma; }
  int n_u() const { return truth_.n_u; }

  EpisodeLog begin(int episode, const std::string& kind, std::int64_t length, int bins) {
    EpisodeLog log;
    log.episode = episode;
    log.kind = kind;
    log.length = length;
    log.bins = bins;
    log.gamma = record_.gamma;
    log.process_position = plant_.noise().position();
    log.exploration_position = explore_.position();
    log.gaussian_position = gaussian_.position();
    return log;
  }

  Vec gaussian_input() { return gaussian_.normal_vector(n_u()) * (gamma() / std::sqrt(static_cast<double>(n_u()))); }
  Vec exploration_noise() {
    return explore_.normal_vector(n_u()) * (gamma() / std::sqrt(2.0 * n_u()));
  }
  Vec fallback_input() { return explore_.normal_vector(n_u()) * (gamma() / std::sqrt(static_cast<double>(n_u()))); }

  void play(const Vec& u, EpisodeLog& log) {
    const Sample s = plant_.step(u);
    record_.data.append(s.x, s.y);
    log.energy += u.squaredNorm();
    if (opts_.keep_inputs) log.inputs.push_back(u);
  }

  Estimate estimate() const { return ols(record_.data); }

  void finish(EpisodeLog& log) {
    const Estimate e = estimate();
    log.theta_after = e.theta;
    log.error = estimation_error(e, theta_star_);
    log.cumulative = record_.data.size();
    record_.episodes.push_back(std::move(log));
  }

  void warmup(std::int64_t n) {
    if (n <= 0) return;
    EpisodeLog log = begin(-1, "warm-up", n, 0);
    for (std::int64_t t = 0; t < n; ++t) play(gaussian_input(), log);
    finish(log);
  }

  // Design problem for the next episode, or nullopt with a reason.
  std::optional<DesignProblem> problem(const Estimate& est, std::int64_t T, int k, std::string& reason) const {
    try {
      const LiftedSystem L = lift(est.theta, truth_.p, truth_.q, truth_.n_u, truth_.sigma_w);
      if (L.n_y_block > 0 && spectral_radius(L.A11()) >= 1.0) {
        reason = "unstable estimate";
        return std::nullopt;
      }
      DesignProblem p = DesignProblem::make(L, T, k, gamma(), record_.data.information());
      if (p.response.ill_conditioned) {
        reason = "ill-conditioned frequency response";
        return std::nullopt;
      }
      return p;
    } catch (const Error& e) {
      reason = e.what();
      return std::nullopt;
    }
  }

  RunRecord finalize(std::vector<std::int64_t> checkpoints) {
    const std::int64_t n = record_.data.size();
    checkpoints.insert(checkpoints.end(), opts_.extra_checkpoints.begin(), opts_.extra_checkpoints.end());
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    for (std::int64_t T : checkpoints) {
      if (T < 1 || T > n) continue;
      record_.checkpoints.push_back({T, estimation_error(ols(record_.data, T), theta_star_)});
    }
    record_.samples = n;
    return std::move(record_);
  }

 private:
  ARXParams truth_;
  LoopOptions opts_;
  ThetaMatrix theta_star_;
  Plant plant_;
  NoiseSource gaussian_;
  NoiseSource explore_;
  RunRecord record_;
};

void play_fallback(Runner& r, EpisodeLog& log, const std::string& reason) {
  log.kind = "fallback";
  log.fallback_reason = reason;
  for (std::int64_t t = 0; t < log.length; ++t) r.play(r.fallback_input(), log);
}

}  // namespace

RunRecord run_active(const ARXParams& truth, const Schedule& schedule, double gamma, std::uint64_t seed,
                     const LoopOptions& opts) {
  schedule.validate();
  Runner r(truth, gamma, seed, "active", opts);
  r.warmup(schedule.warmup);
  for (int i = 0; i < schedule.episodes; ++i) {
    const std::int64_t T = schedule.length(i);
    const int k = schedule.bins(i);
    EpisodeLog log = r.begin(i, "designed", T, k);
    const Estimate est = r.estimate();
    log.theta_design = est.theta;
    std::string reason;
    std::optional<DesignProblem> p = r.problem(est, T, k, reason);
    std::optional<DesignedInput> d;
    if (p) {
      try {
        d = design_input(*p, opts.solver);
      } catch (const Error& e) {
        reason = e.what();
      }
    }
    if (!d) {
      play_fallback(r, log, reason);
    } else {
      log.has_report = true;
      log.report = d->report;
      log.coeffs = d->coeffs;
      log.signals.push_back(d->signal);
      for (std::int64_t t = 0; t < T; ++t) r.play(d->signal.at(t) + r.exploration_noise(), log);
    }
    r.finish(log);
  }
  return r.finalize(schedule.boundaries());
}

RunRecord run_random(const ARXParams& truth, const Schedule& schedule, double gamma, std::int64_t T,
                     std::uint64_t seed, const LoopOptions& opts) {
  schedule.validate();
  if (T < schedule.warmup) throw InvalidParameter("run_random: T shorter than the warm-up");
  Runner r(truth, gamma, seed, "random", opts);
  r.warmup(schedule.warmup);
  if (T > schedule.warmup) {
    EpisodeLog log = r.begin(0, "gaussian", T - schedule.warmup, 0);
    for (std::int64_t t = 0; t < log.length; ++t) r.play(r.gaussian_input(), log);
    r.finish(log);
  }
  return r.finalize(schedule.boundaries());
}

RunRecord run_multi_eig(const ARXParams& truth, const Schedule& schedule, double gamma, std::uint64_t seed,
                        const LoopOptions& opts) {
  schedule.validate();
  Runner r(truth, gamma, seed, "multi-eig", opts);
  r.warmup(schedule.warmup);
  SolverOptions solver = opts.solver;
  solver.rank1_attempts = 0;  // play the eigen-structure the solver found
  for (int i = 0; i < schedule.episodes; ++i) {
    const std::int64_t T = schedule.length(i);
    const int k = schedule.bins(i);
    EpisodeLog log = r.begin(i, "designed", T * r.n_u(), k);
    const Estimate est = r.estimate();
    log.theta_design = est.theta;
    std::string reason;
    std::optional<DesignProblem> p = r.problem(est, T, k, reason);
    bool designed = false;
    if (p) {
      try {
        ConvexSolution sol = solve_convex(*p, solver);
        std::vector<FourierCoefficients> sigs = eigen_signals(sol.allocation, gamma);
        for (const auto& c : sigs) log.signals.push_back(synthesize_input(c));
        log.coeffs = sigs.front();
        log.has_report = true;
        log.report = sol.report;
        designed = true;
      } catch (const Error& e) {
        reason = e.what();
        log.signals.clear();
      }
    }
    if (!designed) {
      play_fallback(r, log, reason);
    } else {
      for (const InputSignal& s : log.signals) {
        for (std::int64_t t = 0; t < T; ++t) r.play(s.at(t) + r.exploration_noise(), log);
      }
    }
    r.finish(log);
  }
  return r.finalize(schedule.boundaries());
}

double energy_audit(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw InvalidParameter("energy_audit: no logs");
  double energy = 0.0, denom = 0.0;
  for (const auto& l : logs) {
    energy += l.energy;
    denom += l.gamma * l.gamma * static_cast<double>(l.length);
  }
  return denom > 0.0 ? energy / denom : 0.0;
}

double energy_audit(const std::vector<RunRecord>& runs) {
  std::vector<EpisodeLog> all;
  for (const auto& r : runs) all.insert(all.end(), r.episodes.begin(), r.episodes.end());
  return energy_audit(all);
}

BoundReport bound_evaluate(const ARXParams& truth, double gamma, std::int64_t T, int k,
                           const FourierCoefficients& coeffs, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("bound_evaluate: delta must lie in (0, 1)");
  if (T < 1 || k < 1) throw InvalidParameter("bound_evaluate: T and k must be >= 1");
  require_stable(truth);
  const LiftedSystem L = lift(truth);

  BoundReport b;
  b.delta = delta;
  b.T = T;
  b.k = k;
  b.p_tilde = truth.p;
  b.rho = spectral_radius(L.A);
  b.beta = transient_constant(L);
  b.gamma_bar = b.beta * b.beta * gamma * gamma * static_cast<double>(T) / ((1.0 - b.rho) * (1.0 - b.rho));

  const Mat Gw = gramian_t(L.A, L.B_w, k);
  const Mat Gu = gramian_t(L.A, L.B_u, k);
  const Mat S = Gw + (gamma * gamma / b.p_tilde) * Gu;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  const Vec mu = es.eigenvalues();
  const double inf = std::numeric_limits<double>::infinity();
  if (mu(0) <= 1e-14 * std::max(mu.cwiseAbs().maxCoeff(), 1e-300)) {
    b.finite = false;
    b.diagnosis = "Gramian mixture in the log-det term is singular";
    b.log_det = inf;
  } else {
    for (Eigen::Index i = 0; i < mu.size(); ++i) b.log_det += std::log1p(b.gamma_bar / mu(i));
  }
  b.numerator = std::sqrt(std::log(1.0 / delta) + L.n_x + b.log_det);

  const Mat D = Gw + gamma * gamma * steady_cov_vec(L, coeffs);
  b.mixture_lambda_min = lambda_min(D);
  if (b.mixture_lambda_min <= 0.0) {
    b.finite = false;
    if (!b.diagnosis.empty()) b.diagnosis += "; ";
    b.diagnosis += "noise-plus-design covariance is singular";
    b.denominator = 0.0;
  } else {
    b.denominator = std::sqrt(static_cast<double>(T) * b.mixture_lambda_min);
  }
  b.value = b.finite ? b.numerator / b.denominator : inf;
  return b;
}

Advisory check_assumption2(const Schedule& schedule) {
  Advisory a;
  for (int i = 0; i < std::max(schedule.episodes, 1); ++i) {
    a.ratios.push_back(static_cast<double>(schedule.length(i)) / schedule.bins(i));
  }
  a.aggressive = schedule.T0 < 2 * static_cast<std::int64_t>(schedule.k0);
  std::ostringstream os;
  os << "The minimum initial episode length is a system-dependent function of k_0 that is not evaluated here. "
     << "Episode lengths grow by " << a.length_growth << "x and bin counts by " << a.bin_growth
     << "x per episode, so T_i/k_i grows geometrically (T_0/k_0 = " << a.ratios.front() << ").";
  if (a.aggressive) os << " T_0 < 2 k_0: the first episode sees fewer than two periods; the bin count is aggressive.";
  a.note = os.str();
  return a;
}

}  // namespace arxid
