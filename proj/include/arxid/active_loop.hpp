#pragma once

#include "arxid/designer.hpp"
#include "arxid/estimator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace arxid {

/// Episode lengths T_i = T_0 3^i and bin counts k_i = k_0 2^i, preceded by a
/// Gaussian warm-up.
struct Schedule {
  std::int64_t T0 = 200;
  int k0 = 10;
  int episodes = 4;
  std::int64_t warmup = 50;

  std::int64_t length(int i) const;
  int bins(int i) const;
  /// warmup + T_0 + ... + T_{episodes-1}
  std::int64_t total() const;
  /// Cumulative sample counts at the end of the warm-up and of each episode.
  std::vector<std::int64_t> boundaries() const;
  void validate() const;
};

struct StreamSeeds {
  std::uint64_t base = 0;
  std::uint64_t process = 0;  // w_t
  std::uint64_t gaussian = 0;  // warm-up and random-baseline inputs
  std::uint64_t exploration = 0;  // eta_t and fallback inputs

  static StreamSeeds from(std::uint64_t base);
};

struct EpisodeLog {
  int episode = 0;  // -1 for the warm-up
  std::string kind;  // "warm-up", "designed", "gaussian", "fallback"
  std::string fallback_reason;
  std::int64_t length = 0;
  std::int64_t cumulative = 0;  // samples collected once this episode ends
  int bins = 0;
  double gamma = 0.0;
  ThetaMatrix theta_design;  // estimate the design was computed from
  ThetaMatrix theta_after;   // estimate on all data at the end of the episode
  double error = 0.0;        // ||theta_after - theta*||
  FourierCoefficients coeffs;  // designed coefficients (empty when not designed)
  std::vector<InputSignal> signals;  // one per played design signal
  std::vector<Vec> inputs;   // realized u_t
  bool has_report = false;
  SolverReport report;
  double energy = 0.0;  // sum of u_t^T u_t
  // Noise-stream positions at episode start, for replay.
  std::uint64_t process_position = 0;
  std::uint64_t exploration_position = 0;
  std::uint64_t gaussian_position = 0;
};

struct Checkpoint {
  std::int64_t T = 0;
  double error = 0.0;
};

struct RunRecord {
  std::string strategy;  // "active", "random", "multi-eig"
  StreamSeeds seeds;
  double gamma = 0.0;
  std::vector<EpisodeLog> episodes;
  std::vector<Checkpoint> checkpoints;
  std::int64_t samples = 0;
  Dataset data{0, 0};
};

struct LoopOptions {
  SolverOptions solver;
  /// Extra sample counts at which to evaluate the prefix estimate, on top of
  /// the episode boundaries.
  std::vector<std::int64_t> extra_checkpoints;
  bool keep_inputs = true;
};

RunRecord run_active(const ARXParams& truth, const Schedule& schedule, double gamma, std::uint64_t seed,
                     const LoopOptions& opts = {});

/// i.i.d. N(0, gamma^2/n_u I) inputs for `T` samples. The first
/// `schedule.warmup` samples coincide with run_active's warm-up.
RunRecord run_random(const ARXParams& truth, const Schedule& schedule, double gamma, std::int64_t T,
                     std::uint64_t seed, const LoopOptions& opts = {});

/// One convex solve per episode; each of the n_u eigen-signals is then played
/// for T_i steps in turn.
RunRecord run_multi_eig(const ARXParams& truth, const Schedule& schedule, double gamma, std::uint64_t seed,
                        const LoopOptions& opts = {});

/// Total realized input energy over gamma^2 times the number of samples.
double energy_audit(const std::vector<EpisodeLog>& logs);
double energy_audit(const std::vector<RunRecord>& runs);

struct BoundReport {
  double delta = 0.0;
  std::int64_t T = 0;
  int k = 0;
  int p_tilde = 0;    // divisor of the input Gramian in the log-det term (AR order)
  double gamma_bar = 0.0;  // scalar s with Gamma_bar_T = s I
  double beta = 0.0;
  double rho = 0.0;
  double mixture_lambda_min = 0.0;  // lambda_min(Gamma_k(A, B_w) + gamma^2 Gamma^u_k)
  double log_det = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  double value = 0.0;
  bool finite = true;
  std::string diagnosis;
  std::string convention = "C = 1, unit constant in Gamma_bar_T";
};

/// Right-hand side of the finite-sample error bound with C = 1, evaluated for
/// caller-supplied coefficients. A diagnostic, not a probability statement.
BoundReport bound_evaluate(const ARXParams& truth, double gamma, std::int64_t T, int k,
                           const FourierCoefficients& coeffs, double delta);

struct Advisory {
  std::string note;
  std::vector<double> ratios;  // T_i / k_i
  double length_growth = 3.0;
  double bin_growth = 2.0;
  bool aggressive = false;  // T_0 < 2 k_0
};

Advisory check_assumption2(const Schedule& schedule);

}  // namespace arxid
