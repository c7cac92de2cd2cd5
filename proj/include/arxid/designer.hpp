#pragma once

#include "arxid/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace arxid {

/// Everything the relaxed E-optimal input design needs for one episode:
///
///   maximize   lambda_min( past + c * sum_l F_l U_l F_l^H )
///   subject to sum_l Tr(U_l) <= budget,  U_l Hermitian PSD,
///              U_{k-l} = conj(U_l),
///
/// with F_l the frequency response of `model` and c = T_i / (2 k^2).
struct DesignProblem {
  LiftedSystem model;
  std::int64_t horizon = 1;  // T_i
  int k = 1;
  double gamma = 1.0;
  double budget = 0.0;  // trace budget, k^2 gamma^2 / 2 by default
  Mat past;             // un-normalized sum of x_t x_t^T
  FrequencyResponse response;

  /// Builds the problem with the default budget k^2 gamma^2 / 2 and an
  /// empty (zero) past when `past` is empty.
  static DesignProblem make(const LiftedSystem& model, std::int64_t horizon, int k, double gamma,
                            const Mat& past = Mat());

  double weight() const { return static_cast<double>(horizon) / (2.0 * k * static_cast<double>(k)); }
  int n_x() const { return model.n_x; }
  Eigen::Index n_u() const { return model.B_u.cols(); }
  void validate() const;
};

/// M(U) = past + c sum_l F_l U_l F_l^H (real symmetric).
Mat information_matrix(const DesignProblem& p, const FrequencyAllocation& a);

/// lambda_min(M(U)).
double objective(const DesignProblem& p, const FrequencyAllocation& a);

/// Gradient of the design objective with respect to each U_l. With
/// `tau == 0` this is the supergradient c F_l^H v v^T F_l built from a unit
/// eigenvector v of lambda_min; with `tau > 0` it is the gradient of the
/// soft-min -tau log sum exp(-lambda_i / tau).
std::vector<CMat> ascent_direction(const DesignProblem& p, const FrequencyAllocation& a, double tau = 0.0);

/// Gradient with respect to U_l of <W, M(U)> for a fixed weight matrix W.
std::vector<CMat> weighted_gradient(const DesignProblem& p, const Mat& W);

struct LmoResult {
  FrequencyAllocation vertex;
  int bin = 0;
  int index = 0;      // eigen-index within the bin, 0 = largest
  double value = 0.0;  // budget * top eigenvalue
  CVec direction;     // unit eigenvector placed at `bin`
};

/// Linear maximization over {U_l PSD, sum Tr U_l <= budget} with mirror
/// coupling: all budget goes to the top eigenvector of the best bin, split
/// evenly with its mirror when the mirror is a different bin. Ties break to
/// the lowest (bin, index).
LmoResult lmo(const std::vector<CMat>& gradient, double budget);

struct SolverOptions {
  double tol = 1e-6;        // relative certificate target: gap <= tol (1 + |objective|)
  int max_iter = 2000;      // conditional-gradient iterations over all stages
  double tau_initial = 1e-1;  // first smoothing level, relative to the mean eigenvalue of M
  double tau_factor = 0.1;
  double tau_floor = 1e-12;   // relative
  int max_master_steps = 200;
  int rank1_attempts = 8;  // local searches for a rank-1 point in the optimal set
};

struct SolverReport {
  double objective = 0.0;  // exact lambda_min at the returned allocation
  double upper_bound = 0.0;
  double gap = 0.0;  // upper_bound - objective
  int iterations = 0;
  int stages = 0;
  double wall_time = 0.0;  // seconds
  std::string termination;  // "converged", "max-iterations", "tau-floor", "zero-budget"
  /// Largest fraction of a bin's trace outside its top eigenvector. Zero when
  /// every bin is rank 1, in which case scaling the top eigenvector by
  /// sqrt(trace) and by sqrt(top eigenvalue) coincide.
  double secondary_eigen_mass = 0.0;
  std::vector<double> smoothed_history;  // smoothed objective after each master solve
  std::vector<int> stage_of_history;

  bool converged() const { return termination == "converged" || termination == "zero-budget"; }
};

struct ConvexSolution {
  FrequencyAllocation allocation;
  SolverReport report;
};

ConvexSolution solve_convex(const DesignProblem& p, const SolverOptions& opts = {});

/// Per bin: sqrt(Tr U_l) times the phase-normalized top eigenvector, with
/// mirrored bins set to the conjugate so the synthesized signal is real.
FourierCoefficients extract_rank1(const FrequencyAllocation& a, double gamma = 1.0);

/// The n_u signals of the sequential-eigenvector scheme: signal j carries the
/// j-th largest eigenpair of every bin scaled by sqrt(n_u * lambda_j), so the
/// average of their outer products over j reproduces the allocation.
std::vector<FourierCoefficients> eigen_signals(const FrequencyAllocation& a, double gamma = 1.0);

struct OracleResult {
  FourierCoefficients coeffs;
  double value = 0.0;
  int restarts = 0;
};

/// Multistart first-order ascent directly over rank-1 coefficients (the
/// non-convex formulation). Intended for tiny instances (n_u <= 2, k <= 8).
OracleResult nonconvex_oracle(const DesignProblem& p, int restarts = 64, std::uint64_t seed = 1);

/// Objective of a rank-1 design: lambda_min(past + c sum F u u^H F^H).
double rank1_objective(const DesignProblem& p, const FourierCoefficients& c);

struct DesignedInput {
  InputSignal signal;
  FourierCoefficients coeffs;
  FrequencyAllocation allocation;
  SolverReport report;
  double rank1_value = 0.0;  // objective of `coeffs`
  bool refined = false;      // coeffs come from local ascent, not plain extraction
};

/// solve_convex -> extract_rank1 -> synthesize_input. When the extracted
/// point falls short of the relaxation by more than opts.tol, a local search
/// over rank-1 coefficients (opts.rank1_attempts starts) replaces it if better.
DesignedInput design_input(const DesignProblem& p, const SolverOptions& opts = {});
InputSignal opt_input(const DesignProblem& p, double tol = 1e-6);

}  // namespace arxid
