#pragma once

#include "arxid/arx_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace arxid {

/// Seeded i.i.d. standard-normal stream.
///
/// Generator semantics: std::mt19937_64 seeded with `seed`; each uniform is
/// (draw >> 11) * 2^-53; normals come in Box-Muller pairs
/// z0 = r cos(2 pi u2), z1 = r sin(2 pi u2) with r = sqrt(-2 log(1 - u1)),
/// z0 returned first. The engine and these formulas are fully specified by
/// the C++ standard and IEEE arithmetic, so streams replay across platforms
/// (up to libm rounding of log/cos/sin).
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  double normal();
  Vec normal_vector(Eigen::Index n);
  double uniform();

  std::uint64_t seed() const { return seed_; }
  /// Number of normals handed out so far.
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t position_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a stream tag
/// (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Input samples indexed from the signal's start time. A periodic signal
/// stores one period and repeats it.
struct InputSignal {
  std::vector<Vec> samples;
  std::optional<int> period;

  static InputSignal periodic(std::vector<Vec> one_period);
  static InputSignal finite(std::vector<Vec> samples);

  /// Throws InvalidParameter for t past the end of a finite signal.
  const Vec& at(std::int64_t t) const;
  Eigen::Index dim() const { return samples.empty() ? 0 : samples.front().size(); }
  bool defined_on(std::int64_t horizon) const;
};

struct Trajectory {
  std::vector<Vec> y;  // indices 0..T
  std::vector<Vec> u;  // indices 0..T-1
  std::vector<Vec> x;  // regressors 0..T (x_0 is the warm state or zero)
  std::uint64_t seed = 0;

  std::int64_t horizon() const { return static_cast<std::int64_t>(u.size()); }
};

/// One sample of the true system: the regressor before the step and the
/// output it produced.
struct Sample {
  Vec x;
  Vec y;
};

/// Stateful single-trajectory simulator. Each step draws n_y normals for
/// w_t, emits (x_t, y_t) with y_t = theta x_t + Sigma_w^{1/2} w_t and then
/// shifts y_t and u_t into the regressor.
class Plant {
 public:
  Plant(const ARXParams& params, NoiseSource noise, std::optional<Regressor> warm_state = std::nullopt);

  Sample step(const Vec& u);
  /// Output at the current time without advancing the input history.
  Vec observe();

  const Regressor& state() const { return state_; }
  const NoiseSource& noise() const { return noise_; }
  std::int64_t time() const { return time_; }

 private:
  ARXParams params_;
  Mat theta_;
  Mat noise_gain_;
  NoiseSource noise_;
  Regressor state_;
  std::int64_t time_ = 0;
};

/// Runs recursion (1) for t = 0..T under `u`; draws T + 1 noise vectors
/// (w_0..w_T) in time order. Zero initial conditions unless `warm_state` is
/// given. For exact episode continuation on a single trajectory use Plant.
Trajectory simulate(const ARXParams& params, const InputSignal& u, NoiseSource noise, std::int64_t T,
                    std::optional<Regressor> warm_state = std::nullopt);

/// Iterates the lifted process from x_0; returns x_0..x_T. Draws w_0..w_{T-1}
/// with the same per-step layout as simulate().
std::vector<Regressor> simulate_lifted(const LiftedSystem& L, const InputSignal& u, NoiseSource noise,
                                       std::int64_t T, const Vec& x0);

/// i.i.d. N(0, gamma^2/n_u I) samples, so E[u^T u] = gamma^2.
InputSignal gaussian_input(double gamma, int n_u, std::int64_t T, NoiseSource& noise);

/// CSV with columns t, y_1..y_ny, u_1..u_nu. The last row (t = T) has empty
/// input fields.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

/// Little-endian binary archive: "ARXT", u32 version, u64 seed, u32 n_y,
/// u32 n_u, u64 T, then y_0..y_T and u_0..u_{T-1} as f64.
void write_trajectory_binary(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_binary(const std::string& path);

}  // namespace arxid
