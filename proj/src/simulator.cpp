#include "arxid/simulator.hpp"

#include "arxid/errors.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

namespace arxid {

double NoiseSource::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NoiseSource::normal() {
  ++position_;
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Vec NoiseSource::normal_vector(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

InputSignal InputSignal::periodic(std::vector<Vec> one_period) {
  if (one_period.empty()) throw InvalidParameter("InputSignal::periodic: empty period");
  InputSignal s;
  s.period = static_cast<int>(one_period.size());
  s.samples = std::move(one_period);
  return s;
}

InputSignal InputSignal::finite(std::vector<Vec> samples) {
  InputSignal s;
  s.samples = std::move(samples);
  return s;
}

const Vec& InputSignal::at(std::int64_t t) const {
  if (t < 0) throw InvalidParameter("InputSignal::at: negative time");
  if (period) return samples[static_cast<std::size_t>(t % *period)];
  if (t >= static_cast<std::int64_t>(samples.size())) throw InvalidParameter("InputSignal::at: past end of signal");
  return samples[static_cast<std::size_t>(t)];
}

bool InputSignal::defined_on(std::int64_t horizon) const {
  if (samples.empty()) return horizon == 0;
  return period.has_value() || static_cast<std::int64_t>(samples.size()) >= horizon;
}

Plant::Plant(const ARXParams& params, NoiseSource noise, std::optional<Regressor> warm_state)
    : params_(params), noise_(std::move(noise)) {
  params_.validate();
  theta_ = ThetaMatrix::pack(params_).entries;
  noise_gain_ = psd_sqrt(params_.sigma_w);
  if (warm_state) {
    if (warm_state->x.size() != params_.n_x()) throw DimensionMismatch("Plant: warm state has the wrong length");
    state_ = *warm_state;
  } else {
    state_.x = Vec::Zero(params_.n_x());
  }
}

Vec Plant::observe() { return theta_ * state_.x + noise_gain_ * noise_.normal_vector(params_.n_y); }

Sample Plant::step(const Vec& u) {
  if (u.size() != params_.n_u) throw DimensionMismatch("Plant::step: input has the wrong dimension");
  Sample s;
  s.x = state_.x;
  s.y = observe();
  const int n_y = params_.n_y;
  const int n_u = params_.n_u;
  const int yb = params_.p * n_y;
  Vec& x = state_.x;
  // shift newest-first histories by one slot
  if (params_.p > 1) x.segment(n_y, (params_.p - 1) * n_y) = s.x.segment(0, (params_.p - 1) * n_y);
  x.segment(0, n_y) = s.y;
  if (params_.q > 1) x.segment(yb + n_u, (params_.q - 1) * n_u) = s.x.segment(yb, (params_.q - 1) * n_u);
  x.segment(yb, n_u) = u;
  ++time_;
  return s;
}

Trajectory simulate(const ARXParams& params, const InputSignal& u, NoiseSource noise, std::int64_t T,
                    std::optional<Regressor> warm_state) {
  if (T < 1) throw InvalidParameter("simulate: horizon must be >= 1");
  if (u.dim() != params.n_u) throw DimensionMismatch("simulate: input dimension does not match n_u");
  if (!u.defined_on(T)) throw InvalidParameter("simulate: input not defined on [0, T-1]");
  Trajectory traj;
  traj.seed = noise.seed();
  Plant plant(params, std::move(noise), std::move(warm_state));
  traj.y.reserve(T + 1);
  traj.u.reserve(T);
  traj.x.reserve(T + 1);
  for (std::int64_t t = 0; t < T; ++t) {
    const Vec& ut = u.at(t);
    Sample s = plant.step(ut);
    traj.x.push_back(std::move(s.x));
    traj.y.push_back(std::move(s.y));
    traj.u.push_back(ut);
  }
  traj.x.push_back(plant.state().x);
  traj.y.push_back(plant.observe());
  return traj;
}

std::vector<Regressor> simulate_lifted(const LiftedSystem& L, const InputSignal& u, NoiseSource noise,
                                       std::int64_t T, const Vec& x0) {
  if (x0.size() != L.n_x) throw DimensionMismatch("simulate_lifted: x0 has the wrong length");
  if (u.dim() != L.B_u.cols()) throw DimensionMismatch("simulate_lifted: input dimension does not match B_u");
  if (!u.defined_on(T)) throw InvalidParameter("simulate_lifted: input not defined on [0, T-1]");
  std::vector<Regressor> xs;
  xs.reserve(T + 1);
  xs.push_back({x0});
  for (std::int64_t t = 0; t < T; ++t) {
    const Vec w = noise.normal_vector(L.B_w.cols());
    xs.push_back({L.A * xs.back().x + L.B_u * u.at(t) + L.B_w * w});
  }
  return xs;
}

InputSignal gaussian_input(double gamma, int n_u, std::int64_t T, NoiseSource& noise) {
  if (!(gamma > 0.0)) throw InvalidParameter("gaussian_input: gamma must be positive");
  const double sd = gamma / std::sqrt(static_cast<double>(n_u));
  std::vector<Vec> s;
  s.reserve(T);
  for (std::int64_t t = 0; t < T; ++t) s.push_back(sd * noise.normal_vector(n_u));
  return InputSignal::finite(std::move(s));
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  const auto n_y = traj.y.empty() ? 0 : traj.y.front().size();
  const auto n_u = traj.u.empty() ? 0 : traj.u.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n_y; ++i) os << ",y_" << i + 1;
  for (Eigen::Index i = 0; i < n_u; ++i) os << ",u_" << i + 1;
  os << "\n";
  os.precision(17);
  for (std::size_t t = 0; t < traj.y.size(); ++t) {
    os << t;
    for (Eigen::Index i = 0; i < n_y; ++i) os << "," << traj.y[t](i);
    for (Eigen::Index i = 0; i < n_u; ++i) {
      os << ",";
      if (t < traj.u.size()) os << traj.u[t](i);
    }
    os << "\n";
  }
}

namespace {

template <typename T>
void put(std::ofstream& f, T v) {
  static_assert(std::endian::native == std::endian::little, "binary archives assume a little-endian host");
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw InvalidParameter("read_trajectory_binary: truncated file");
  return v;
}

}  // namespace

void write_trajectory_binary(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidParameter("write_trajectory_binary: cannot open " + path);
  const auto n_y = static_cast<std::uint32_t>(traj.y.empty() ? 0 : traj.y.front().size());
  const auto n_u = static_cast<std::uint32_t>(traj.u.empty() ? 0 : traj.u.front().size());
  f.write("ARXT", 4);
  put<std::uint32_t>(f, 1);
  put<std::uint64_t>(f, traj.seed);
  put<std::uint32_t>(f, n_y);
  put<std::uint32_t>(f, n_u);
  put<std::uint64_t>(f, static_cast<std::uint64_t>(traj.u.size()));
  for (const auto& y : traj.y)
    for (Eigen::Index i = 0; i < y.size(); ++i) put<double>(f, y(i));
  for (const auto& u : traj.u)
    for (Eigen::Index i = 0; i < u.size(); ++i) put<double>(f, u(i));
}

Trajectory read_trajectory_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidParameter("read_trajectory_binary: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "ARXT") throw InvalidParameter("read_trajectory_binary: bad magic");
  if (get<std::uint32_t>(f) != 1) throw InvalidParameter("read_trajectory_binary: unsupported version");
  Trajectory traj;
  traj.seed = get<std::uint64_t>(f);
  const auto n_y = get<std::uint32_t>(f);
  const auto n_u = get<std::uint32_t>(f);
  const auto T = get<std::uint64_t>(f);
  traj.y.assign(T + 1, Vec(n_y));
  traj.u.assign(T, Vec(n_u));
  for (auto& y : traj.y)
    for (std::uint32_t i = 0; i < n_y; ++i) y(i) = get<double>(f);
  for (auto& u : traj.u)
    for (std::uint32_t i = 0; i < n_u; ++i) u(i) = get<double>(f);
  return traj;
}

}  // namespace arxid
