#include "doctest.h"

#include "arxid/active_loop.hpp"
#include "arxid/errors.hpp"
#include "arxid/oracles/oracles.hpp"

#include <cmath>

using namespace arxid;

namespace {

Schedule small_schedule() {
  Schedule s;
  s.T0 = 60;
  s.k0 = 4;
  s.episodes = 2;
  s.warmup = 30;
  return s;
}

ARXParams single_input_system() {
  ARXParams s;
  s.n_y = 1;
  s.n_u = 1;
  s.p = 2;
  s.q = 1;
  s.A = {Mat::Constant(1, 1, 0.6), Mat::Constant(1, 1, -0.2)};
  s.B = {Mat::Constant(1, 1, 1.5)};
  s.sigma_w = Mat::Identity(1, 1);
  return s;
}

std::vector<Vec> all_inputs(const RunRecord& r) {
  std::vector<Vec> u;
  for (const auto& e : r.episodes) u.insert(u.end(), e.inputs.begin(), e.inputs.end());
  return u;
}

}  // namespace

TEST_CASE("schedule arithmetic") {
  const Schedule s;
  CHECK(s.length(0) == 200);
  CHECK(s.length(1) == 600);
  CHECK(s.length(2) == 1800);
  CHECK(s.length(3) == 5400);
  CHECK(s.bins(0) == 10);
  CHECK(s.bins(1) == 20);
  CHECK(s.bins(3) == 80);
  CHECK(s.total() == 50 + 200 + 600 + 1800 + 5400);
  CHECK(s.boundaries() == std::vector<std::int64_t>{50, 250, 850, 2650, 8050});

  Schedule bad;
  bad.T0 = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = Schedule{};
  bad.k0 = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = Schedule{};
  bad.warmup = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("stream seeds are distinct and derived from the base") {
  const StreamSeeds a = StreamSeeds::from(7), b = StreamSeeds::from(8);
  CHECK(a.base == 7);
  CHECK(a.process == derive_seed(7, 1));
  CHECK(a.gaussian == derive_seed(7, 2));
  CHECK(a.exploration == derive_seed(7, 3));
  CHECK(a.process != a.gaussian);
  CHECK(a.process != b.process);
}

TEST_CASE("active runs replay exactly") {
  const ARXParams truth = paper_system();
  const Schedule s = small_schedule();
  const RunRecord a = run_active(truth, s, 2.0, 5);
  const RunRecord b = run_active(truth, s, 2.0, 5);
  REQUIRE(a.samples == s.total());
  REQUIRE(a.samples == b.samples);
  CHECK(a.data.regressors() == b.data.regressors());
  CHECK(a.data.outputs() == b.data.outputs());
  REQUIRE(a.episodes.size() == 3);
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].error == b.episodes[i].error);
    CHECK(a.episodes[i].process_position == b.episodes[i].process_position);
  }
  const RunRecord c = run_active(truth, s, 2.0, 6);
  CHECK(a.data.outputs() != c.data.outputs());
}

TEST_CASE("episode logs are consistent") {
  const ARXParams truth = paper_system();
  const Schedule s = small_schedule();
  const RunRecord r = run_active(truth, s, 2.0, 3);
  CHECK(r.strategy == "active");
  CHECK(r.episodes[0].episode == -1);
  CHECK(r.episodes[0].kind == "warm-up");
  const std::vector<std::int64_t> bounds = s.boundaries();
  std::int64_t before = 0;
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const EpisodeLog& e = r.episodes[i];
    CHECK(e.cumulative == bounds[i]);
    CHECK(e.length == e.cumulative - before);
    CHECK(static_cast<std::int64_t>(e.inputs.size()) == e.length);
    // The plant draws n_y normals per step.
    CHECK(e.process_position == static_cast<std::uint64_t>(truth.n_y * before));
    double energy = 0.0;
    for (const Vec& u : e.inputs) energy += u.squaredNorm();
    CHECK(e.energy == doctest::Approx(energy).epsilon(1e-12));
    before = e.cumulative;
  }
  for (std::size_t i = 1; i < r.episodes.size(); ++i) {
    const EpisodeLog& e = r.episodes[i];
    CHECK(e.kind == "designed");
    CHECK(e.has_report);
    CHECK(e.report.converged());
    CHECK(e.bins == s.bins(static_cast<int>(i) - 1));
    CHECK(e.coeffs.k() == e.bins);
    CHECK(e.coeffs.symmetry_residual() < 1e-12);
  }
  REQUIRE(r.checkpoints.size() == bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    CHECK(r.checkpoints[i].T == bounds[i]);
    CHECK(r.checkpoints[i].error == doctest::Approx(r.episodes[i].error).epsilon(1e-12));
  }
}

TEST_CASE("recorded data is one continuous trajectory") {
  const ARXParams truth = paper_system();
  const RunRecord r = run_active(truth, small_schedule(), 1.0, 9);
  const std::vector<Vec> u = all_inputs(r);
  REQUIRE(static_cast<std::int64_t>(u.size()) == r.samples);
  Plant plant(truth, NoiseSource(r.seeds.process));
  for (std::int64_t t = 0; t < r.samples; ++t) {
    const Sample smp = plant.step(u[t]);
    CHECK(smp.x == r.data.regressors().row(t).transpose());
    CHECK(smp.y == r.data.outputs().row(t).transpose());
  }
}

TEST_CASE("warm-up is shared by all strategies") {
  const ARXParams truth = paper_system();
  const Schedule s = small_schedule();
  const RunRecord a = run_active(truth, s, 2.0, 12);
  const RunRecord m = run_multi_eig(truth, s, 2.0, 12);
  const RunRecord g = run_random(truth, s, 2.0, s.total(), 12);
  CHECK(a.episodes[0].inputs == m.episodes[0].inputs);
  CHECK(a.episodes[0].inputs == g.episodes[0].inputs);
  const auto n = s.warmup;
  CHECK(a.data.regressors(n) == m.data.regressors(n));
  CHECK(a.data.outputs(n) == g.data.outputs(n));
  CHECK(a.episodes[0].error == g.episodes[0].error);
}

TEST_CASE("multi-eig plays each eigen-signal for a full episode") {
  const ARXParams truth = paper_system();
  const Schedule s = small_schedule();
  const RunRecord m = run_multi_eig(truth, s, 2.0, 4);
  CHECK(m.strategy == "multi-eig");
  for (int i = 0; i < s.episodes; ++i) {
    const EpisodeLog& e = m.episodes[i + 1];
    CHECK(e.length == 2 * s.length(i));
    CHECK(e.signals.size() == 2);
    CHECK(e.has_report);
  }
  CHECK(m.samples == s.warmup + 2 * (s.length(0) + s.length(1)));
}

TEST_CASE("multi-eig coincides with active for a single input") {
  const ARXParams truth = single_input_system();
  const Schedule s = small_schedule();
  const RunRecord a = run_active(truth, s, 1.0, 2);
  const RunRecord m = run_multi_eig(truth, s, 1.0, 2);
  const std::vector<Vec> ua = all_inputs(a), um = all_inputs(m);
  REQUIRE(ua.size() == um.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < ua.size(); ++t) worst = std::max(worst, (ua[t] - um[t]).norm());
  CHECK(worst <= 1e-9);
}

TEST_CASE("random baseline") {
  const ARXParams truth = paper_system();
  const Schedule s;
  const RunRecord r = run_random(truth, s, 1.0, s.total(), 1);
  CHECK(r.strategy == "random");
  CHECK(r.samples == s.total());
  REQUIRE(r.episodes.size() == 2);
  CHECK(r.episodes[1].kind == "gaussian");
  CHECK(std::abs(energy_audit(r.episodes) - 1.0) <= 0.05);
  REQUIRE(r.checkpoints.size() == 5);
  CHECK(r.checkpoints[2].T == 850);
  CHECK(r.checkpoints[4].error < r.checkpoints[2].error);

  LoopOptions extra;
  extra.extra_checkpoints = {100, 20000, 0};
  const RunRecord e = run_random(truth, s, 1.0, s.total(), 1, extra);
  CHECK(e.checkpoints.size() == 6);  // 20000 and 0 lie outside the data
  CHECK(e.checkpoints[1].T == 100);
  CHECK_THROWS_AS(run_random(truth, s, 1.0, 10, 1), InvalidParameter);
}

TEST_CASE("energy audit") {
  EpisodeLog quiet;
  quiet.length = 100;
  quiet.gamma = 2.0;
  CHECK(energy_audit({quiet}) == 0.0);
  EpisodeLog loud = quiet;
  loud.energy = 400.0;
  CHECK(energy_audit({quiet, loud}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(energy_audit(std::vector<EpisodeLog>{}), InvalidParameter);

  const RunRecord a = run_active(paper_system(), small_schedule(), 3.0, 8);
  CHECK(energy_audit(a.episodes) <= 1.1);
  CHECK(energy_audit(std::vector<RunRecord>{a}) == energy_audit(a.episodes));
}

TEST_CASE("unstable truth and invalid gamma are rejected") {
  ARXParams s = single_input_system();
  s.A = {Mat::Constant(1, 1, 1.2), Mat::Constant(1, 1, 0.0)};
  CHECK_THROWS_AS(run_active(s, small_schedule(), 1.0, 0), InstabilityError);
  CHECK_THROWS_AS(run_random(s, small_schedule(), 1.0, 200, 0), InstabilityError);
  CHECK_THROWS_AS(run_active(paper_system(), small_schedule(), 0.0, 0), InvalidParameter);
}

TEST_CASE("finite-sample bound") {
  const ARXParams truth = paper_system();
  const LiftedSystem L = lift(truth);
  const DesignedInput d = design_input(DesignProblem::make(L, 200, 10, 10.0));
  const BoundReport b = bound_evaluate(truth, 10.0, 10000, 10, d.coeffs, 0.1);
  CHECK(b.finite);
  CHECK(b.value > 0.0);
  CHECK(std::isfinite(b.value));
  CHECK(b.p_tilde == truth.p);
  CHECK(b.rho == doctest::Approx(oracles::spectral_radius_by_roots(L.A)).epsilon(1e-9));
  CHECK(b.value == doctest::Approx(b.numerator / std::sqrt(1e4 * b.mixture_lambda_min)).epsilon(1e-12));

  const BoundReport longer = bound_evaluate(truth, 10.0, 40000, 10, d.coeffs, 0.1);
  CHECK(longer.value < b.value);
  const BoundReport looser = bound_evaluate(truth, 10.0, 10000, 10, d.coeffs, 0.01);
  CHECK(looser.value > b.value);

  // A design with a larger mixture eigenvalue gives a smaller bound.
  FourierCoefficients half = d.coeffs;
  for (auto& c : half.bins) c *= std::sqrt(0.5);
  const BoundReport weaker = bound_evaluate(truth, 10.0, 10000, 10, half, 0.1);
  CHECK(weaker.mixture_lambda_min < b.mixture_lambda_min);
  CHECK(weaker.value > b.value);

  CHECK_THROWS_AS(bound_evaluate(truth, 10.0, 10000, 10, d.coeffs, 0.0), InvalidParameter);
  CHECK_THROWS_AS(bound_evaluate(truth, 10.0, 0, 10, d.coeffs, 0.1), InvalidParameter);
}

TEST_CASE("schedule advisory") {
  const Advisory a = check_assumption2(Schedule{});
  REQUIRE(a.ratios.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(a.ratios[i] == doctest::Approx(20.0 * std::pow(1.5, i)));
  CHECK_FALSE(a.aggressive);
  CHECK_FALSE(a.note.empty());
  Schedule tight;
  tight.T0 = 1;
  tight.k0 = 64;
  CHECK(check_assumption2(tight).aggressive);
}
