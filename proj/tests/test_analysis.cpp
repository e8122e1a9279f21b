#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "deadzone/analysis.hpp"
#include "deadzone/errors.hpp"
#include "deadzone/harness.hpp"
#include "oracles.hpp"

using namespace deadzone;

TEST_CASE("potential equals -(N/2) R^2") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1, 2, 5, 40}) {
    for (int i = 0; i < 200; ++i) {
      const auto th = oracle::uniform_phases(rng, n);
      CHECK(kuramoto_potential(th) ==
            doctest::Approx(oracle::potential_from_R(th)).epsilon(1e-12).scale(1.0));
    }
  }
  const std::vector<double> sync(6, 2.0);
  CHECK(kuramoto_potential(sync) == doctest::Approx(-3.0));
}

TEST_CASE("potential gradient matches finite differences") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto th = oracle::uniform_phases(rng, 9);
    const auto g = potential_gradient(th);
    for (std::size_t i = 0; i < th.size(); ++i) {
      auto p = th, m = th;
      p[i] += 1e-6;
      m[i] -= 1e-6;
      const double fd = (kuramoto_potential(p) - kuramoto_potential(m)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    double sum = 0.0;
    for (double x : g) sum += x;
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("descent rate") {
  ModelConfig cfg;
  cfg.coupling = 0.2;
  cfg.omega = frequencies_identical(8, 24.0);
  std::mt19937_64 rng(13);
  const auto th = oracle::uniform_phases(rng, 8);

  SUBCASE("nonpositive and zero at synchrony") {
    CHECK(potential_descent_rate(cfg, th) <= 0.0);
    CHECK(potential_descent_rate(cfg, std::vector<double>(8, 1.0)) == doctest::Approx(0.0));
  }
  SUBCASE("ungated rate is -K |grad U|^2") {
    cfg.gate = GateParams::disabled();
    const auto g = potential_gradient(th);
    double acc = 0.0;
    for (double x : g) acc += x * x;
    CHECK(potential_descent_rate(cfg, th) == doctest::Approx(-0.2 * acc));
  }
  SUBCASE("preconditions") {
    cfg.omega[3] += 0.01;
    CHECK_THROWS_AS(potential_descent_rate(cfg, th), PreconditionViolated);
    cfg.omega = frequencies_identical(8, 24.0);
    cfg.gate.frame = GateFrame::mean_phase();
    CHECK_THROWS_AS(potential_descent_rate(cfg, th), PreconditionViolated);
    cfg.gate.enabled = false;
    CHECK_NOTHROW(potential_descent_rate(cfg, th));
    CHECK_THROWS_AS(potential_descent_rate(cfg, std::vector<double>(3, 0.0)),
                    PreconditionViolated);
  }
}

TEST_CASE("potential is nonincreasing along identical-frequency runs") {
  for (double w : {1.0, oracle::pi, 5.5}) {
    ModelConfig cfg;
    cfg.coupling = 0.3;
    cfg.omega = frequencies_identical(12, 24.0);
    cfg.gate.width = w;
    for (std::uint64_t seed : {1, 2, 3}) {
      InitSpec init;
      init.seed = seed;
      IntegrationConfig icfg;
      icfg.t_end = 200.0;
      icfg.rtol = 1e-12;
      icfg.atol = 1e-14;
      const Trajectory traj = integrate(cfg, icfg, initial_phases(init, 12));
      for (std::size_t s = 1; s < traj.size(); ++s)
        REQUIRE(kuramoto_potential(traj.state(s)) <=
                kuramoto_potential(traj.state(s - 1)) + 1e-10);
    }
  }
}

TEST_CASE("convergence time and phase separation") {
  ModelConfig cfg;
  cfg.coupling = 0.2;
  cfg.omega = frequencies_identical(20, 24.0);
  cfg.gate = GateParams::disabled();
  InitSpec init;
  const Trajectory traj = integrate(cfg, IntegrationConfig{}, initial_phases(init, 20));
  const auto T = convergence_time(traj);
  REQUIRE(T.has_value());
  const std::size_t s = static_cast<std::size_t>(*T / 0.5);
  CHECK(std::abs(1.0 - traj.R_series[s]) < 1e-4);
  CHECK(std::abs(1.0 - traj.R_series[s - 1]) >= 1e-4);

  cfg.coupling = 0.0;
  cfg.omega = frequencies_period_range(20, 23.0, 25.0);
  IntegrationConfig short_run;
  short_run.t_end = 50.0;
  CHECK_FALSE(convergence_time(integrate(cfg, short_run, initial_phases(init, 20))).has_value());

  CHECK(delta_max(std::vector<double>{0.1, 0.1}) == 0.0);
  CHECK(delta_max(std::vector<double>{0.0, 3.0, -3.0}) == doctest::Approx(3.0));
  CHECK(delta_max(std::vector<double>{0.0, oracle::pi}) == doctest::Approx(oracle::pi));
}

TEST_CASE("circular statistics") {
  SUBCASE("identical angles") {
    const auto st = circular_stats(std::vector<double>(5, -2.0));
    CHECK(st.mean == doctest::Approx(-2.0));
    CHECK(st.resultant_length == doctest::Approx(1.0));
    CHECK(st.std_dev == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("mean across the seam") {
    const auto st = circular_stats(std::vector<double>{oracle::pi - 0.1, -oracle::pi + 0.1});
    CHECK(std::abs(std::abs(st.mean) - oracle::pi) < 1e-12);
    CHECK(st.resultant_length == doctest::Approx(std::cos(0.1)));
  }
  SUBCASE("antipodal pair has no mean direction") {
    const auto st = circular_stats(std::vector<double>{0.0, oracle::pi});
    CHECK(st.resultant_length < 1e-15);
    CHECK(st.std_dev > 5.0);
  }
  SUBCASE("small spread approximates the linear standard deviation") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> n(1.0, 0.01);
    std::vector<double> a(20000);
    for (double& x : a) x = n(rng);
    CHECK(circular_stats(a).std_dev == doctest::Approx(0.01).epsilon(0.03));
  }
  CHECK(circular_stats(std::vector<double>{}).resultant_length == 0.0);
}

namespace {

PoincareRecord synthetic(std::size_t count, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  PoincareRecord rec;
  rec.transient_cut = 100.0;
  for (std::size_t c = 0; c < count; ++c) {
    PoincareCrossing pc;
    pc.t = 80.0 + 24.0 * static_cast<double>(c);
    pc.rel_phases = {0.5 + u(rng), -0.5 + u(rng), u(rng)};
    rec.crossings.push_back(pc);
  }
  return rec;
}

}  // namespace

TEST_CASE("locking classification") {
  const LockingThresholds th;
  const auto locked = classify_locking(synthetic(40, 1e-5, 1), th);
  CHECK(locked.kind == LockingKind::Locked);
  CHECK(locked.n_crossings == 39);
  const auto drifting = classify_locking(synthetic(40, 3.0, 2), th);
  CHECK(drifting.kind == LockingKind::Drifting);
  const auto middle = classify_locking(synthetic(40, 5e-3, 3), th);
  CHECK(middle.kind == LockingKind::Indeterminate);
  const auto few = classify_locking(synthetic(8, 1e-5, 4), th);
  CHECK(few.kind == LockingKind::Indeterminate);
  CHECK(few.n_crossings == 7);
  CHECK(classify_locking(PoincareRecord{}, th).kind == LockingKind::Indeterminate);
}

TEST_CASE("steady gap and crossing frequency of a record") {
  const auto rec = synthetic(40, 0.0, 5);
  CHECK(*steady_gap(rec, 0) == doctest::Approx(0.5));
  CHECK(*steady_gap(rec, 1) == doctest::Approx(-0.5));
  CHECK_FALSE(steady_gap(rec, 3).has_value());
  CHECK(*crossing_frequency(rec) == doctest::Approx(2 * oracle::pi / 24.0));
  CHECK_FALSE(crossing_frequency(synthetic(1, 0.0, 6)).has_value());
}

TEST_CASE("poincare section of a locked heterogeneous population") {
  ModelConfig cfg;
  cfg.coupling = 0.02;
  cfg.omega = frequencies_period_range(20, 23.0, 25.0);
  cfg.gate.frame = GateFrame::mean_phase();
  cfg.gate.width = 1.0;
  InitSpec init;
  IntegrationConfig icfg;
  icfg.t_end = 6000.0;
  icfg.sample_dt = 10.0;
  PoincareOptions opts;
  opts.transient_cut = 5000.0;
  const PoincareRecord rec = poincare_section(cfg, icfg, initial_phases(init, 20), opts);
  const auto v = classify_locking(rec, LockingThresholds{});
  CHECK(v.kind == LockingKind::Locked);
  CHECK(v.spread < 1e-4);
  for (const auto* c : rec.retained()) {
    double s = 0.0;
    for (double r : c->rel_phases) s += std::sin(r);
    CHECK(std::abs(s) < 1e-6);
  }
  std::ostringstream os;
  write_poincare_csv(os, rec);
  CHECK(os.str().rfind("t_cross,rel_1,", 0) == 0);
}

TEST_CASE("verdict names") {
  CHECK(to_string(LockingKind::Locked) == "Locked");
  CHECK(to_string(LockingKind::Drifting) == "Drifting");
  CHECK(to_string(LockingKind::Indeterminate) == "Indeterminate");
}
