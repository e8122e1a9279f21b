// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../oracles.hpp"
#include "deadzone/analysis.hpp"
#include "deadzone/figures.hpp"
#include "deadzone/harness.hpp"
#include "deadzone/locked.hpp"

using namespace deadzone;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

ModelConfig identical_model(std::size_t n, double K, const GateParams& gate) {
  ModelConfig cfg;
  cfg.coupling = K;
  cfg.omega = frequencies_identical(n, 24.0);
  cfg.gate = gate;
  return cfg;
}

GateParams fixed_gate(double w, double k = 10.0) {
  GateParams g;
  g.width = w;
  g.sharpness = k;
  g.frame = GateFrame::fixed();
  return g;
}

RunConfig heterogeneous_spec(double K) {
  RunConfig spec;
  spec.model.N = 20;
  spec.model.K = K;
  spec.model.frequencies = FrequencySpec::period_range(23.0, 25.0);
  spec.model.gate.frame = GateFrame::mean_phase();
  spec.integration.t_end = 6000.0;
  spec.integration.sample_dt = 10.0;
  spec.run.poincare.transient_cut = 5000.0;
  spec.run.kind = RunKind::SweepPoincare;
  return spec;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  return out;
}

std::string csv_of(const SweepResult& res) {
  std::ostringstream os;
  write_sweep_csv(os, res.rows);
  return os.str();
}

// 1. Classical reduction.
void criterion1(Check& c) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uw(0.1, 1.0), uK(0.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    ModelConfig cfg;
    cfg.coupling = uK(rng);
    cfg.omega.resize(20);
    for (double& w : cfg.omega) w = uw(rng);
    cfg.gate = GateParams::disabled();
    const auto theta = oracle::uniform_phases(rng, 20);
    const auto got = rhs(cfg, 0.0, theta);
    const auto want = oracle::classical_rhs(cfg.omega, cfg.coupling, theta);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      num = std::max(num, std::abs(got[i] - want[i]));
      den = std::max(den, std::abs(want[i]));
    }
    worst = std::max(worst, num / den);
  }
  c.require(worst <= 1e-14, "rhs relative error <= 1e-14");

  const ModelConfig cfg = identical_model(20, 0.2, GateParams::disabled());
  InitSpec init;
  init.seed = 1;
  IntegrationConfig icfg;
  icfg.t_end = 1000.0;
  const Trajectory traj = integrate(cfg, icfg, initial_phases(init, 20));
  const auto T = convergence_time(traj, 1e-4);
  c.require(T && *T <= 200.0, "|1-R| < 1e-4 by t = 200");
  c.detail << "max rel rhs error " << worst << ", T_conv " << (T ? *T : -1.0);
}

// 2. Lyapunov descent.
void criterion2(Check& c) {
  double worst_rise = -1e300, worst_rel = 0.0;
  int probes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ModelConfig cfg = identical_model(20, 0.2, fixed_gate(oracle::pi));
    InitSpec init;
    init.seed = seed;
    IntegrationConfig icfg;
    icfg.t_end = 300.0;
    icfg.sample_dt = 0.5;
    const Trajectory traj = integrate(cfg, icfg, initial_phases(init, 20));
    double prev = kuramoto_potential(traj.state(0));
    for (std::size_t s = 1; s < traj.size(); ++s) {
      const double u = kuramoto_potential(traj.state(s));
      worst_rise = std::max(worst_rise, u - prev);
      prev = u;
    }
    for (int p = 0; p < 5; ++p) {
      const auto st = traj.state(static_cast<std::size_t>(10 * p));
      std::vector<double> theta(st.begin(), st.end());
      const auto f = oracle::gated_rhs(cfg.omega, cfg.coupling, 0.0, oracle::pi, 10.0, theta);
      const double h = 1e-5;
      std::vector<double> plus = theta, minus = theta;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        plus[i] += h * f[i];
        minus[i] -= h * f[i];
      }
      const double fd = (oracle::potential_from_R(plus) - oracle::potential_from_R(minus)) / (2 * h);
      const double rate = potential_descent_rate(cfg, theta);
      worst_rel = std::max(worst_rel, std::abs(fd - rate) / std::abs(rate));
      ++probes;
    }
  }
  c.require(worst_rise <= 1e-8, "U nonincreasing within 1e-8");
  c.require(probes == 100 && worst_rel <= 1e-4, "dU/dt matches descent rate within 1e-4");
  c.detail << "max U rise " << worst_rise << ", max rel rate error " << worst_rel << " over "
           << probes << " probes";
}

// 3. Potential identity.
void criterion3(Check& c) {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> un(2, 50);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto theta = oracle::uniform_phases(rng, un(rng));
    const double R = order_parameter(theta).R;
    const double n = static_cast<double>(theta.size());
    worst = std::max(worst, std::abs(kuramoto_potential(theta) + 0.5 * n * R * R));
  }
  c.require(worst <= 1e-12, "|U + N R^2 / 2| <= 1e-12");
  c.detail << "max abs deviation " << worst;
}

// 4. Linear decay rate near synchrony.
void criterion4(Check& c) {
  const double K = 0.2, w = oracle::pi, k = 10.0;
  const double omega = kTwoPi / 24.0;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::pair<std::string, double>> targets{{"edge", w / 2.0},
                                                            {"antipode", oracle::pi}};
  for (const auto& [name, theta_star] : targets) {
    ModelConfig cfg = identical_model(20, K, fixed_gate(w, k));
    cfg.gate.frame = GateFrame::linear(omega, 0.0);
    std::vector<double> y0(20);
    double mean = 0.0;
    for (double& y : y0) mean += (y = 1e-3 * u(rng));
    mean /= 20.0;
    for (double& y : y0) y = theta_star + y - mean;
    IntegrationConfig icfg;
    icfg.t_end = 200.0;
    icfg.sample_dt = 0.5;
    icfg.rtol = 1e-12;
    icfg.atol = 1e-14;
    const Trajectory traj = integrate(cfg, icfg, y0);
    std::vector<double> ts, logs;
    double d0 = 0.0;
    for (std::size_t s = 0; s < traj.size(); ++s) {
      const auto st = traj.state(s);
      const double m = std::accumulate(st.begin(), st.end(), 0.0) / 20.0;
      double acc = 0.0;
      for (double x : st) acc += (x - m) * (x - m);
      const double d = std::sqrt(acc);
      if (s == 0) d0 = d;
      if (d < 0.5 * d0 && d > 1e-8) {
        ts.push_back(traj.times[s]);
        logs.push_back(std::log(d));
      }
    }
    const double n = static_cast<double>(ts.size());
    const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
    const double lm = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxy += (ts[i] - tm) * (logs[i] - lm);
      sxx += (ts[i] - tm) * (ts[i] - tm);
    }
    const double rate = -sxy / sxx;
    const double expected = K * oracle::gate(theta_star, 0.0, w, k);
    const double rel = std::abs(rate - expected) / expected;
    c.require(ts.size() >= 10 && rel <= 0.05, name + " decay rate within 5%");
    c.detail << name << ": rate " << rate << " vs K S " << expected << " (rel " << rel << "); ";
  }
}

// 5. Convergence time scaling in K and monotonicity in w.
void criterion5(Check& c) {
  const std::vector<double> Ks{0.05, 0.1, 0.2, 0.4};
  const std::vector<double> ws{oracle::pi, 1.25 * oracle::pi, 1.5 * oracle::pi,
                               1.75 * oracle::pi};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  IntegrationConfig icfg;
  icfg.t_end = 3000.0;
  icfg.sample_dt = 0.5;
  auto T_conv = [&](double K, double w, std::uint64_t seed) {
    InitSpec init;
    init.seed = seed;
    const Trajectory traj =
        integrate(identical_model(20, K, fixed_gate(w)), icfg, initial_phases(init, 20));
    return convergence_time(traj, 1e-4);
  };

  std::vector<std::pair<double, double>> mean_pts;
  double worst_seed_rmse = 0.0;
  bool all_converged = true;
  for (double K : Ks) {
    double acc = 0.0;
    for (auto seed : seeds) {
      const auto T = T_conv(K, oracle::pi, seed);
      all_converged = all_converged && T.has_value();
      acc += T.value_or(0.0);
    }
    mean_pts.emplace_back(K, acc / static_cast<double>(seeds.size()));
  }
  for (auto seed : seeds) {
    std::vector<std::pair<double, double>> pts;
    for (double K : Ks) pts.emplace_back(K, T_conv(K, oracle::pi, seed).value_or(1e300));
    worst_seed_rmse = std::max(worst_seed_rmse, fit_inverse_K(pts).rel_rmse);
  }
  const InverseKFit fit = fit_inverse_K(mean_pts);
  c.require(all_converged, "all runs converge");
  c.require(fit.rel_rmse <= 0.15, "c/K fit rel RMSE <= 0.15");

  int monotone_seeds = 0;
  std::ostringstream trend;
  for (auto seed : seeds) {
    double prev = 0.0;
    bool mono = true;
    for (double w : ws) {
      const auto T = T_conv(0.2, w, seed);
      if (!T || *T < prev) mono = false;
      prev = T.value_or(1e300);
      if (seed == seeds.front()) trend << (T ? *T : -1.0) << ' ';
    }
    monotone_seeds += mono ? 1 : 0;
  }
  c.require(monotone_seeds == static_cast<int>(seeds.size()), "T_conv nondecreasing in w");
  c.detail << "seed-mean fit c " << fit.c << " rel RMSE " << fit.rel_rmse
           << " (worst single seed " << worst_seed_rmse << "); monotone in w for "
           << monotone_seeds << "/" << seeds.size() << " seeds, seed 1 T(w): " << trend.str();
}

// Converged locked states shared by criteria 6 and 7.
struct LockedCase {
  ModelConfig cfg;
  LockedProfile profile;
};

std::vector<LockedCase> locked_cases() {
  std::vector<LockedCase> out;
  ModelConfig het;
  het.coupling = 0.02;
  het.omega = frequencies_period_range(20, 23.0, 25.0);
  het.gate.frame = GateFrame::mean_phase();
  for (const Normalization norm : {Normalization::sum_zero(), Normalization::mean_phase()}) {
    LockedSolveOptions opts;
    opts.normalization = norm;
    opts.tol = 1e-12;
    for (const auto& pt : continue_in_width(het, {0.25, 0.5, 0.75, 1.0, 1.25, 1.5}, opts)) {
      ModelConfig cfg = het;
      cfg.gate.enabled = pt.width != 0.0;
      if (cfg.gate.enabled) cfg.gate.width = pt.width;
      if (pt.profile.converged) out.push_back({cfg, pt.profile});
    }
  }
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> spread(-0.05, 0.05), uw(0.3, 3.0), uk(1.0, 10.0),
      u0(0.0, kTwoPi);
  for (std::size_t n : {5, 10, 20}) {
    for (int trial = 0; trial < 4; ++trial) {
      ModelConfig cfg;
      cfg.coupling = 0.5;
      cfg.omega.resize(n);
      for (double& w : cfg.omega) w = 0.3 + spread(rng);
      cfg.gate.theta0 = u0(rng);
      cfg.gate.sharpness = uk(rng);
      const double w = uw(rng);
      LockedSolveOptions opts;
      opts.tol = 1e-12;
      const auto chain = continue_in_width(cfg, {w}, opts);
      for (const auto& pt : chain) {
        ModelConfig c = cfg;
        c.gate.enabled = pt.width != 0.0;
        c.gate.width = pt.width != 0.0 ? pt.width : cfg.gate.width;
        if (pt.profile.converged) out.push_back({c, pt.profile});
      }
    }
  }
  return out;
}

// 6. Locked-frequency identity.
void criterion6(Check& c, const std::vector<LockedCase>& cases) {
  double worst = 0.0, worst_ungated = 0.0;
  std::size_t ungated = 0;
  for (const auto& lc : cases) {
    const LockedFrequency id = locked_frequency_identity(lc.cfg, lc.profile.vartheta);
    worst = std::max(worst, std::abs(id.Omega - lc.profile.Omega));
    if (!lc.cfg.gate.enabled) {
      const double mean = std::accumulate(lc.cfg.omega.begin(), lc.cfg.omega.end(), 0.0) /
                          static_cast<double>(lc.cfg.size());
      worst_ungated = std::max(worst_ungated, std::abs(lc.profile.Omega - mean));
      ++ungated;
    }
  }
  c.require(cases.size() >= 20, "enough converged locked states");
  c.require(worst <= 1e-9, "solver Omega matches identity to 1e-9");
  c.require(ungated > 0 && worst_ungated <= 1e-10, "ungated Omega = mean(omega) to 1e-10");
  c.detail << cases.size() << " states, max |Omega - identity| " << worst << "; " << ungated
           << " ungated, max |Omega - mean| " << worst_ungated;
}

// 7. Jacobian correctness.
void criterion7(Check& c, const std::vector<LockedCase>& cases) {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> uw(0.3, 6.0), uk(0.5, 10.0), u0(0.0, kTwoPi),
      uK(0.05, 1.0), uo(0.2, 0.3);
  double worst_fd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = trial % 2 == 0 ? 5 : 20;
    ModelConfig cfg;
    cfg.coupling = uK(rng);
    cfg.omega.resize(n);
    for (double& w : cfg.omega) w = uo(rng);
    cfg.gate.theta0 = u0(rng);
    cfg.gate.width = uw(rng);
    cfg.gate.sharpness = uk(rng);
    const auto v = oracle::uniform_phases(rng, n);
    const auto field = [&](const std::vector<double>& x) {
      return oracle::gated_rhs(cfg.omega, cfg.coupling, cfg.gate.theta0, cfg.gate.width,
                               cfg.gate.sharpness, x);
    };
    const Eigen::MatrixXd fd = oracle::fd_jacobian(field, v, 1e-6);
    const Eigen::MatrixXd J = jacobian(cfg, v);
    worst_fd = std::max(worst_fd, (J - fd).cwiseAbs().maxCoeff());
  }
  c.require(worst_fd <= 1e-5, "analytic J vs finite differences entrywise <= 1e-5");

  double worst_diag = 0.0;
  for (const auto& lc : cases) {
    const Eigen::MatrixXd J = jacobian(lc.cfg, lc.profile.vartheta);
    const Eigen::VectorXd d = jacobian_diagonal_balanced(lc.cfg, lc.profile.vartheta,
                                                         lc.profile.Omega);
    worst_diag = std::max(worst_diag, (J.diagonal() - d).cwiseAbs().maxCoeff());
  }
  c.require(worst_diag <= 1e-9, "direct and balanced diagonals agree to 1e-9");

  double worst_spec = 0.0;
  const double K = 0.2;
  for (double theta_star : {0.3, oracle::pi / 2.0, 2.0, oracle::pi, 5.0}) {
    const ModelConfig cfg = identical_model(20, K, fixed_gate(oracle::pi));
    const std::vector<double> sync(20, theta_star);
    const StabilityReport rep = stability_of_matrix(jacobian(cfg, sync));
    std::vector<double> re;
    for (const auto& l : rep.eigenvalues) {
      worst_spec = std::max(worst_spec, std::abs(l.imag()));
      re.push_back(l.real());
    }
    std::sort(re.begin(), re.end());
    const double s = oracle::gate(theta_star, 0.0, oracle::pi, 10.0);
    for (std::size_t i = 0; i + 1 < re.size(); ++i)
      worst_spec = std::max(worst_spec, std::abs(re[i] + K * s));
    worst_spec = std::max(worst_spec, std::abs(re.back()));
  }
  c.require(worst_spec <= 1e-8, "synchrony spectrum {0, -K S (x N-1)} to 1e-8");
  c.detail << "max |J - FD| " << worst_fd << ", max diagonal gap " << worst_diag
           << ", max spectrum error " << worst_spec;
}

// 8. Perturbative branch.
void criterion8(Check& c) {
  const std::size_t n = 6;
  const double theta_star = oracle::pi / 2.0 + 0.3;
  ModelConfig base;
  base.coupling = 0.2;
  base.gate = fixed_gate(oracle::pi);
  HeterogeneitySpec spec;
  spec.omega_bar = kTwoPi / 24.0;
  spec.nu = {-1.0, -0.6, -0.2, 0.2, 0.6, 1.0};

  std::vector<double> devs, dOmegas;
  const std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  for (double e : eps) {
    spec.epsilon = e;
    ModelConfig cfg = base;
    cfg.omega = frequencies_from(spec);
    const PerturbativePrediction pred = perturbative_branch(spec, theta_star, cfg);
    LockedSolveOptions opts;
    opts.normalization = Normalization::sum_equals(static_cast<double>(n) * theta_star);
    opts.tol = 1e-14;
    const LockedProfile prof = solve_locked(cfg, pred.vartheta, pred.Omega, opts);
    c.require(prof.converged, "Newton converges at eps = " + std::to_string(e));
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      dev = std::max(dev, std::abs(prof.vartheta[i] - pred.vartheta[i]));
    devs.push_back(dev);
    dOmegas.push_back(std::abs(prof.Omega - spec.omega_bar));
  }
  double cmin = 1e300, cmax = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double ci = devs[i] / (eps[i] * eps[i]);
    cmin = std::min(cmin, ci);
    cmax = std::max(cmax, ci);
  }
  c.require(cmax / cmin <= 4.0, "deviation / eps^2 constant within factor 4");
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    const double ratio = dOmegas[i] / dOmegas[i + 1];
    c.require(ratio >= 3.6, "Omega - omega_bar shrinks at least quadratically");
    c.detail << "Omega ratio " << ratio << "; ";
  }
  c.detail << "deviations";
  for (double d : devs) c.detail << ' ' << d;
  c.detail << ", dev/eps^2 spread " << cmax / cmin;
}

// Location of the single Locked -> Drifting switch, or NaN when the map is
// not of that shape.
double single_transition(const std::vector<SweepRow>& rows, std::string& shape) {
  std::vector<const SweepRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->w < b->w; });
  shape.clear();
  for (auto* r : sorted) shape += r->verdict.empty() ? '?' : r->verdict.front();
  const auto last_locked = shape.find_last_of('L');
  const auto first_drift = shape.find_first_of('D');
  if (last_locked == std::string::npos || first_drift == std::string::npos) return NAN;
  if (shape.find_first_not_of('L') != last_locked + 1) return NAN;
  if (shape.find_first_not_of('D', first_drift) != std::string::npos) return NAN;
  return 0.5 * (sorted[last_locked]->w + sorted[first_drift]->w);
}

// 9. Heterogeneous regime map.
void criterion9(Check& c, int jobs) {
  SweepOptions opts;
  opts.jobs = jobs;
  RunConfig spec = heterogeneous_spec(0.02);
  spec.run.axes = {SweepAxis{SweepParam::W, {0.0, oracle::pi}}};
  const SweepResult ends = run_experiment(spec, opts);
  const SweepRow& none = ends.rows[0];
  const SweepRow& half = ends.rows[1];
  c.require(none.verdict == "Locked" && none.spread && *none.spread < 1e-3,
            "no dead zone: Locked, spread < 1e-3");
  c.require(half.verdict == "Drifting", "w = pi: Drifting");

  spec.run.axes = {SweepAxis{SweepParam::W, grid(0.05, 6.25, 0.05)}};
  const SweepResult sweep = run_experiment(spec, opts);
  std::string shape;
  const double wt = single_transition(sweep.rows, shape);
  c.require(!std::isnan(wt), "single Locked -> Drifting transition");
  c.require(wt >= 1.2 && wt <= 2.2, "transition within [1.2, 2.2]");

  RunConfig strong = heterogeneous_spec(0.2);
  strong.run.axes = {SweepAxis{SweepParam::W, grid(0.05, 3.0, 0.05)}};
  const SweepResult s = run_experiment(strong, opts);
  const auto locked = std::count_if(s.rows.begin(), s.rows.end(),
                                    [](const SweepRow& r) { return r.verdict == "Locked"; });
  c.require(locked == static_cast<long>(s.rows.size()), "K = 0.2 Locked for all w <= 3");
  c.detail << "spread(no gate) " << none.spread.value_or(-1) << ", w=pi " << half.verdict
           << ", transition at w = " << wt << " (map " << shape << "), K=0.2 Locked "
           << locked << "/" << s.rows.size();
}

// 10. Robustness in k and N.
void criterion10(Check& c, int jobs) {
  SweepOptions opts;
  opts.jobs = jobs;
  RunConfig base = heterogeneous_spec(0.02);
  base.model.gate.frame = GateFrame::fixed();
  base.integration.t_end = 40000.0;
  base.integration.sample_dt = 100.0;
  base.run.poincare.transient_cut = 39000.0;
  const RobustnessResult res =
      robustness_sweep_k_N(base, grid(0.1, 3.2, 0.1), opts, {5.0, 10.0}, {20, 200});

  std::map<double, const SweepRow*> k5, k10;
  for (const auto& r : res.by_k.rows) (r.k == 5.0 ? k5 : k10)[r.w] = &r;
  double worst_gap = 0.0;
  int compared = 0;
  for (const auto& [w, r5] : k5) {
    const SweepRow* r10 = k10.at(w);
    if (r5->verdict == "Locked" && r10->verdict == "Locked") {
      worst_gap = std::max(worst_gap, std::abs(wrapped_distance(*r5->steady_gap, *r10->steady_gap)));
      ++compared;
    }
  }
  c.require(compared > 0 && worst_gap <= 0.05, "k = 5 vs k = 10 gaps within 0.05 rad");

  std::map<double, std::string> n20, n200;
  for (const auto& r : res.by_N.rows) (r.N == 20 ? n20 : n200)[r.w] = r.verdict;
  int agree = 0;
  for (const auto& [w, v] : n20) agree += v == n200.at(w) ? 1 : 0;
  const double frac = static_cast<double>(agree) / static_cast<double>(n20.size());
  c.require(frac >= 0.9, "N = 20 vs N = 200 verdicts agree on >= 90%");

  RunConfig mean_frame = heterogeneous_spec(0.02);
  mean_frame.run.axes = {SweepAxis{SweepParam::W, grid(0.1, 1.6, 0.1)},
                         SweepAxis{SweepParam::Sharpness, {5.0, 10.0}}};
  std::map<double, double> mp5;
  double mean_frame_gap = 0.0;
  for (const auto& r : run_experiment(mean_frame, opts).rows) {
    if (r.verdict != "Locked") continue;
    if (r.k == 5.0) mp5[r.w] = *r.steady_gap;
    else if (mp5.count(r.w))
      mean_frame_gap = std::max(mean_frame_gap, std::abs(wrapped_distance(mp5[r.w], *r.steady_gap)));
  }

  RunConfig flat = heterogeneous_spec(0.02);
  flat.model.gate.sharpness = 0.0;
  flat.run.axes = {SweepAxis{SweepParam::W, grid(0.5, 6.0, 0.5)},
                   SweepAxis{SweepParam::K, {0.01, 0.02, 0.04, 0.08}}};
  const SweepResult flat_res = run_experiment(flat, opts);
  int matches = 0;
  for (const auto& r : flat_res.rows) {
    RunConfig classical = parse_run_config(r.config);
    classical.model.gate.enabled = false;
    classical.model.K *= 0.75;
    matches += run_point(classical).verdict == r.verdict ? 1 : 0;
  }
  c.require(matches == static_cast<int>(flat_res.rows.size()),
            "k = 0 verdicts match classical with 0.75 K");
  c.detail << "k5/k10 max gap " << worst_gap << " on " << compared << " locked cells; N20/N200 "
           << agree << "/" << n20.size() << " agree; k=0 vs classical " << matches << "/"
           << flat_res.rows.size() << " (fixed frame); mean-phase frame k5/k10 max gap "
           << mean_frame_gap;
}

// 11. Determinism and restartability.
void criterion11(Check& c) {
  RunConfig spec = heterogeneous_spec(0.02);
  spec.integration.t_end = 3000.0;
  spec.run.poincare.transient_cut = 2000.0;
  spec.run.axes = {SweepAxis{SweepParam::W, {0.5, 1.0, 1.5, 1.8, 2.2, 3.0}},
                   SweepAxis{SweepParam::K, {0.02, 0.05}}};
  spec.run.seeds = {1, 2};

  SweepOptions serial;
  serial.parallel = false;
  const std::string a = csv_of(run_experiment(spec, serial));
  const std::string b = csv_of(run_experiment(spec, serial));
  SweepOptions par;
  par.jobs = 4;
  const std::string p = csv_of(run_experiment(spec, par));

  const auto journal = std::filesystem::temp_directory_path() /
                       ("deadzone_acceptance_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(journal);
  SweepOptions first = par;
  first.journal = journal;
  first.stop_after = 7;
  const SweepResult partial = run_experiment(spec, first);
  SweepOptions second = par;
  second.journal = journal;
  const SweepResult resumed = run_experiment(spec, second);
  std::filesystem::remove(journal);
  const std::string r = csv_of(resumed);

  c.require(a == b, "rerun byte-identical");
  c.require(a == p, "parallel byte-identical to serial");
  c.require(!partial.complete && resumed.complete && a == r,
            "interrupted + resumed byte-identical");
  c.detail << resumed.rows.size() << " rows, " << a.size() << " bytes, sha256 "
           << sha256_hex(a);
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = 1;
  if (argc > 1) jobs = std::max(1, std::atoi(argv[1]));
  const auto cases = locked_cases();
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"classical reduction", criterion1},
      {"Lyapunov descent", criterion2},
      {"potential identity", criterion3},
      {"linear decay rate", criterion4},
      {"convergence-time scaling", criterion5},
      {"locked-frequency identity", [&](Check& c) { criterion6(c, cases); }},
      {"Jacobian correctness", [&](Check& c) { criterion7(c, cases); }},
      {"perturbative branch", criterion8},
      {"heterogeneous regime map", [&](Check& c) { criterion9(c, jobs); }},
      {"robustness in k and N", [&](Check& c) { criterion10(c, jobs); }},
      {"determinism and restartability", criterion11},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail << " [exception: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += check.ok ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s (%.1f s)\n", check.ok ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), check.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
