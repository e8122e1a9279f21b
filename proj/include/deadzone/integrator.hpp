#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "deadzone/core.hpp"

namespace deadzone {

struct IntegrationConfig {
  double t0 = 0.0;
  double t_end = 1000.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::optional<double> max_step;  // defaults to (t_end - t0) / 10
  double sample_dt = 0.5;
  std::optional<double> initial_step;
  CouplingKernel kernel = CouplingKernel::MeanField;

  double resolved_max_step() const {
    return max_step.value_or((t_end - t0) / 10.0);
  }
};

void validate(const IntegrationConfig& icfg);

/// Sampled solution. `states` is row-major (samples x N) and holds
/// unwrapped phases; canonicalization happens only on export.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> R_series;
  std::vector<double> psi_series;
  std::size_t n_oscillators = 0;
  ModelConfig model;
  IntegrationConfig integration;

  std::size_t size() const { return times.size(); }
  std::span<const double> state(std::size_t sample) const {
    return {states.data() + sample * n_oscillators, n_oscillators};
  }
  std::span<const double> final_state() const { return state(size() - 1); }
};

enum class CrossingDirection { Increasing, Decreasing, Both };

/// Poincare section psi(t) = target, psi the order-parameter phase.
struct EventSpec {
  double target = kPi;
  CrossingDirection direction = CrossingDirection::Increasing;
  double refine_tol = 1e-10;
};

struct Crossing {
  double t = 0.0;
  std::vector<double> state;  // unwrapped phases at t
};

struct EventResult {
  Trajectory trajectory;
  std::vector<Crossing> crossings;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

/// Adaptive Dormand-Prince 5(4) solution sampled at t0 + m * sample_dt.
/// Throws StepSizeUnderflow or NonFiniteState.
Trajectory integrate(const ModelConfig& cfg, const IntegrationConfig& icfg,
                     std::span<const double> y0,
                     IntegrationStats* stats = nullptr);

/// As integrate, additionally reporting Poincare crossings located on the
/// dense output and refined by bisection to `ev.refine_tol`.
EventResult integrate_with_events(const ModelConfig& cfg,
                                  const IntegrationConfig& icfg,
                                  std::span<const double> y0,
                                  const EventSpec& ev,
                                  IntegrationStats* stats = nullptr);

/// CSV with header t,R,psi,theta_1,...,theta_N; phases canonicalized,
/// 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace deadzone
