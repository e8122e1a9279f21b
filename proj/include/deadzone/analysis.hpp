#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deadzone/core.hpp"
#include "deadzone/integrator.hpp"

namespace deadzone {

/// U = -(1/2N) sum_i sum_j cos(theta_i - theta_j), evaluated pairwise.
double kuramoto_potential(std::span<const double> phases);

/// dU/dtheta_i = (1/N) sum_j sin(theta_i - theta_j).
std::vector<double> potential_gradient(std::span<const double> phases);

/// dU/dt = -K sum_i S(theta_i) (dU/dtheta_i)^2 along the identical-frequency
/// flow. Throws PreconditionViolated unless all frequencies are equal and
/// the gate frame is Fixed.
double potential_descent_rate(const ModelConfig& cfg,
                              std::span<const double> phases);

/// First sampled time with |1 - R(t)| < tol.
std::optional<double> convergence_time(const Trajectory& traj,
                                       double tol = 1e-4);

/// Largest pairwise circular distance within a profile, in [0, pi].
double delta_max(std::span<const double> profile);

struct CircularStats {
  double mean = 0.0;               // circular mean in (-pi, pi]
  double resultant_length = 0.0;   // mean resultant length in [0, 1]
  double std_dev = 0.0;            // sqrt(-2 ln resultant_length)
};

CircularStats circular_stats(std::span<const double> angles);

struct PoincareCrossing {
  double t = 0.0;
  std::vector<double> rel_phases;  // wrapped_distance(theta_i, psi)
};

struct PoincareRecord {
  std::vector<PoincareCrossing> crossings;
  double transient_cut = 900.0;

  /// Crossings with t > transient_cut.
  std::vector<const PoincareCrossing*> retained() const;
};

struct PoincareOptions {
  double target = kPi;
  double transient_cut = 900.0;
  CrossingDirection direction = CrossingDirection::Increasing;
  double refine_tol = 1e-10;
};

PoincareRecord poincare_section(const ModelConfig& cfg,
                                const IntegrationConfig& icfg,
                                std::span<const double> y0,
                                const PoincareOptions& opts = {});

/// Builds a record from an event run (relative phases taken against the
/// mean phase of each crossing state).
PoincareRecord poincare_record(const std::vector<Crossing>& crossings,
                               double transient_cut);

enum class LockingKind { Locked, Drifting, Indeterminate };

std::string to_string(LockingKind kind);

struct LockingVerdict {
  LockingKind kind = LockingKind::Indeterminate;
  double spread = 0.0;
  std::size_t n_crossings = 0;
};

struct LockingThresholds {
  double lock_tol = 1e-3;
  double drift_tol = 1e-2;
  std::size_t min_crossings = 10;
};

/// Spread is the largest per-oscillator circular standard deviation of the
/// relative phases over retained crossings.
LockingVerdict classify_locking(const PoincareRecord& rec,
                                const LockingThresholds& thresholds = {});

/// Circular mean of oscillator `index`'s relative phase over retained
/// crossings (the steady phase gap theta_i - mean phase).
std::optional<double> steady_gap(const PoincareRecord& rec,
                                 std::size_t index = 0);

/// Collective frequency estimated from retained crossing intervals.
std::optional<double> crossing_frequency(const PoincareRecord& rec);

/// CSV with header t_cross,rel_1,...,rel_N.
void write_poincare_csv(std::ostream& os, const PoincareRecord& rec);

}  // namespace deadzone
