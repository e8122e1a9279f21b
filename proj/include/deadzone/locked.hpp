#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deadzone/core.hpp"

namespace deadzone {

/// Phase-locked profile in the co-rotating frame. The gate is evaluated at
/// vartheta_i directly, whatever frame the model config names.
struct LockedProfile {
  std::vector<double> vartheta;
  double Omega = 0.0;
  double residual = 0.0;  // infinity norm of the balance residuals
  bool converged = false;
  int iterations = 0;
};

/// Fixes the origin of the co-rotating frame. SumEquals imposes
/// sum_i vartheta_i = sum_target; MeanPhaseZero imposes
/// sum_i sin(vartheta_i) = 0, i.e. the frame origin is the mean phase.
struct Normalization {
  enum class Kind { SumEquals, MeanPhaseZero };
  Kind kind = Kind::SumEquals;
  double sum_target = 0.0;

  static Normalization sum_zero() { return {}; }
  static Normalization sum_equals(double target) {
    return {Kind::SumEquals, target};
  }
  static Normalization mean_phase() { return {Kind::MeanPhaseZero, 0.0}; }
};

struct LockedSolveOptions {
  Normalization normalization{};
  double tol = 1e-10;
  int max_iterations = 100;
  int max_halvings = 20;
};

/// r_i = omega_i - Omega + (K/N) S(vartheta_i) sum_j sin(vartheta_j - vartheta_i).
std::vector<double> locked_residual(const ModelConfig& cfg,
                                    std::span<const double> vartheta,
                                    double Omega);

/// Damped Newton on the augmented (N+1) system (residuals + normalization).
/// Returns the best iterate with converged = false when the iteration
/// stalls; throws SingularJacobian when the Newton matrix is rank
/// deficient and a regularized step makes no progress either.
LockedProfile solve_locked(const ModelConfig& cfg,
                           std::span<const double> vartheta_guess,
                           double Omega_guess,
                           const LockedSolveOptions& opts = {});

struct LockedFrequency {
  double Omega = 0.0;
  double correction = 0.0;
};

/// Omega = mean(omega) + (K/N^2) sum_{i<j} (S_i - S_j) sin(vartheta_j - vartheta_i).
LockedFrequency locked_frequency_identity(const ModelConfig& cfg,
                                          std::span<const double> vartheta);

/// Jacobian of the co-rotating vector field at vartheta.
Eigen::MatrixXd jacobian(const ModelConfig& cfg,
                         std::span<const double> vartheta);

/// Diagonal of the Jacobian rewritten with the balance relation:
/// (S'_i / S_i)(Omega - omega_i) - (K/N) S_i sum_{j != i} cos(vartheta_j - vartheta_i).
/// Valid only at a locked state.
Eigen::VectorXd jacobian_diagonal_balanced(const ModelConfig& cfg,
                                           std::span<const double> vartheta,
                                           double Omega);

enum class StabilityVerdict { Stable, Unstable, Marginal };

std::string to_string(StabilityVerdict verdict);

struct StabilityReport {
  std::vector<std::complex<double>> eigenvalues;
  double spectral_abscissa_transverse = 0.0;
  StabilityVerdict verdict = StabilityVerdict::Marginal;
  bool neutral_mode_removed = false;
  bool eigen_converged = true;
  std::string diagnostic;
};

inline constexpr double kStabilityMargin = 1e-8;

/// Spectrum of the Jacobian with a neutral (uniform-shift) mode removed
/// when one is detected. A failed eigen iteration yields a Marginal report
/// with eigen_converged = false.
StabilityReport stability(const ModelConfig& cfg, const LockedProfile& profile);
StabilityReport stability_of_matrix(const Eigen::MatrixXd& J);

struct HeterogeneitySpec {
  double omega_bar = 0.0;
  std::vector<double> nu;  // sums to zero
  double epsilon = 0.0;
};

/// omega_i = omega_bar + epsilon nu_i.
std::vector<double> frequencies_from(const HeterogeneitySpec& spec);

struct PerturbativePrediction {
  std::vector<double> rho;       // epsilon nu_i / (K S(theta*))
  std::vector<double> vartheta;  // theta* + rho
  double Omega = 0.0;            // omega_bar
  double scale = 0.0;            // epsilon / (K S(theta*))

  /// Leading-order vartheta_i - vartheta_j.
  double gap(std::size_t i, std::size_t j) const { return rho[i] - rho[j]; }
};

inline constexpr double kReceptiveFloor = 1e-6;

/// First-order locked branch near synchrony at theta*. Throws
/// PreconditionViolated when S(theta*) <= 1e-6, K <= 0 or the nu do not
/// sum to zero.
PerturbativePrediction perturbative_branch(const HeterogeneitySpec& spec,
                                           double theta_star,
                                           const ModelConfig& cfg);

struct ContinuationPoint {
  double width = 0.0;  // 0 marks the ungated start of the chain
  LockedProfile profile;
  StabilityReport report;
};

/// Tracks a locked branch from the ungated model through increasing dead
/// zone widths, inserting intermediate widths so no step exceeds
/// `max_step`. Only the requested widths are returned (plus the ungated
/// start).
std::vector<ContinuationPoint> continue_in_width(
    const ModelConfig& cfg, const std::vector<double>& widths,
    const LockedSolveOptions& opts = {}, double max_step = 0.05);

}  // namespace deadzone
