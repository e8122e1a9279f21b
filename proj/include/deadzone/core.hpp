#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace deadzone {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Canonical representative of an angle in [0, 2pi).
double canonical(double theta);

/// Shortest signed displacement from theta0 to theta, in (-pi, pi].
double wrapped_distance(double theta, double theta0);

/// Logistic function 1 / (1 + e^-x).
double logistic(double x);

enum class FrameKind { Fixed, LinearReference, MeanPhase };

/// Reference frame in which the dead zone is anchored.
///
/// Fixed: the gate sees the absolute phase.
/// LinearReference: the gate sees theta - (omega_ref * t + psi0).
/// MeanPhase: the gate sees theta - psi(t), psi the order-parameter phase.
struct GateFrame {
  FrameKind kind = FrameKind::Fixed;
  double omega_ref = 0.0;
  double psi0 = 0.0;

  static GateFrame fixed() { return {}; }
  static GateFrame linear(double omega_ref, double psi0) {
    return {FrameKind::LinearReference, omega_ref, psi0};
  }
  static GateFrame mean_phase() { return {FrameKind::MeanPhase, 0.0, 0.0}; }
};

std::string to_string(FrameKind kind);
FrameKind frame_kind_from_string(const std::string& name);

/// Receiver gate: a smooth double-sigmoid dead zone of width `width`
/// centered at `theta0`, with edge sharpness `sharpness`.
struct GateParams {
  double theta0 = 0.0;
  double width = kPi;
  double sharpness = 10.0;
  bool enabled = true;
  GateFrame frame{};

  static GateParams disabled() {
    GateParams g;
    g.enabled = false;
    return g;
  }
};

/// Throws ConfigError when an enabled gate has width outside (0, 2pi) or
/// negative / non-finite sharpness.
void validate(const GateParams& gate);

struct ModelConfig {
  double coupling = 0.02;      // K
  std::vector<double> omega;   // intrinsic angular frequencies
  GateParams gate{};

  std::size_t size() const { return omega.size(); }
};

void validate(const ModelConfig& cfg);

/// omega_i = 2pi / tau for every oscillator.
std::vector<double> frequencies_identical(std::size_t n, double period);

/// omega_i = 2pi / (tau_min + (tau_max - tau_min)(i-1)/(N-1)), i = 1..N.
std::vector<double> frequencies_period_range(std::size_t n, double period_min,
                                             double period_max);

struct OrderParameter {
  double R = 0.0;
  double psi = 0.0;
  bool degenerate = false;
};

inline constexpr double kDegenerateCoherence = 1e-12;

/// R e^{i psi} = (1/N) sum_j e^{i theta_j}. psi is reported as 0 and the
/// result flagged degenerate when R < 1e-12.
OrderParameter order_parameter(std::span<const double> phases);

/// Gate value S in (0, 1); exactly 1 when the gate is disabled.
/// `theta_rel` must already be expressed in the gate frame.
double gate_value(const GateParams& gate, double theta_rel);

/// dS/dtheta, closed form. Zero for a disabled gate.
double gate_derivative(const GateParams& gate, double theta_rel);

/// Phase of the frame origin at time t for the given state.
double frame_reference(const GateFrame& frame, double t,
                       std::span<const double> phases);

/// Receiver phase expressed in the gate frame, canonicalized.
double resolve_gate_argument(const GateParams& gate, double theta_i, double t,
                             std::span<const double> phases);

enum class CouplingKernel {
  MeanField,         // O(N) via sum_j sin(theta_j - theta_i) = N R sin(psi - theta_i)
  Pairwise,          // O(N^2) serial reference
  PairwiseParallel,  // O(N^2), OpenMP over receivers
};

/// out_i = sum_j sin(theta_j - theta_i).
void coupling_sums(std::span<const double> phases, std::span<double> out,
                   CouplingKernel kernel = CouplingKernel::MeanField);

void coupling_sums_pairwise(std::span<const double> phases,
                            std::span<double> out);
void coupling_sums_pairwise_parallel(std::span<const double> phases,
                                     std::span<double> out);
void coupling_sums_mean_field(std::span<const double> phases,
                              std::span<double> out);

/// dtheta_i/dt = omega_i + (K/N) S(arg_i) sum_j sin(theta_j - theta_i).
void rhs(const ModelConfig& cfg, double t, std::span<const double> phases,
         std::span<double> out,
         CouplingKernel kernel = CouplingKernel::MeanField);

std::vector<double> rhs(const ModelConfig& cfg, double t,
                        std::span<const double> phases,
                        CouplingKernel kernel = CouplingKernel::MeanField);

}  // namespace deadzone
