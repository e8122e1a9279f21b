#include "deadzone/core.hpp"

#include <cmath>
#include <stdexcept>

#include "deadzone/errors.hpp"

namespace deadzone {

double canonical(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double wrapped_distance(double theta, double theta0) {
  double d = std::remainder(theta - theta0, kTwoPi);
  if (d <= -kPi) d = kPi;
  return d;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Fixed:
      return "fixed";
    case FrameKind::LinearReference:
      return "linear";
    case FrameKind::MeanPhase:
      return "mean_phase";
  }
  return "fixed";
}

FrameKind frame_kind_from_string(const std::string& name) {
  if (name == "fixed") return FrameKind::Fixed;
  if (name == "linear") return FrameKind::LinearReference;
  if (name == "mean_phase") return FrameKind::MeanPhase;
  throw ConfigError("unknown gate frame '" + name +
                    "' (expected fixed, linear or mean_phase)");
}

void validate(const GateParams& gate) {
  if (!std::isfinite(gate.theta0))
    throw ConfigError("gate.theta0 must be finite");
  if (!gate.enabled) return;
  if (!(gate.width > 0.0 && gate.width < kTwoPi))
    throw ConfigError("gate.w must lie in (0, 2pi)");
  if (!(gate.sharpness >= 0.0) || !std::isfinite(gate.sharpness))
    throw ConfigError("gate.k must be finite and >= 0");
  if (gate.frame.kind == FrameKind::LinearReference &&
      !(std::isfinite(gate.frame.omega_ref) && std::isfinite(gate.frame.psi0)))
    throw ConfigError("linear gate frame needs finite omega_ref and psi0");
}

void validate(const ModelConfig& cfg) {
  if (cfg.omega.size() < 2) throw ConfigError("model needs N >= 2");
  if (!(cfg.coupling >= 0.0) || !std::isfinite(cfg.coupling))
    throw ConfigError("coupling K must be finite and >= 0");
  for (double w : cfg.omega)
    if (!std::isfinite(w)) throw ConfigError("omega entries must be finite");
  validate(cfg.gate);
}

std::vector<double> frequencies_identical(std::size_t n, double period) {
  if (!(period > 0.0)) throw ConfigError("period must be positive");
  return std::vector<double>(n, kTwoPi / period);
}

std::vector<double> frequencies_period_range(std::size_t n, double period_min,
                                             double period_max) {
  if (n < 2) throw ConfigError("period range needs N >= 2");
  if (!(period_min > 0.0) || !(period_max > 0.0))
    throw ConfigError("periods must be positive");
  std::vector<double> omega(n);
  const double span = period_max - period_min;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau =
        period_min + span * static_cast<double>(i) / static_cast<double>(n - 1);
    omega[i] = kTwoPi / tau;
  }
  return omega;
}

OrderParameter order_parameter(std::span<const double> phases) {
  double c = 0.0, s = 0.0;
  for (double th : phases) {
    c += std::cos(th);
    s += std::sin(th);
  }
  const double n = static_cast<double>(phases.size());
  c /= n;
  s /= n;
  OrderParameter op;
  op.R = std::min(1.0, std::hypot(c, s));
  if (op.R < kDegenerateCoherence) {
    op.psi = 0.0;
    op.degenerate = true;
  } else {
    op.psi = canonical(std::atan2(s, c));
  }
  return op;
}

// S = 1 - sigma(a) sigma(b) with a = k(d + w/2), b = k(w/2 - d).
// Written as p + q(1 - p), p = sigma(-a), q = sigma(-b), which has no
// cancellation inside the dead zone where S is tiny.
double gate_value(const GateParams& gate, double theta_rel) {
  if (!gate.enabled) return 1.0;
  const double d = wrapped_distance(theta_rel, gate.theta0);
  const double half = 0.5 * gate.width;
  const double p = logistic(-gate.sharpness * (d + half));
  const double q = logistic(-gate.sharpness * (half - d));
  return p + q * (1.0 - p);
}

// dS/dd = k sigma(a) sigma(b) (sigma(a) - sigma(b)) and
// sigma(a) - sigma(b) = q - p.
double gate_derivative(const GateParams& gate, double theta_rel) {
  if (!gate.enabled) return 0.0;
  const double d = wrapped_distance(theta_rel, gate.theta0);
  const double half = 0.5 * gate.width;
  const double p = logistic(-gate.sharpness * (d + half));
  const double q = logistic(-gate.sharpness * (half - d));
  return gate.sharpness * (1.0 - p) * (1.0 - q) * (q - p);
}

double frame_reference(const GateFrame& frame, double t,
                       std::span<const double> phases) {
  switch (frame.kind) {
    case FrameKind::Fixed:
      return 0.0;
    case FrameKind::LinearReference:
      return frame.omega_ref * t + frame.psi0;
    case FrameKind::MeanPhase:
      return order_parameter(phases).psi;
  }
  return 0.0;
}

double resolve_gate_argument(const GateParams& gate, double theta_i, double t,
                             std::span<const double> phases) {
  return canonical(theta_i - frame_reference(gate.frame, t, phases));
}

void coupling_sums_pairwise(std::span<const double> phases,
                            std::span<double> out) {
  const std::size_t n = phases.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::sin(phases[j] - phases[i]);
    out[i] = acc;
  }
}

void coupling_sums_pairwise_parallel(std::span<const double> phases,
                                     std::span<double> out) {
  const long n = static_cast<long>(phases.size());
  const double* th = phases.data();
  double* res = out.data();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long j = 0; j < n; ++j) acc += std::sin(th[j] - th[i]);
    res[i] = acc;
  }
}

void coupling_sums_mean_field(std::span<const double> phases,
                              std::span<double> out) {
  double c = 0.0, s = 0.0;
  for (double th : phases) {
    c += std::cos(th);
    s += std::sin(th);
  }
  for (std::size_t i = 0; i < phases.size(); ++i)
    out[i] = s * std::cos(phases[i]) - c * std::sin(phases[i]);
}

void coupling_sums(std::span<const double> phases, std::span<double> out,
                   CouplingKernel kernel) {
  switch (kernel) {
    case CouplingKernel::MeanField:
      coupling_sums_mean_field(phases, out);
      return;
    case CouplingKernel::Pairwise:
      coupling_sums_pairwise(phases, out);
      return;
    case CouplingKernel::PairwiseParallel:
      coupling_sums_pairwise_parallel(phases, out);
      return;
  }
}

void rhs(const ModelConfig& cfg, double t, std::span<const double> phases,
         std::span<double> out, CouplingKernel kernel) {
  const std::size_t n = phases.size();
  if (n != cfg.omega.size() || out.size() != n)
    throw std::invalid_argument("rhs: state size does not match model");
  coupling_sums(phases, out, kernel);
  const double scale = cfg.coupling / static_cast<double>(n);
  const GateParams& gate = cfg.gate;
  if (!gate.enabled) {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = cfg.omega[i] + scale * out[i];
    return;
  }
  const double ref = frame_reference(gate.frame, t, phases);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = cfg.omega[i] + scale * gate_value(gate, phases[i] - ref) * out[i];
}

std::vector<double> rhs(const ModelConfig& cfg, double t,
                        std::span<const double> phases, CouplingKernel kernel) {
  std::vector<double> out(phases.size());
  rhs(cfg, t, phases, out, kernel);
  return out;
}

}  // namespace deadzone
