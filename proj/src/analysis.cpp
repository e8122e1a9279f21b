#include "deadzone/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "deadzone/errors.hpp"

namespace deadzone {

double kuramoto_potential(std::span<const double> phases) {
  const std::size_t n = phases.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) acc += std::cos(phases[i] - phases[j]);
  return -acc / (2.0 * static_cast<double>(n));
}

std::vector<double> potential_gradient(std::span<const double> phases) {
  std::vector<double> grad(phases.size());
  coupling_sums(phases, grad, CouplingKernel::Pairwise);
  const double n = static_cast<double>(phases.size());
  for (double& g : grad) g = -g / n;
  return grad;
}

double potential_descent_rate(const ModelConfig& cfg,
                              std::span<const double> phases) {
  if (phases.size() != cfg.size())
    throw PreconditionViolated("state length does not match N");
  const double w0 = cfg.omega.front();
  for (double w : cfg.omega)
    if (std::abs(w - w0) > 1e-12 * std::max(1.0, std::abs(w0)))
      throw PreconditionViolated(
          "potential descent rate requires identical frequencies");
  if (cfg.gate.enabled && cfg.gate.frame.kind != FrameKind::Fixed)
    throw PreconditionViolated("potential descent rate requires a fixed gate frame");
  const std::vector<double> grad = potential_gradient(phases);
  double acc = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i)
    acc += gate_value(cfg.gate, phases[i]) * grad[i] * grad[i];
  return -cfg.coupling * acc;
}

std::optional<double> convergence_time(const Trajectory& traj, double tol) {
  for (std::size_t s = 0; s < traj.size(); ++s)
    if (std::abs(1.0 - traj.R_series[s]) < tol) return traj.times[s];
  return std::nullopt;
}

double delta_max(std::span<const double> profile) {
  double best = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i)
    for (std::size_t j = i + 1; j < profile.size(); ++j)
      best = std::max(best, std::abs(wrapped_distance(profile[i], profile[j])));
  return best;
}

CircularStats circular_stats(std::span<const double> angles) {
  CircularStats st;
  if (angles.empty()) return st;
  double c = 0.0, s = 0.0;
  for (double a : angles) {
    c += std::cos(a);
    s += std::sin(a);
  }
  const double n = static_cast<double>(angles.size());
  c /= n;
  s /= n;
  st.resultant_length = std::min(1.0, std::hypot(c, s));
  st.mean = wrapped_distance(std::atan2(s, c), 0.0);
  st.std_dev = st.resultant_length > 0.0
                   ? std::sqrt(-2.0 * std::log(st.resultant_length))
                   : std::numeric_limits<double>::infinity();
  return st;
}

std::vector<const PoincareCrossing*> PoincareRecord::retained() const {
  std::vector<const PoincareCrossing*> out;
  for (const auto& c : crossings)
    if (c.t > transient_cut) out.push_back(&c);
  return out;
}

PoincareRecord poincare_record(const std::vector<Crossing>& crossings,
                               double transient_cut) {
  PoincareRecord rec;
  rec.transient_cut = transient_cut;
  rec.crossings.reserve(crossings.size());
  for (const Crossing& c : crossings) {
    const double psi = order_parameter(c.state).psi;
    PoincareCrossing pc;
    pc.t = c.t;
    pc.rel_phases.reserve(c.state.size());
    for (double th : c.state) pc.rel_phases.push_back(wrapped_distance(th, psi));
    rec.crossings.push_back(std::move(pc));
  }
  return rec;
}

PoincareRecord poincare_section(const ModelConfig& cfg,
                                const IntegrationConfig& icfg,
                                std::span<const double> y0,
                                const PoincareOptions& opts) {
  EventSpec ev;
  ev.target = opts.target;
  ev.direction = opts.direction;
  ev.refine_tol = opts.refine_tol;
  const EventResult res = integrate_with_events(cfg, icfg, y0, ev);
  return poincare_record(res.crossings, opts.transient_cut);
}

std::string to_string(LockingKind kind) {
  switch (kind) {
    case LockingKind::Locked:
      return "Locked";
    case LockingKind::Drifting:
      return "Drifting";
    case LockingKind::Indeterminate:
      return "Indeterminate";
  }
  return "Indeterminate";
}

LockingVerdict classify_locking(const PoincareRecord& rec,
                                const LockingThresholds& thresholds) {
  const auto kept = rec.retained();
  LockingVerdict v;
  v.n_crossings = kept.size();
  if (kept.empty()) return v;
  const std::size_t n = kept.front()->rel_phases.size();
  std::vector<double> column(kept.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kept.size(); ++c)
      column[c] = kept[c]->rel_phases[i];
    v.spread = std::max(v.spread, circular_stats(column).std_dev);
  }
  if (kept.size() < thresholds.min_crossings) return v;
  if (v.spread < thresholds.lock_tol)
    v.kind = LockingKind::Locked;
  else if (v.spread >= thresholds.drift_tol)
    v.kind = LockingKind::Drifting;
  return v;
}

std::optional<double> steady_gap(const PoincareRecord& rec, std::size_t index) {
  const auto kept = rec.retained();
  if (kept.empty() || index >= kept.front()->rel_phases.size())
    return std::nullopt;
  std::vector<double> column;
  column.reserve(kept.size());
  for (const auto* c : kept) column.push_back(c->rel_phases[index]);
  return circular_stats(column).mean;
}

std::optional<double> crossing_frequency(const PoincareRecord& rec) {
  const auto kept = rec.retained();
  if (kept.size() < 2) return std::nullopt;
  const double span = kept.back()->t - kept.front()->t;
  return kTwoPi * static_cast<double>(kept.size() - 1) / span;
}

void write_poincare_csv(std::ostream& os, const PoincareRecord& rec) {
  const std::size_t n =
      rec.crossings.empty() ? 0 : rec.crossings.front().rel_phases.size();
  os << "t_cross";
  for (std::size_t i = 1; i <= n; ++i) os << ",rel_" << i;
  os << '\n';
  const auto old_prec = os.precision(17);
  for (const auto& c : rec.crossings) {
    os << c.t;
    for (double r : c.rel_phases) os << ',' << r;
    os << '\n';
  }
  os.precision(old_prec);
}

}  // namespace deadzone
