#include "deadzone/locked.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "deadzone/errors.hpp"

namespace deadzone {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double normalization_value(const Normalization& norm,
                           std::span<const double> vartheta) {
  if (norm.kind == Normalization::Kind::SumEquals)
    return std::accumulate(vartheta.begin(), vartheta.end(), 0.0) - norm.sum_target;
  double s = 0.0;
  for (double v : vartheta) s += std::sin(v);
  return s;
}

// Augmented residual F = (r_1..r_N, normalization).
Eigen::VectorXd augmented_residual(const ModelConfig& cfg,
                                   const Normalization& norm,
                                   const Eigen::VectorXd& x) {
  const std::size_t n = cfg.size();
  std::span<const double> vartheta(x.data(), n);
  const std::vector<double> r = locked_residual(cfg, vartheta, x[n]);
  Eigen::VectorXd F(n + 1);
  for (std::size_t i = 0; i < n; ++i) F[i] = r[i];
  F[n] = normalization_value(norm, vartheta);
  return F;
}

Eigen::MatrixXd augmented_jacobian(const ModelConfig& cfg,
                                   const Normalization& norm,
                                   const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(cfg.size());
  std::span<const double> vartheta(x.data(), cfg.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
  A.topLeftCorner(n, n) = jacobian(cfg, vartheta);
  A.col(n).head(n).setConstant(-1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    A(n, i) = norm.kind == Normalization::Kind::SumEquals ? 1.0
                                                          : std::cos(x[i]);
  return A;
}

double converge_measure(const Eigen::VectorXd& F) {
  return F.head(F.size() - 1).cwiseAbs().maxCoeff();
}

}  // namespace

std::vector<double> locked_residual(const ModelConfig& cfg,
                                    std::span<const double> vartheta,
                                    double Omega) {
  const std::size_t n = vartheta.size();
  if (n != cfg.size())
    throw PreconditionViolated("profile length does not match N");
  std::vector<double> sums(n);
  coupling_sums(vartheta, sums, CouplingKernel::Pairwise);
  const double scale = cfg.coupling / static_cast<double>(n);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = cfg.omega[i] - Omega + scale * gate_value(cfg.gate, vartheta[i]) * sums[i];
  return r;
}

LockedProfile solve_locked(const ModelConfig& cfg,
                           std::span<const double> vartheta_guess,
                           double Omega_guess, const LockedSolveOptions& opts) {
  const std::size_t n = cfg.size();
  if (vartheta_guess.size() != n)
    throw PreconditionViolated("guess length does not match N");
  if (!std::isfinite(Omega_guess) ||
      !std::all_of(vartheta_guess.begin(), vartheta_guess.end(),
                   [](double v) { return std::isfinite(v); }))
    throw PreconditionViolated("locked-state guess must be finite");

  Eigen::VectorXd x(n + 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = vartheta_guess[i];
  x[n] = Omega_guess;
  Eigen::VectorXd F = augmented_residual(cfg, opts.normalization, x);
  double merit = F.norm();

  LockedProfile out;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (converge_measure(F) <= opts.tol && std::abs(F[n]) <= opts.tol) break;
    const Eigen::MatrixXd A = augmented_jacobian(cfg, opts.normalization, x);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd dx;
    const bool regularized = !lu.isInvertible();
    if (!regularized) {
      dx = lu.solve(-F);
    } else {
      const double mu = 1e-10 * std::max(1.0, A.squaredNorm());
      const Eigen::MatrixXd normal =
          A.transpose() * A +
          mu * Eigen::MatrixXd::Identity(A.cols(), A.cols());
      dx = normal.ldlt().solve(-A.transpose() * F);
    }

    bool improved = false;
    double lambda = 1.0;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::VectorXd trial = x + lambda * dx;
      const Eigen::VectorXd Ft = augmented_residual(cfg, opts.normalization, trial);
      const double mt = Ft.norm();
      if (std::isfinite(mt) && mt < merit) {
        x = trial;
        F = Ft;
        merit = mt;
        improved = true;
        break;
      }
    }
    if (!improved) {
      if (regularized)
        throw SingularJacobian("locked-state Newton matrix is singular");
      break;
    }
  }

  out.iterations = it;
  out.vartheta.assign(x.data(), x.data() + n);
  out.Omega = x[n];
  if (opts.normalization.kind == Normalization::Kind::SumEquals) {
    const double shift = (std::accumulate(out.vartheta.begin(), out.vartheta.end(), 0.0) -
                          opts.normalization.sum_target) /
                         static_cast<double>(n);
    for (double& v : out.vartheta) v -= shift;
  }
  out.residual = inf_norm(locked_residual(cfg, out.vartheta, out.Omega));
  out.converged = out.residual <= opts.tol &&
                  std::abs(normalization_value(opts.normalization, out.vartheta)) <=
                      std::max(opts.tol, 1e-12 * static_cast<double>(n));
  return out;
}

LockedFrequency locked_frequency_identity(const ModelConfig& cfg,
                                          std::span<const double> vartheta) {
  const std::size_t n = vartheta.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = gate_value(cfg.gate, vartheta[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      acc += (s[i] - s[j]) * std::sin(vartheta[j] - vartheta[i]);
  LockedFrequency lf;
  const double nn = static_cast<double>(n);
  lf.correction = cfg.coupling / (nn * nn) * acc;
  lf.Omega = mean_of(cfg.omega) + lf.correction;
  return lf;
}

Eigen::MatrixXd jacobian(const ModelConfig& cfg,
                         std::span<const double> vartheta) {
  const auto n = static_cast<Eigen::Index>(vartheta.size());
  const double scale = cfg.coupling / static_cast<double>(n);
  Eigen::MatrixXd J(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = gate_value(cfg.gate, vartheta[i]);
    const double dsi = gate_derivative(cfg.gate, vartheta[i]);
    double sin_sum = 0.0, cos_sum = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l == i) continue;
      const double diff = vartheta[l] - vartheta[i];
      const double c = std::cos(diff);
      sin_sum += std::sin(diff);
      cos_sum += c;
      J(i, l) = scale * si * c;
    }
    J(i, i) = scale * (dsi * sin_sum - si * cos_sum);
  }
  return J;
}

Eigen::VectorXd jacobian_diagonal_balanced(const ModelConfig& cfg,
                                           std::span<const double> vartheta,
                                           double Omega) {
  const auto n = static_cast<Eigen::Index>(vartheta.size());
  const double scale = cfg.coupling / static_cast<double>(n);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = gate_value(cfg.gate, vartheta[i]);
    const double dsi = gate_derivative(cfg.gate, vartheta[i]);
    double cos_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) cos_sum += std::cos(vartheta[j] - vartheta[i]);
    d[i] = dsi / si * (Omega - cfg.omega[i]) - scale * si * cos_sum;
  }
  return d;
}

std::string to_string(StabilityVerdict verdict) {
  switch (verdict) {
    case StabilityVerdict::Stable:
      return "Stable";
    case StabilityVerdict::Unstable:
      return "Unstable";
    case StabilityVerdict::Marginal:
      return "Marginal";
  }
  return "Marginal";
}

StabilityReport stability_of_matrix(const Eigen::MatrixXd& J) {
  StabilityReport rep;
  Eigen::EigenSolver<Eigen::MatrixXd> es(J, true);
  if (es.info() != Eigen::Success) {
    rep.eigen_converged = false;
    rep.verdict = StabilityVerdict::Marginal;
    rep.diagnostic = "eigen iteration did not converge";
    return rep;
  }
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();
  const auto n = lambda.size();
  rep.eigenvalues.assign(lambda.data(), lambda.data() + n);

  // Neutral mode: |lambda| < 1e-8 with eigenvector within 1e-4 rad of 1.
  Eigen::Index neutral = -1;
  double best = std::numeric_limits<double>::infinity();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mag = std::abs(lambda[k]);
    if (mag >= kStabilityMargin) continue;
    const Eigen::VectorXcd v = vecs.col(k);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    const double cosang = std::min(1.0, std::abs(v.sum()) / (vn * sqrt_n));
    const double angle = std::acos(cosang);
    if (angle <= 1e-4 && mag < best) {
      best = mag;
      neutral = k;
    }
  }
  rep.neutral_mode_removed = neutral >= 0;

  double abscissa = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k)
    if (k != neutral) abscissa = std::max(abscissa, lambda[k].real());
  rep.spectral_abscissa_transverse = abscissa;
  if (abscissa < -kStabilityMargin)
    rep.verdict = StabilityVerdict::Stable;
  else if (abscissa > kStabilityMargin)
    rep.verdict = StabilityVerdict::Unstable;
  else
    rep.verdict = StabilityVerdict::Marginal;
  return rep;
}

StabilityReport stability(const ModelConfig& cfg, const LockedProfile& profile) {
  if (!profile.converged)
    throw PreconditionViolated("stability requires a converged locked profile");
  return stability_of_matrix(jacobian(cfg, profile.vartheta));
}

std::vector<double> frequencies_from(const HeterogeneitySpec& spec) {
  std::vector<double> omega(spec.nu.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    omega[i] = spec.omega_bar + spec.epsilon * spec.nu[i];
  return omega;
}

PerturbativePrediction perturbative_branch(const HeterogeneitySpec& spec,
                                           double theta_star,
                                           const ModelConfig& cfg) {
  if (!(cfg.coupling > 0.0))
    throw PreconditionViolated("perturbative branch requires K > 0");
  const double nu_sum = std::accumulate(spec.nu.begin(), spec.nu.end(), 0.0);
  if (std::abs(nu_sum) > 1e-12)
    throw PreconditionViolated("heterogeneity offsets nu must sum to zero");
  const double s = gate_value(cfg.gate, theta_star);
  if (!(s > kReceptiveFloor))
    throw PreconditionViolated("S(theta*) is below the receptive floor");
  PerturbativePrediction p;
  p.scale = spec.epsilon / (cfg.coupling * s);
  p.Omega = spec.omega_bar;
  p.rho.resize(spec.nu.size());
  p.vartheta.resize(spec.nu.size());
  for (std::size_t i = 0; i < spec.nu.size(); ++i) {
    p.rho[i] = p.scale * spec.nu[i];
    p.vartheta[i] = theta_star + p.rho[i];
  }
  return p;
}

namespace {

// Classical self-consistent locked profile: sin(vartheta_i) = (omega_i -
// mean) / (K R), R = mean cos(vartheta_i), on the branch with all
// |vartheta_i| < pi/2. Empty when no such profile exists.
std::vector<double> classical_seed(const ModelConfig& cfg) {
  const std::size_t n = cfg.size();
  const double mean = mean_of(cfg.omega);
  std::vector<double> v(n, 0.0);
  if (!(cfg.coupling > 0.0)) return {};
  double R = 1.0;
  for (int it = 0; it < 500; ++it) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (cfg.omega[i] - mean) / (cfg.coupling * R);
      if (std::abs(x) > 1.0) return {};
      v[i] = std::asin(x);
      acc += std::cos(v[i]);
    }
    const double next = acc / static_cast<double>(n);
    if (std::abs(next - R) < 1e-15) break;
    R = next;
  }
  return v;
}

}  // namespace

std::vector<ContinuationPoint> continue_in_width(
    const ModelConfig& cfg, const std::vector<double>& widths,
    const LockedSolveOptions& opts, double max_step) {
  std::vector<ContinuationPoint> out;
  ModelConfig work = cfg;
  work.gate.enabled = false;

  std::vector<double> guess = classical_seed(work);
  if (guess.empty()) guess.assign(cfg.size(), 0.0);
  if (opts.normalization.kind == Normalization::Kind::SumEquals) {
    const double shift = (std::accumulate(guess.begin(), guess.end(), 0.0) -
                          opts.normalization.sum_target) /
                         static_cast<double>(guess.size());
    for (double& g : guess) g -= shift;
  }
  double Omega = mean_of(cfg.omega);

  auto solve_at = [&](double w, bool enabled) {
    work.gate.enabled = enabled;
    work.gate.width = w;
    ContinuationPoint pt;
    pt.width = enabled ? w : 0.0;
    try {
      pt.profile = solve_locked(work, guess, Omega, opts);
    } catch (const SingularJacobian& e) {
      pt.profile.vartheta = guess;
      pt.profile.Omega = Omega;
      pt.profile.converged = false;
      pt.report.diagnostic = e.what();
    }
    if (pt.profile.converged) {
      pt.report = stability(work, pt.profile);
      guess = pt.profile.vartheta;
      Omega = pt.profile.Omega;
    }
    return pt;
  };

  out.push_back(solve_at(cfg.gate.width, false));
  std::vector<double> sorted = widths;
  std::sort(sorted.begin(), sorted.end());
  double w_prev = 0.0;
  for (double w : sorted) {
    const int steps =
        std::max(1, static_cast<int>(std::ceil((w - w_prev) / max_step - 1e-9)));
    for (int s = 1; s < steps; ++s)
      solve_at(w_prev + (w - w_prev) * s / steps, true);
    out.push_back(solve_at(w, true));
    w_prev = w;
  }
  return out;
}

}  // namespace deadzone
