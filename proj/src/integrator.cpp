#include "deadzone/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

#include "deadzone/errors.hpp"

namespace deadzone {

void validate(const IntegrationConfig& icfg) {
  if (!(std::isfinite(icfg.t0) && std::isfinite(icfg.t_end)) ||
      !(icfg.t_end > icfg.t0))
    throw ConfigError("integration requires finite t_end > t0");
  if (!(icfg.rtol > 0.0) || !(icfg.atol > 0.0))
    throw ConfigError("integration tolerances must be positive");
  if (!(icfg.sample_dt > 0.0) || !std::isfinite(icfg.sample_dt))
    throw ConfigError("sample_dt must be positive");
  if (icfg.max_step && !(*icfg.max_step > 0.0))
    throw ConfigError("max_step must be positive");
  if (icfg.initial_step && !(*icfg.initial_step > 0.0))
    throw ConfigError("initial_step must be positive");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                 c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                 a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                 e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (order 4).
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

class DormandPrince {
 public:
  DormandPrince(const ModelConfig& cfg, const IntegrationConfig& icfg,
                std::span<const double> y0, IntegrationStats& stats)
      : cfg_(cfg),
        icfg_(icfg),
        stats_(stats),
        n_(y0.size()),
        y_(y0.begin(), y0.end()),
        k1_(n_), k2_(n_), k3_(n_), k4_(n_), k5_(n_), k6_(n_), k7_(n_),
        ytmp_(n_), ynew_(n_),
        r1_(n_), r2_(n_), r3_(n_), r4_(n_), r5_(n_) {
    t_ = icfg.t0;
    span_ = icfg.t_end - icfg.t0;
    max_step_ = icfg.resolved_max_step();
    for (double v : y_)
      if (!std::isfinite(v)) throw NonFiniteState("initial state is not finite");
    recenter();
    eval(t_, y_, k1_);
    h_ = icfg.initial_step ? std::min(*icfg.initial_step, max_step_)
                           : initial_step();
  }

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  bool done() const { return t_ >= icfg_.t_end; }

  // Advances by one accepted step and prepares dense output on
  // [t_prev, t].
  void step() {
    bool rejected_last = false;
    for (;;) {
      double h = std::min(h_, max_step_);
      const bool last = t_ + h >= icfg_.t_end;
      if (last) h = icfg_.t_end - t_;
      if (h < 1e-14 * span_)
        throw StepSizeUnderflow("step size underflow at t = " +
                                std::to_string(t_));
      const double err = attempt(h);
      if (!std::isfinite(err))
        throw NonFiniteState("non-finite state at t = " + std::to_string(t_));
      if (err <= 1.0) {
        double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
        fac = std::clamp(fac, 0.2, 5.0);
        if (rejected_last) fac = std::min(fac, 1.0);
        build_dense(h);
        t_prev_ = t_;
        t_ = last ? icfg_.t_end : t_ + h;
        h_prev_ = h;
        std::swap(y_, ynew_);
        std::swap(k1_, k7_);
        h_ = h * fac;
        ++stats_.accepted;
        return;
      }
      ++stats_.rejected;
      rejected_last = true;
      h_ = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }

  // Dense output on the last accepted step, unwrapped (offset restored).
  void dense(double t, std::vector<double>& out) const {
    out.resize(n_);
    if (t == t_) {
      for (std::size_t i = 0; i < n_; ++i) out[i] = y_[i] + offset_;
      return;
    }
    const double s = (t - t_prev_) / h_prev_;
    const double s1 = 1.0 - s;
    for (std::size_t i = 0; i < n_; ++i)
      out[i] = r1_[i] +
               s * (r2_[i] + s1 * (r3_[i] + s * (r4_[i] + s1 * r5_[i]))) +
               offset_;
  }

  // Largest |dtheta/dt| at either end of the last step.
  double speed_bound() const {
    double v = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      v = std::max({v, std::abs(k1_[i]), std::abs(k7_[i])});
    return v;
  }

  // Called after each accepted step once dense output is consumed.
  void recenter() {
    double mean = 0.0;
    for (double v : y_) mean += v;
    mean /= static_cast<double>(n_);
    const double turns = std::round(mean / kTwoPi);
    if (turns == 0.0) return;
    turns_ += static_cast<long long>(turns);
    const double shift = turns * kTwoPi;
    for (double& v : y_) v -= shift;
    offset_ = static_cast<double>(turns_) * kTwoPi;
  }

 private:
  void eval(double t, std::span<const double> y, std::span<double> out) {
    rhs(cfg_, t, y, out, icfg_.kernel);
    ++stats_.rhs_evaluations;
  }

  double norm(const std::vector<double>& v, const std::vector<double>& y) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = icfg_.atol + icfg_.rtol * std::abs(y[i]);
      const double r = v[i] / sk;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n_));
  }

  double initial_step() {
    const double dy0 = norm(y_, y_);
    const double df0 = norm(k1_, y_);
    double h0 = (dy0 < 1e-5 || df0 < 1e-5) ? 1e-6 : 0.01 * dy0 / df0;
    h0 = std::min(h0, max_step_);
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h0 * k1_[i];
    eval(t_ + h0, ytmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) k3_[i] = k2_[i] - k1_[i];
    const double d2 = norm(k3_, y_) / h0;
    const double dmax = std::max(df0, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                    : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, max_step_});
  }

  // One trial step of size h from (t_, y_); fills ynew_, k7_ and returns
  // the scaled error norm.
  double attempt(double h) {
    const std::size_t n = n_;
    for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * a21 * k1_[i];
    eval(t_ + c2 * h, ytmp_, k2_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    eval(t_ + c3 * h, ytmp_, k3_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    eval(t_ + c4 * h, ytmp_, k4_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] +
                              a54 * k4_[i]);
    eval(t_ + c5 * h, ytmp_, k5_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] +
                              a64 * k4_[i] + a65 * k5_[i]);
    eval(t_ + h, ytmp_, k6_);
    for (std::size_t i = 0; i < n; ++i)
      ynew_[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] +
                              a75 * k5_[i] + a76 * k6_[i]);
    eval(t_ + h, ynew_, k7_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] +
                            e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double sk =
          icfg_.atol + icfg_.rtol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
      const double r = e / sk;
      acc += r * r;
      if (!std::isfinite(ynew_[i])) return std::numeric_limits<double>::quiet_NaN();
    }
    return std::sqrt(acc / static_cast<double>(n));
  }

  void build_dense(double h) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double ydiff = ynew_[i] - y_[i];
      const double bspl = h * k1_[i] - ydiff;
      r1_[i] = y_[i];
      r2_[i] = ydiff;
      r3_[i] = bspl;
      r4_[i] = ydiff - h * k7_[i] - bspl;
      r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] +
                    d6 * k6_[i] + d7 * k7_[i]);
    }
  }

  const ModelConfig& cfg_;
  const IntegrationConfig& icfg_;
  IntegrationStats& stats_;
  std::size_t n_;
  std::vector<double> y_;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  std::vector<double> ytmp_, ynew_;
  std::vector<double> r1_, r2_, r3_, r4_, r5_;
  double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0, h_prev_ = 1.0;
  double span_ = 1.0, max_step_ = 1.0;
  // Phases are shifted by whole turns to keep |y| small; the dynamics are
  // invariant under a common 2pi shift in every gate frame.
  long long turns_ = 0;
  double offset_ = 0.0;
};

std::size_t sample_count(const IntegrationConfig& icfg) {
  return static_cast<std::size_t>(
             std::floor((icfg.t_end - icfg.t0) / icfg.sample_dt + 1e-9)) +
         1;
}

void push_sample(Trajectory& traj, double t, const std::vector<double>& y) {
  traj.times.push_back(t);
  traj.states.insert(traj.states.end(), y.begin(), y.end());
  const OrderParameter op = order_parameter(y);
  traj.R_series.push_back(op.R);
  traj.psi_series.push_back(op.psi);
}

class CrossingDetector {
 public:
  explicit CrossingDetector(const EventSpec& ev) : ev_(ev) {}

  void start(const std::vector<double>& y0) {
    const OrderParameter op = order_parameter(y0);
    have_prev_ = !op.degenerate;
    psi_prev_ = op.psi;
    r_prev_ = op.R;
  }

  void scan(const DormandPrince& dp, std::vector<Crossing>& out) {
    const double ta = dp.t_prev();
    const double tb = dp.t();
    dp.dense(tb, buf_);
    const OrderParameter end_op = order_parameter(buf_);
    // Bound the collective phase speed by max|theta_i'| / R.
    const double r_floor = std::max(0.05, std::min(end_op.R, r_prev_));
    const double turns = (tb - ta) * dp.speed_bound() / r_floor / (0.25 * kPi);
    const auto n_sub =
        static_cast<std::size_t>(std::clamp(std::ceil(turns), 1.0, 4096.0));
    double t_left = ta;
    for (std::size_t s = 1; s <= n_sub; ++s) {
      const double t_right = s == n_sub ? tb : ta + (tb - ta) * s / n_sub;
      dp.dense(t_right, buf_);
      const OrderParameter op = order_parameter(buf_);
      if (op.degenerate) {
        have_prev_ = false;
        t_left = t_right;
        continue;
      }
      if (have_prev_) {
        const double g_left = wrapped_distance(psi_prev_, ev_.target);
        const double g_right = g_left + wrapped_distance(op.psi, psi_prev_);
        const bool up = g_left < 0.0 && g_right >= 0.0;
        const bool down = g_left > 0.0 && g_right <= 0.0;
        const bool want =
            (up && ev_.direction != CrossingDirection::Decreasing) ||
            (down && ev_.direction != CrossingDirection::Increasing);
        if (want) out.push_back(refine(dp, t_left, t_right, g_left));
      }
      psi_prev_ = op.psi;
      have_prev_ = true;
      t_left = t_right;
      r_prev_ = op.R;
    }
  }

 private:
  Crossing refine(const DormandPrince& dp, double lo, double hi, double g_lo) {
    const double psi_lo = psi_prev_;
    const bool rising_negative = g_lo < 0.0;
    auto residual = [&](double t) {
      dp.dense(t, buf_);
      const OrderParameter op = order_parameter(buf_);
      return g_lo + wrapped_distance(op.psi, psi_lo);
    };
    while (hi - lo > ev_.refine_tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double g = residual(mid);
      const bool before = rising_negative ? g < 0.0 : g > 0.0;
      (before ? lo : hi) = mid;
    }
    Crossing c;
    c.t = 0.5 * (lo + hi);
    dp.dense(c.t, c.state);
    return c;
  }

  EventSpec ev_;
  std::vector<double> buf_;
  double psi_prev_ = 0.0;
  double r_prev_ = 1.0;
  bool have_prev_ = false;
};

EventResult run(const ModelConfig& cfg, const IntegrationConfig& icfg,
                std::span<const double> y0, const EventSpec* ev,
                IntegrationStats* stats) {
  validate(cfg);
  validate(icfg);
  if (y0.size() != cfg.size())
    throw ConfigError("initial state length does not match N");
  if (ev && !(ev->refine_tol > 0.0))
    throw ConfigError("event refine_tol must be positive");

  IntegrationStats local;
  IntegrationStats& st = stats ? *stats : local;
  EventResult result;
  Trajectory& traj = result.trajectory;
  traj.n_oscillators = y0.size();
  traj.model = cfg;
  traj.integration = icfg;

  const std::size_t n_samples = sample_count(icfg);
  traj.times.reserve(n_samples);
  traj.states.reserve(n_samples * y0.size());
  traj.R_series.reserve(n_samples);
  traj.psi_series.reserve(n_samples);

  std::vector<double> buf(y0.begin(), y0.end());
  push_sample(traj, icfg.t0, buf);
  std::size_t next = 1;

  DormandPrince dp(cfg, icfg, y0, st);
  std::optional<CrossingDetector> detector;
  if (ev) {
    detector.emplace(*ev);
    detector->start(buf);
  }

  while (!dp.done()) {
    dp.step();
    while (next < n_samples) {
      double ts = icfg.t0 + static_cast<double>(next) * icfg.sample_dt;
      if (next == n_samples - 1 && ts > icfg.t_end) ts = icfg.t_end;
      if (ts > dp.t()) break;
      dp.dense(ts, buf);
      push_sample(traj, ts, buf);
      ++next;
    }
    if (detector) detector->scan(dp, result.crossings);
    dp.recenter();
  }
  return result;
}

}  // namespace

Trajectory integrate(const ModelConfig& cfg, const IntegrationConfig& icfg,
                     std::span<const double> y0, IntegrationStats* stats) {
  return run(cfg, icfg, y0, nullptr, stats).trajectory;
}

EventResult integrate_with_events(const ModelConfig& cfg,
                                  const IntegrationConfig& icfg,
                                  std::span<const double> y0,
                                  const EventSpec& ev, IntegrationStats* stats) {
  return run(cfg, icfg, y0, &ev, stats);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,R,psi";
  for (std::size_t i = 1; i <= traj.n_oscillators; ++i) os << ",theta_" << i;
  os << '\n';
  const auto old_prec = os.precision(17);
  for (std::size_t s = 0; s < traj.size(); ++s) {
    os << traj.times[s] << ',' << traj.R_series[s] << ',' << traj.psi_series[s];
    for (double th : traj.state(s)) os << ',' << canonical(th);
    os << '\n';
  }
  os.precision(old_prec);
}

}  // namespace deadzone
