#include "deadzone/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "deadzone/errors.hpp"

namespace deadzone {

using nlohmann::json;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::at(std::uint64_t counter) const {
  return mix64(mix64(key_) ^ (counter * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

double CounterRng::uniform_at(std::uint64_t counter) const {
  return static_cast<double>(at(counter) >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::span<const std::size_t> grid_indices,
                          std::size_t replicate) {
  std::uint64_t h = mix64(master ^ 0x5851f42d4c957f2dULL);
  for (std::size_t idx : grid_indices) h = mix64(h ^ mix64(idx + 1));
  return mix64(h ^ mix64(0xa0761d6478bd642fULL + replicate));
}

std::vector<double> initial_phases(const InitSpec& init, std::size_t n) {
  std::vector<double> theta(n);
  if (init.mode == InitMode::Equispaced) {
    for (std::size_t i = 0; i < n; ++i)
      theta[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
  } else {
    const CounterRng rng(init.seed);
    for (std::size_t i = 0; i < n; ++i) theta[i] = kTwoPi * rng.uniform_at(i);
  }
  return theta;
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_opt(const std::optional<double>& x) {
  return x ? format_real(*x) : std::string();
}

json opt_to_json(const std::optional<double>& x) {
  return x ? json(format_real(*x)) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return std::strtod(j.get<std::string>().c_str(), nullptr);
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct Grid {
  std::vector<std::size_t> radix;  // axis sizes, then replicate count
  std::size_t total = 1;

  std::vector<std::size_t> decode(std::size_t idx) const {
    std::vector<std::size_t> out(radix.size());
    for (std::size_t a = radix.size(); a-- > 0;) {
      out[a] = idx % radix[a];
      idx /= radix[a];
    }
    return out;
  }
};

std::vector<std::uint64_t> replicate_masters(const RunConfig& spec) {
  if (spec.run.seeds.empty()) return {spec.init.seed};
  return spec.run.seeds;
}

Grid make_grid(const RunConfig& spec) {
  Grid g;
  for (const SweepAxis& a : spec.run.axes) {
    if (a.values.empty()) throw ConfigError("sweep axis " + to_string(a.param) + " is empty");
    g.radix.push_back(a.values.size());
  }
  g.radix.push_back(replicate_masters(spec).size());
  for (std::size_t r : g.radix) g.total *= r;
  return g;
}

RunKind point_kind(RunKind kind) {
  switch (kind) {
    case RunKind::SweepConvergence:
      return RunKind::Simulate;
    case RunKind::SweepPoincare:
    case RunKind::Robustness:
      return RunKind::Poincare;
    default:
      return kind;
  }
}

void fill_params(SweepRow& row, const RunConfig& cfg) {
  row.K = cfg.model.K;
  row.w = cfg.model.gate.enabled ? cfg.model.gate.width : 0.0;
  row.k = cfg.model.gate.sharpness;
  row.N = cfg.model.N;
  row.seed = cfg.init.seed;
}

double profile_gap(const std::vector<double>& vartheta) {
  const OrderParameter op = order_parameter(vartheta);
  return wrapped_distance(vartheta.front(), op.psi);
}

}  // namespace

RunConfig point_config(const RunConfig& spec,
                       std::span<const std::size_t> axis_indices,
                       std::size_t replicate) {
  if (axis_indices.size() != spec.run.axes.size())
    throw std::invalid_argument("axis index count does not match the sweep axes");
  RunConfig cfg = spec;
  for (std::size_t a = 0; a < spec.run.axes.size(); ++a) {
    const SweepAxis& axis = spec.run.axes[a];
    const double v = axis.values.at(axis_indices[a]);
    switch (axis.param) {
      case SweepParam::K:
        cfg.model.K = v;
        break;
      case SweepParam::W:
        cfg.model.gate.enabled = v != 0.0;
        if (v != 0.0) cfg.model.gate.width = v;
        break;
      case SweepParam::Sharpness:
        cfg.model.gate.sharpness = v;
        break;
      case SweepParam::N:
        if (!(v >= 2.0) || v != std::floor(v))
          throw ConfigError("sweep value N = " + format_real(v) + " is not an integer >= 2");
        cfg.model.N = static_cast<std::size_t>(v);
        break;
    }
  }
  const auto masters = replicate_masters(spec);
  cfg.init.seed = derive_seed(masters.at(replicate), axis_indices, replicate);
  cfg.run.kind = point_kind(spec.run.kind);
  cfg.run.axes.clear();
  cfg.run.seeds.clear();
  cfg.run.jobs.reset();
  cfg.output_dir.reset();
  return cfg;
}

SweepRow run_point(const RunConfig& cfg) {
  SweepRow row;
  fill_params(row, cfg);
  row.config = to_json(cfg);
  const ModelConfig model = build_model(cfg.model);
  const std::vector<double> y0 = initial_phases(cfg.init, model.size());
  switch (point_kind(cfg.run.kind)) {
    case RunKind::Simulate: {
      const Trajectory traj = integrate(model, cfg.integration, y0);
      row.T_conv = convergence_time(traj, cfg.run.convergence_tol);
      row.verdict = row.T_conv ? "Converged" : "NotConverged";
      row.spread = 1.0 - traj.R_series.back();
      break;
    }
    case RunKind::Poincare: {
      const PoincareRecord rec =
          poincare_section(model, cfg.integration, y0, cfg.run.poincare);
      const LockingVerdict v = classify_locking(rec, cfg.run.thresholds);
      row.verdict = to_string(v.kind);
      row.spread = v.spread;
      if (v.kind == LockingKind::Locked) row.omega_locked = crossing_frequency(rec);
      row.steady_gap = steady_gap(rec, 0);
      for (const auto* c : rec.retained()) row.section.push_back(c->rel_phases.front());
      break;
    }
    case RunKind::Locked: {
      LockedSolveOptions opts;
      opts.normalization = cfg.run.normalization;
      std::vector<double> widths;
      if (model.gate.enabled) widths.push_back(model.gate.width);
      const auto chain = continue_in_width(model, widths, opts);
      const ContinuationPoint& pt = chain.back();
      if (pt.profile.converged) {
        row.verdict = to_string(pt.report.verdict);
        row.omega_locked = pt.profile.Omega;
        row.spread = delta_max(pt.profile.vartheta);
        row.steady_gap = profile_gap(pt.profile.vartheta);
      } else {
        row.verdict = "NotConverged";
        row.spread = pt.profile.residual;
      }
      break;
    }
    default:
      break;
  }
  return row;
}

json to_json(const SweepRow& row) {
  return json{{"grid_idx", row.grid_idx},
              {"indices", row.indices},
              {"K", format_real(row.K)},
              {"w", format_real(row.w)},
              {"k", format_real(row.k)},
              {"N", row.N},
              {"seed", row.seed},
              {"verdict", row.verdict},
              {"spread", opt_to_json(row.spread)},
              {"omega_locked", opt_to_json(row.omega_locked)},
              {"T_conv", opt_to_json(row.T_conv)},
              {"steady_gap", opt_to_json(row.steady_gap)},
              {"section", row.section},
              {"error", row.error},
              {"config", row.config}};
}

SweepRow sweep_row_from_json(const json& j) {
  SweepRow row;
  row.grid_idx = j.at("grid_idx").get<std::size_t>();
  row.indices = j.at("indices").get<std::vector<std::size_t>>();
  row.K = std::strtod(j.at("K").get<std::string>().c_str(), nullptr);
  row.w = std::strtod(j.at("w").get<std::string>().c_str(), nullptr);
  row.k = std::strtod(j.at("k").get<std::string>().c_str(), nullptr);
  row.N = j.at("N").get<std::size_t>();
  row.seed = j.at("seed").get<std::uint64_t>();
  row.verdict = j.at("verdict").get<std::string>();
  row.spread = opt_from_json(j.at("spread"));
  row.omega_locked = opt_from_json(j.at("omega_locked"));
  row.T_conv = opt_from_json(j.at("T_conv"));
  row.steady_gap = opt_from_json(j.at("steady_gap"));
  row.section = j.at("section").get<std::vector<double>>();
  row.error = j.at("error").get<std::string>();
  row.config = j.at("config");
  return row;
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [](const SweepRow& r) { return !r.error.empty(); }));
}

namespace {

SweepRow run_grid_point(const RunConfig& spec, const Grid& grid, std::size_t idx) {
  const std::vector<std::size_t> digits = grid.decode(idx);
  const std::span<const std::size_t> axis_idx(digits.data(), digits.size() - 1);
  SweepRow row;
  try {
    const RunConfig cfg = point_config(spec, axis_idx, digits.back());
    fill_params(row, cfg);
    row.config = to_json(cfg);
    row = run_point(cfg);
  } catch (const std::exception& e) {
    row.verdict = "Error";
    row.error = e.what();
    if (row.error.empty()) row.error = "unknown failure";
  }
  row.grid_idx = idx;
  row.indices = digits;
  return row;
}

std::map<std::size_t, SweepRow> load_journal(const std::filesystem::path& path,
                                             const RunConfig& spec, const Grid& grid) {
  std::map<std::size_t, SweepRow> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // torn final line of an interrupted run
    SweepRow row = sweep_row_from_json(j);
    if (row.grid_idx >= grid.total)
      throw ConfigError("journal " + path.string() + " does not match the sweep spec");
    if (row.error.empty()) {
      const auto digits = grid.decode(row.grid_idx);
      const RunConfig cfg = point_config(
          spec, std::span<const std::size_t>(digits.data(), digits.size() - 1),
          digits.back());
      if (to_json(cfg) != row.config)
        throw ConfigError("journal " + path.string() + " does not match the sweep spec");
    }
    done[row.grid_idx] = std::move(row);
  }
  return done;
}

}  // namespace

SweepResult run_experiment(const RunConfig& spec, const SweepOptions& opts) {
  for (const SweepAxis& a : spec.run.axes)
    for (double v : a.values)
      if (!std::isfinite(v)) throw ConfigError("sweep values must be finite");
  const Grid grid = make_grid(spec);

  std::map<std::size_t, SweepRow> done;
  if (opts.journal) done = load_journal(*opts.journal, spec, grid);

  std::vector<std::size_t> pending;
  for (std::size_t idx = 0; idx < grid.total; ++idx)
    if (!done.count(idx)) pending.push_back(idx);
  if (opts.stop_after && *opts.stop_after < pending.size())
    pending.resize(*opts.stop_after);

  std::ofstream journal;
  if (opts.journal) {
    journal.open(*opts.journal, std::ios::app);
    if (!journal) throw ConfigError("cannot open journal " + opts.journal->string());
  }

  std::vector<SweepRow> fresh(pending.size());
  const long n_pending = static_cast<long>(pending.size());
  const int jobs = std::max(1, opts.jobs);
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (opts.parallel && jobs > 1)
  for (long p = 0; p < n_pending; ++p) {
    fresh[p] = run_grid_point(spec, grid, pending[p]);
    if (opts.journal) {
      const std::string line = to_json(fresh[p]).dump();
#pragma omp critical(deadzone_journal)
      {
        journal << line << '\n';
        journal.flush();
      }
    }
  }

  for (SweepRow& r : fresh) done[r.grid_idx] = std::move(r);
  SweepResult res;
  res.total = grid.total;
  res.rows.reserve(done.size());
  for (auto& [idx, row] : done) res.rows.push_back(std::move(row));
  res.complete = res.rows.size() == grid.total;
  return res;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "grid_idx,K,w,k,N,seed,verdict,spread,omega_locked,T_conv,error,config_json\n";
  for (const SweepRow& r : rows) {
    os << r.grid_idx << ',' << format_real(r.K) << ',' << format_real(r.w) << ','
       << format_real(r.k) << ',' << r.N << ',' << r.seed << ',' << r.verdict << ','
       << format_opt(r.spread) << ',' << format_opt(r.omega_locked) << ','
       << format_opt(r.T_conv) << ',' << (r.error.empty() ? "" : csv_quote(r.error))
       << ',' << csv_quote(r.config.is_null() ? "{}" : r.config.dump()) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

InverseKFit fit_inverse_K(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3)
    throw PreconditionViolated("fit_inverse_K needs at least 3 points");
  for (const auto& [K, T] : points)
    if (!(K > 0.0) || !std::isfinite(K) || !std::isfinite(T) || T <= 0.0)
      throw PreconditionViolated("fit_inverse_K needs K > 0 and finite T > 0");
  const double K0 = points.front().first;
  if (std::all_of(points.begin(), points.end(),
                  [&](const auto& p) { return p.first == K0; }))
    throw DegenerateFit("all K values are equal");
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [K, T] : points) {
    const double x = 1.0 / K;
    sxy += x * T;
    sxx += x * x;
  }
  InverseKFit fit;
  fit.c = sxy / sxx;
  double acc = 0.0;
  for (const auto& [K, T] : points) {
    const double r = (T - fit.c / K) / T;
    acc += r * r;
  }
  fit.rel_rmse = std::sqrt(acc / static_cast<double>(points.size()));
  return fit;
}

RobustnessResult robustness_sweep_k_N(const RunConfig& base,
                                      const std::vector<double>& widths,
                                      const SweepOptions& opts,
                                      const std::vector<double>& sharpness,
                                      const std::vector<std::size_t>& sizes) {
  auto family = [&](SweepAxis extra, const char* tag) {
    RunConfig spec = base;
    spec.run.kind = RunKind::Robustness;
    spec.run.axes.clear();
    spec.run.axes.push_back(SweepAxis{SweepParam::W, widths});
    spec.run.axes.push_back(std::move(extra));
    SweepOptions o = opts;
    if (opts.journal) {
      std::filesystem::path j = *opts.journal;
      j += std::string(".") + tag;
      o.journal = j;
    }
    return run_experiment(spec, o);
  };
  RobustnessResult res;
  res.by_k = family(SweepAxis{SweepParam::Sharpness, sharpness}, "k");
  std::vector<double> n_values(sizes.begin(), sizes.end());
  res.by_N = family(SweepAxis{SweepParam::N, n_values}, "N");
  return res;
}

void write_gap_curves_csv(std::ostream& os, const RobustnessResult& res) {
  os << "family,k,N,w,seed,verdict,steady_gap\n";
  auto emit = [&](const char* fam, const SweepResult& sr) {
    for (const SweepRow& r : sr.rows)
      os << fam << ',' << format_real(r.k) << ',' << r.N << ',' << format_real(r.w)
         << ',' << r.seed << ',' << r.verdict << ',' << format_opt(r.steady_gap) << '\n';
  };
  emit("k", res.by_k);
  emit("N", res.by_N);
}

}  // namespace deadzone
