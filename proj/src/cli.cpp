#include "deadzone/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "deadzone/config.hpp"
#include "deadzone/errors.hpp"
#include "deadzone/figures.hpp"
#include "deadzone/harness.hpp"

namespace deadzone {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  std::string figure;
};

json load_document(const Flags& flags) {
  json doc = json::object();
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw ConfigError("cannot read config file " + flags.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded())
      throw ConfigError("config file " + flags.config_path + " is not valid JSON");
  }
  for (const auto& s : flags.sets) apply_override(doc, s);
  if (flags.seed) apply_override(doc, "init.seed=" + std::to_string(*flags.seed));
  if (flags.jobs) apply_override(doc, "run.jobs=" + std::to_string(*flags.jobs));
  if (flags.out) doc["output"]["dir"] = *flags.out;
  return doc;
}

RunConfig resolve(const Flags& flags, std::optional<RunKind> forced) {
  const json doc = load_document(flags);
  if (forced) {
    json patched = doc;
    patched["run"]["kind"] = to_string(*forced);
    return parse_run_config(patched);
  }
  return parse_run_config(doc);
}

fs::path out_dir(const RunConfig& cfg) { return cfg.output_dir.value_or("out"); }

int jobs_of(const RunConfig& cfg) { return cfg.run.jobs.value_or(omp_get_num_procs()); }

void write_json(const fs::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

int cmd_simulate(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = resolve(flags, RunKind::Simulate);
  const ModelConfig model = build_model(cfg.model);
  IntegrationStats stats;
  const Trajectory traj =
      integrate(model, cfg.integration, initial_phases(cfg.init, model.size()), &stats);
  const auto t_conv = convergence_time(traj, cfg.run.convergence_tol);

  const fs::path dir = out_dir(cfg);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_file_atomic(dir / "trajectory.csv", csv.str());
  const json summary{{"config", to_json(cfg)},
                     {"final_R", traj.R_series.back()},
                     {"final_psi", traj.psi_series.back()},
                     {"T_conv", t_conv ? json(*t_conv) : json(nullptr)},
                     {"converged", t_conv.has_value()},
                     {"samples", traj.size()},
                     {"accepted_steps", stats.accepted},
                     {"rejected_steps", stats.rejected},
                     {"rhs_evaluations", stats.rhs_evaluations}};
  write_json(dir / "summary.json", summary);
  out << "final R = " << format_real(traj.R_series.back());
  if (t_conv) out << ", converged at t = " << format_real(*t_conv);
  out << "\nwrote " << (dir / "trajectory.csv").string() << '\n';
  return kExitOk;
}

int cmd_poincare(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = resolve(flags, RunKind::Poincare);
  const ModelConfig model = build_model(cfg.model);
  const PoincareRecord rec = poincare_section(
      model, cfg.integration, initial_phases(cfg.init, model.size()), cfg.run.poincare);
  const LockingVerdict v = classify_locking(rec, cfg.run.thresholds);

  const fs::path dir = out_dir(cfg);
  std::ostringstream csv;
  write_poincare_csv(csv, rec);
  write_file_atomic(dir / "poincare.csv", csv.str());
  json verdict = to_json(v);
  verdict["params"] = {{"K", cfg.model.K},
                       {"w", cfg.model.gate.enabled ? cfg.model.gate.width : 0.0},
                       {"k", cfg.model.gate.sharpness},
                       {"N", cfg.model.N},
                       {"seed", cfg.init.seed},
                       {"frame", to_string(cfg.model.gate.frame.kind)},
                       {"transient_cut", cfg.run.poincare.transient_cut},
                       {"t_end", cfg.integration.t_end}};
  const auto gap = steady_gap(rec, 0);
  verdict["steady_gap"] = gap ? json(*gap) : json(nullptr);
  const auto freq = crossing_frequency(rec);
  verdict["crossing_frequency"] = freq ? json(*freq) : json(nullptr);
  verdict["config"] = to_json(cfg);
  write_json(dir / "verdict.json", verdict);
  out << to_string(v.kind) << " (spread " << format_real(v.spread) << ", "
      << v.n_crossings << " crossings)\n";
  return kExitOk;
}

int cmd_locked(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = resolve(flags, RunKind::Locked);
  const ModelConfig model = build_model(cfg.model);
  std::vector<double> widths = cfg.run.widths;
  if (widths.empty() && model.gate.enabled) widths.push_back(model.gate.width);
  LockedSolveOptions opts;
  opts.normalization = cfg.run.normalization;
  const auto chain = continue_in_width(model, widths, opts);

  const fs::path dir = out_dir(cfg);
  json branch = json::array();
  for (const ContinuationPoint& pt : chain) {
    json j = to_json(pt.profile, pt.profile.converged ? &pt.report : nullptr);
    j["width"] = pt.width;
    branch.push_back(j);
  }
  const ContinuationPoint& last = chain.back();
  json final_profile = to_json(last.profile, last.profile.converged ? &last.report : nullptr);
  final_profile["width"] = last.width;
  final_profile["config"] = to_json(cfg);
  write_json(dir / "locked.json", final_profile);
  write_json(dir / "locked_branch.json", json{{"config", to_json(cfg)}, {"points", branch}});
  if (!last.profile.converged) {
    out << "no locked state found (residual " << format_real(last.profile.residual) << ")\n";
    return kExitNumerical;
  }
  out << "Omega = " << format_real(last.profile.Omega) << ", "
      << to_string(last.report.verdict) << '\n';
  return kExitOk;
}

int cmd_sweep(const Flags& flags, std::ostream& out) {
  RunConfig cfg = resolve(flags, std::nullopt);
  switch (cfg.run.kind) {
    case RunKind::Simulate:
      cfg.run.kind = RunKind::SweepConvergence;
      break;
    case RunKind::Poincare:
      cfg.run.kind = RunKind::SweepPoincare;
      break;
    default:
      break;
  }
  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  SweepOptions opts;
  opts.jobs = jobs_of(cfg);
  int failures = 0;

  if (cfg.run.kind == RunKind::Robustness) {
    std::vector<double> widths;
    for (const SweepAxis& a : cfg.run.axes)
      if (a.param == SweepParam::W) widths = a.values;
    if (widths.empty()) throw ConfigError("robustness sweep needs run.axes.w");
    opts.journal = dir / "robustness.journal";
    const RobustnessResult res = robustness_sweep_k_N(cfg, widths, opts);
    std::ostringstream k_csv, n_csv, gaps;
    write_sweep_csv(k_csv, res.by_k.rows);
    write_sweep_csv(n_csv, res.by_N.rows);
    write_gap_curves_csv(gaps, res);
    write_file_atomic(dir / "robustness_k.csv", k_csv.str());
    write_file_atomic(dir / "robustness_N.csv", n_csv.str());
    write_file_atomic(dir / "gap_curves.csv", gaps.str());
    for (const char* tag : {".k", ".N"}) fs::remove(dir / (std::string("robustness.journal") + tag));
    failures = static_cast<int>(res.by_k.failures() + res.by_N.failures());
    out << res.by_k.rows.size() + res.by_N.rows.size() << " rows";
  } else {
    opts.journal = dir / "sweep.journal.jsonl";
    const SweepResult res = run_experiment(cfg, opts);
    std::ostringstream csv;
    write_sweep_csv(csv, res.rows);
    write_file_atomic(dir / "sweep.csv", csv.str());
    fs::remove(*opts.journal);
    failures = static_cast<int>(res.failures());
    out << res.rows.size() << " rows";
  }
  write_json(dir / "config.resolved.json", to_json(cfg));
  out << ", " << failures << " failed\n";
  return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_figures(const Flags& flags, std::ostream& out) {
  const auto& ids = figure_ids();
  if (std::find(ids.begin(), ids.end(), flags.figure) == ids.end())
    throw ConfigError("unknown figure id '" + flags.figure + "'");
  const RunConfig cfg = resolve(flags, std::nullopt);
  FigureOptions opts;
  opts.jobs = jobs_of(cfg);
  opts.seed = cfg.init.seed;
  const fs::path dir = out_dir(cfg) / flags.figure;
  const FigureBundle bundle = write_figure(flags.figure, dir, opts);
  for (const auto& f : bundle.files) out << f.sha256 << "  " << f.name << '\n';
  out << "manifest " << bundle.manifest_sha256 << '\n';
  return bundle.failed_rows > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Receiver-gated Kuramoto oscillators: simulation, locked states, "
               "Poincare sections and sweeps.",
               "deadzone"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  std::string seed_text, jobs_text;
  app.add_option("--config", flags.config_path, "JSON run config")->option_text("PATH");
  app.add_option("--set", flags.sets, "Override a config value, e.g. gate.w=3.14 (repeatable)")
      ->option_text("KEY=VALUE")
      ->take_all()
      ->allow_extra_args(false);
  app.add_option("--out", flags.out, "Output directory (output.dir)")->option_text("DIR");
  app.add_option("--jobs", flags.jobs, "Worker count for sweeps (run.jobs)")
      ->option_text("J")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", flags.seed, "Initial-condition seed (init.seed)")->option_text("S");

  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory");
  auto* locked = app.add_subcommand("locked", "Solve and classify a phase-locked state");
  auto* poincare = app.add_subcommand("poincare", "Poincare section and locking verdict");
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep over run.axes");
  auto* figures = app.add_subcommand("figures", "Regenerate figure data (fig2, fig4, fig5, figS1)");
  figures->add_option("id", flags.figure, "Figure id")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(flags, out);
    if (*locked) return cmd_locked(flags, out);
    if (*poincare) return cmd_poincare(flags, out);
    if (*sweep) return cmd_sweep(flags, out);
    if (*figures) return cmd_figures(flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionViolated& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}

}  // namespace deadzone
