#include "deadzone/config.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "deadzone/errors.hpp"

namespace deadzone {

using nlohmann::json;

std::vector<double> build_frequencies(const FrequencySpec& spec, std::size_t n) {
  switch (spec.mode) {
    case FrequencyMode::Identical:
      return frequencies_identical(n, spec.period);
    case FrequencyMode::PeriodRange:
      return frequencies_period_range(n, spec.period_min, spec.period_max);
    case FrequencyMode::Explicit:
      if (spec.omega.size() != n)
        throw ConfigError("explicit omega has " + std::to_string(spec.omega.size()) +
                          " entries but N = " + std::to_string(n));
      return spec.omega;
  }
  return {};
}

ModelConfig build_model(const ModelSpec& spec) {
  ModelConfig cfg;
  cfg.coupling = spec.K;
  cfg.omega = build_frequencies(spec.frequencies, spec.N);
  cfg.gate = spec.gate;
  validate(cfg);
  return cfg;
}

std::string to_string(RunKind kind) {
  switch (kind) {
    case RunKind::Simulate:
      return "simulate";
    case RunKind::Poincare:
      return "poincare";
    case RunKind::Locked:
      return "locked";
    case RunKind::SweepConvergence:
      return "sweep-convergence";
    case RunKind::SweepPoincare:
      return "sweep-poincare";
    case RunKind::Robustness:
      return "robustness";
  }
  return "simulate";
}

RunKind run_kind_from_string(const std::string& name) {
  for (RunKind k : {RunKind::Simulate, RunKind::Poincare, RunKind::Locked,
                    RunKind::SweepConvergence, RunKind::SweepPoincare,
                    RunKind::Robustness})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown run.kind '" + name + "'");
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::K:
      return "K";
    case SweepParam::W:
      return "w";
    case SweepParam::Sharpness:
      return "k";
    case SweepParam::N:
      return "N";
  }
  return "w";
}

SweepParam sweep_param_from_string(const std::string& name) {
  if (name == "K") return SweepParam::K;
  if (name == "w") return SweepParam::W;
  if (name == "k") return SweepParam::Sharpness;
  if (name == "N") return SweepParam::N;
  throw ConfigError("unknown sweep axis '" + name + "' (expected K, w, k or N)");
}

namespace {

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!ok.count(item.key()))
      throw ConfigError("unknown key '" + section + "." + item.key() + "'");
}

// Numbers, or strings such as "pi", "pi/2", "3*pi/4", "1.5pi".
double to_real(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    static const std::regex re(
        R"(^\s*([0-9]*\.?[0-9]+)?\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$)");
    std::smatch m;
    const std::string s = v.get<std::string>();
    if (std::regex_match(s, m, re)) {
      const double num = m[1].matched ? std::stod(m[1].str()) : 1.0;
      const double den = m[2].matched ? std::stod(m[2].str()) : 1.0;
      return num * kPi / den;
    }
  }
  throw ConfigError("'" + where + "' must be a number");
}

std::vector<double> to_reals(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("'" + where + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(to_real(x, where));
  return out;
}

std::uint64_t to_seed(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError("'" + where + "' must be a non-negative integer");
}

bool to_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError("'" + where + "' must be a boolean");
  return v.get<bool>();
}

std::string to_str(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError("'" + where + "' must be a string");
  return v.get<std::string>();
}

std::size_t to_count(const json& v, const std::string& where) {
  const double x = to_real(v, where);
  if (!(x >= 0.0) || x != std::floor(x))
    throw ConfigError("'" + where + "' must be a non-negative integer");
  return static_cast<std::size_t>(x);
}

void parse_model(const json& j, RunConfig& cfg, bool& identical) {
  check_keys(j, "model", {"N", "K", "omega"});
  if (j.contains("N")) cfg.model.N = to_count(j["N"], "model.N");
  if (j.contains("K")) cfg.model.K = to_real(j["K"], "model.K");
  if (j.contains("omega")) {
    const json& o = j["omega"];
    check_keys(o, "model.omega", {"identical", "period_range", "explicit"});
    if (o.size() != 1)
      throw ConfigError("model.omega needs exactly one of identical, period_range, explicit");
    FrequencySpec& f = cfg.model.frequencies;
    if (o.contains("identical")) {
      f.mode = FrequencyMode::Identical;
      f.period = to_real(o["identical"], "model.omega.identical");
    } else if (o.contains("period_range")) {
      const auto r = to_reals(o["period_range"], "model.omega.period_range");
      if (r.size() != 2)
        throw ConfigError("model.omega.period_range needs [tau_min, tau_max]");
      f.mode = FrequencyMode::PeriodRange;
      f.period_min = r[0];
      f.period_max = r[1];
    } else {
      f.mode = FrequencyMode::Explicit;
      f.omega = to_reals(o["explicit"], "model.omega.explicit");
    }
  }
  identical = cfg.model.frequencies.mode == FrequencyMode::Identical;
}

void parse_gate(const json& j, RunConfig& cfg, bool identical) {
  GateParams& g = cfg.model.gate;
  g.frame = identical ? GateFrame::fixed() : GateFrame::mean_phase();
  if (j.is_null()) return;
  check_keys(j, "gate", {"enabled", "theta0", "w", "k", "frame", "omega_ref", "psi0"});
  if (j.contains("enabled")) g.enabled = to_bool(j["enabled"], "gate.enabled");
  if (j.contains("theta0")) g.theta0 = to_real(j["theta0"], "gate.theta0");
  if (j.contains("w")) g.width = to_real(j["w"], "gate.w");
  if (j.contains("k")) g.sharpness = to_real(j["k"], "gate.k");
  if (j.contains("frame"))
    g.frame.kind = frame_kind_from_string(to_str(j["frame"], "gate.frame"));
  if (j.contains("omega_ref"))
    g.frame.omega_ref = to_real(j["omega_ref"], "gate.omega_ref");
  if (j.contains("psi0")) g.frame.psi0 = to_real(j["psi0"], "gate.psi0");
}

void parse_init(const json& j, RunConfig& cfg) {
  check_keys(j, "init", {"mode", "seed"});
  if (j.contains("mode")) {
    const std::string m = to_str(j["mode"], "init.mode");
    if (m == "equispaced")
      cfg.init.mode = InitMode::Equispaced;
    else if (m == "uniform_random")
      cfg.init.mode = InitMode::UniformRandom;
    else
      throw ConfigError("init.mode must be equispaced or uniform_random");
  }
  if (j.contains("seed")) cfg.init.seed = to_seed(j["seed"], "init.seed");
}

CouplingKernel kernel_from_string(const std::string& s) {
  if (s == "mean_field") return CouplingKernel::MeanField;
  if (s == "pairwise") return CouplingKernel::Pairwise;
  if (s == "pairwise_parallel") return CouplingKernel::PairwiseParallel;
  throw ConfigError("integration.kernel must be mean_field, pairwise or pairwise_parallel");
}

std::string kernel_name(CouplingKernel k) {
  switch (k) {
    case CouplingKernel::MeanField:
      return "mean_field";
    case CouplingKernel::Pairwise:
      return "pairwise";
    case CouplingKernel::PairwiseParallel:
      return "pairwise_parallel";
  }
  return "mean_field";
}

void parse_integration(const json& j, RunConfig& cfg) {
  check_keys(j, "integration",
             {"t0", "t_end", "rtol", "atol", "sample_dt", "max_step",
              "initial_step", "kernel"});
  IntegrationConfig& ic = cfg.integration;
  if (j.contains("t0")) ic.t0 = to_real(j["t0"], "integration.t0");
  if (j.contains("t_end")) ic.t_end = to_real(j["t_end"], "integration.t_end");
  if (j.contains("rtol")) ic.rtol = to_real(j["rtol"], "integration.rtol");
  if (j.contains("atol")) ic.atol = to_real(j["atol"], "integration.atol");
  if (j.contains("sample_dt"))
    ic.sample_dt = to_real(j["sample_dt"], "integration.sample_dt");
  if (j.contains("max_step"))
    ic.max_step = to_real(j["max_step"], "integration.max_step");
  if (j.contains("initial_step"))
    ic.initial_step = to_real(j["initial_step"], "integration.initial_step");
  if (j.contains("kernel"))
    ic.kernel = kernel_from_string(to_str(j["kernel"], "integration.kernel"));
}

CrossingDirection direction_from_string(const std::string& s) {
  if (s == "increasing") return CrossingDirection::Increasing;
  if (s == "decreasing") return CrossingDirection::Decreasing;
  if (s == "both") return CrossingDirection::Both;
  throw ConfigError("run.direction must be increasing, decreasing or both");
}

std::string direction_name(CrossingDirection d) {
  switch (d) {
    case CrossingDirection::Increasing:
      return "increasing";
    case CrossingDirection::Decreasing:
      return "decreasing";
    case CrossingDirection::Both:
      return "both";
  }
  return "increasing";
}

void parse_run(const json& j, RunConfig& cfg) {
  check_keys(j, "run",
             {"kind", "transient_cut", "target", "direction", "lock_tol",
              "drift_tol", "min_crossings", "convergence_tol", "normalization",
              "widths", "axes", "seeds", "jobs"});
  RunOptions& r = cfg.run;
  if (j.contains("kind")) r.kind = run_kind_from_string(to_str(j["kind"], "run.kind"));
  if (j.contains("transient_cut"))
    r.poincare.transient_cut = to_real(j["transient_cut"], "run.transient_cut");
  if (j.contains("target")) r.poincare.target = to_real(j["target"], "run.target");
  if (j.contains("direction"))
    r.poincare.direction = direction_from_string(to_str(j["direction"], "run.direction"));
  if (j.contains("lock_tol")) r.thresholds.lock_tol = to_real(j["lock_tol"], "run.lock_tol");
  if (j.contains("drift_tol"))
    r.thresholds.drift_tol = to_real(j["drift_tol"], "run.drift_tol");
  if (j.contains("min_crossings"))
    r.thresholds.min_crossings = to_count(j["min_crossings"], "run.min_crossings");
  if (j.contains("convergence_tol"))
    r.convergence_tol = to_real(j["convergence_tol"], "run.convergence_tol");
  if (j.contains("normalization")) {
    const std::string n = to_str(j["normalization"], "run.normalization");
    if (n == "sum_zero")
      r.normalization = Normalization::sum_zero();
    else if (n == "mean_phase")
      r.normalization = Normalization::mean_phase();
    else
      throw ConfigError("run.normalization must be sum_zero or mean_phase");
  }
  if (j.contains("widths")) r.widths = to_reals(j["widths"], "run.widths");
  if (j.contains("axes")) {
    const json& a = j["axes"];
    if (!a.is_object()) throw ConfigError("'run.axes' must be an object");
    r.axes.clear();
    // Fixed axis order K, w, k, N so grid indices do not depend on key order.
    for (const char* name : {"K", "w", "k", "N"}) {
      if (!a.contains(name)) continue;
      SweepAxis axis;
      axis.param = sweep_param_from_string(name);
      axis.values = to_reals(a[name], std::string("run.axes.") + name);
      if (axis.values.empty())
        throw ConfigError(std::string("run.axes.") + name + " must be nonempty");
      for (double v : axis.values)
        if (!std::isfinite(v))
          throw ConfigError(std::string("run.axes.") + name + " values must be finite");
      r.axes.push_back(std::move(axis));
    }
    for (const auto& item : a.items()) sweep_param_from_string(item.key());
  }
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw ConfigError("'run.seeds' must be an array");
    r.seeds.clear();
    for (const auto& s : j["seeds"]) r.seeds.push_back(to_seed(s, "run.seeds"));
  }
  if (j.contains("jobs")) {
    const std::size_t jobs = to_count(j["jobs"], "run.jobs");
    if (jobs == 0) throw ConfigError("run.jobs must be >= 1");
    r.jobs = static_cast<int>(jobs);
  }
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  check_keys(doc, "config", {"model", "gate", "init", "integration", "run", "output"});
  RunConfig cfg;
  bool identical = false;
  parse_model(doc.contains("model") ? doc["model"] : json::object(), cfg, identical);
  parse_gate(doc.contains("gate") ? doc["gate"] : json(), cfg, identical);
  if (doc.contains("init")) parse_init(doc["init"], cfg);
  if (doc.contains("integration")) parse_integration(doc["integration"], cfg);
  if (doc.contains("run")) parse_run(doc["run"], cfg);
  if (doc.contains("output")) {
    check_keys(doc["output"], "output", {"dir"});
    if (doc["output"].contains("dir"))
      cfg.output_dir = to_str(doc["output"]["dir"], "output.dir");
  }
  if (cfg.model.N < 2) throw ConfigError("model.N must be >= 2");
  validate(cfg.model.gate);
  validate(cfg.integration);
  build_frequencies(cfg.model.frequencies, cfg.model.N);
  return cfg;
}

json to_json(const GateParams& g) {
  json j{{"enabled", g.enabled},
         {"theta0", g.theta0},
         {"w", g.width},
         {"k", g.sharpness},
         {"frame", to_string(g.frame.kind)}};
  if (g.frame.kind == FrameKind::LinearReference) {
    j["omega_ref"] = g.frame.omega_ref;
    j["psi0"] = g.frame.psi0;
  }
  return j;
}

json to_json(const RunConfig& cfg) {
  json model{{"N", cfg.model.N}, {"K", cfg.model.K}};
  const FrequencySpec& f = cfg.model.frequencies;
  switch (f.mode) {
    case FrequencyMode::Identical:
      model["omega"] = {{"identical", f.period}};
      break;
    case FrequencyMode::PeriodRange:
      model["omega"] = {{"period_range", {f.period_min, f.period_max}}};
      break;
    case FrequencyMode::Explicit:
      model["omega"] = {{"explicit", f.omega}};
      break;
  }
  json integration{{"t0", cfg.integration.t0},
                   {"t_end", cfg.integration.t_end},
                   {"rtol", cfg.integration.rtol},
                   {"atol", cfg.integration.atol},
                   {"sample_dt", cfg.integration.sample_dt},
                   {"kernel", kernel_name(cfg.integration.kernel)}};
  if (cfg.integration.max_step) integration["max_step"] = *cfg.integration.max_step;
  if (cfg.integration.initial_step)
    integration["initial_step"] = *cfg.integration.initial_step;
  const RunOptions& r = cfg.run;
  json run{{"kind", to_string(r.kind)},
           {"transient_cut", r.poincare.transient_cut},
           {"target", r.poincare.target},
           {"direction", direction_name(r.poincare.direction)},
           {"lock_tol", r.thresholds.lock_tol},
           {"drift_tol", r.thresholds.drift_tol},
           {"min_crossings", r.thresholds.min_crossings},
           {"convergence_tol", r.convergence_tol},
           {"normalization", r.normalization.kind == Normalization::Kind::MeanPhaseZero
                                 ? "mean_phase"
                                 : "sum_zero"}};
  if (!r.widths.empty()) run["widths"] = r.widths;
  if (!r.axes.empty()) {
    json axes = json::object();
    for (const auto& a : r.axes) axes[to_string(a.param)] = a.values;
    run["axes"] = axes;
  }
  if (!r.seeds.empty()) run["seeds"] = r.seeds;
  if (r.jobs) run["jobs"] = *r.jobs;
  json doc{{"model", model},
           {"gate", to_json(cfg.model.gate)},
           {"init",
            {{"mode", cfg.init.mode == InitMode::Equispaced ? "equispaced"
                                                            : "uniform_random"},
             {"seed", cfg.init.seed}}},
           {"integration", integration},
           {"run", run}};
  if (cfg.output_dir) doc["output"] = {{"dir", *cfg.output_dir}};
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("bad --set key '" + path + "'");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("--set path '" + path + "' crosses a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json to_json(const LockedProfile& profile, const StabilityReport* report) {
  json j{{"vartheta", profile.vartheta},
         {"omega", profile.Omega},
         {"residual", profile.residual},
         {"converged", profile.converged},
         {"iterations", profile.iterations}};
  json eig = json::array();
  if (report) {
    for (const auto& l : report->eigenvalues) eig.push_back({l.real(), l.imag()});
    j["eigenvalues"] = eig;
    j["verdict"] = to_string(report->verdict);
    j["spectral_abscissa_transverse"] = report->spectral_abscissa_transverse;
    j["neutral_mode_removed"] = report->neutral_mode_removed;
    if (!report->diagnostic.empty()) j["diagnostic"] = report->diagnostic;
  } else {
    j["eigenvalues"] = eig;
    j["verdict"] = nullptr;
  }
  return j;
}

json to_json(const LockingVerdict& v) {
  return json{{"kind", to_string(v.kind)},
              {"spread", v.spread},
              {"n_crossings", v.n_crossings}};
}

}  // namespace deadzone
