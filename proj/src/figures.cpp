#include "deadzone/figures.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "deadzone/errors.hpp"
#include "deadzone/harness.hpp"

namespace deadzone {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig2", "fig4", "fig5", "figS1"};
  return ids;
}

namespace {

class BundleWriter {
 public:
  BundleWriter(std::string figure, std::filesystem::path dir) : dir_(std::move(dir)) {
    bundle_.figure = std::move(figure);
  }

  void add(const std::string& name, const std::string& contents, json config) {
    write_file_atomic(dir_ / name, contents);
    bundle_.files.push_back({name, sha256_hex(contents), std::move(config)});
  }

  void add_sweep(const std::string& name, const SweepResult& res, const RunConfig& spec) {
    std::ostringstream os;
    write_sweep_csv(os, res.rows);
    bundle_.failed_rows += res.failures();
    add(name, os.str(), to_json(spec));
  }

  FigureBundle finish() {
    json files = json::array();
    for (const auto& f : bundle_.files)
      files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"config", f.config}});
    const json manifest{{"figure", bundle_.figure},
                        {"failed_rows", bundle_.failed_rows},
                        {"files", files}};
    const std::string text = manifest.dump(2) + "\n";
    write_file_atomic(dir_ / "manifest.json", text);
    bundle_.manifest_sha256 = sha256_hex(text);
    return bundle_;
  }

 private:
  std::filesystem::path dir_;
  FigureBundle bundle_;
};

RunConfig identical_base(std::uint64_t seed) {
  RunConfig cfg;
  cfg.model.N = 20;
  cfg.model.frequencies = FrequencySpec::identical(24.0);
  cfg.model.gate.frame = GateFrame::fixed();
  cfg.init.seed = seed;
  cfg.integration.t_end = 1000.0;
  cfg.run.kind = RunKind::SweepConvergence;
  return cfg;
}

RunConfig heterogeneous_base(std::uint64_t seed) {
  RunConfig cfg;
  cfg.model.N = 20;
  cfg.model.K = 0.02;
  cfg.model.frequencies = FrequencySpec::period_range(23.0, 25.0);
  cfg.model.gate.frame = GateFrame::mean_phase();
  cfg.init.seed = seed;
  cfg.integration.t_end = 6000.0;
  cfg.integration.sample_dt = 10.0;
  cfg.run.poincare.transient_cut = 5000.0;
  cfg.run.kind = RunKind::SweepPoincare;
  return cfg;
}

RunConfig robustness_base(std::uint64_t seed) {
  RunConfig cfg = heterogeneous_base(seed);
  cfg.model.gate.frame = GateFrame::fixed();
  cfg.integration.t_end = 40000.0;
  cfg.integration.sample_dt = 100.0;
  cfg.run.poincare.transient_cut = 39000.0;
  return cfg;
}

std::vector<double> width_grid(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  return out;
}

SweepOptions sweep_options(const FigureOptions& opts) {
  SweepOptions so;
  so.jobs = opts.jobs;
  return so;
}

/// t followed by one R column per run; all runs share the sample grid.
std::string r_series_csv(const std::vector<std::string>& labels,
                         const std::vector<Trajectory>& runs) {
  std::ostringstream os;
  os << 't';
  for (const auto& l : labels) os << ",R_" << l;
  os << '\n';
  const std::size_t n = runs.front().size();
  for (std::size_t s = 0; s < n; ++s) {
    os << format_real(runs.front().times[s]);
    for (const auto& r : runs) os << ',' << format_real(r.R_series[s]);
    os << '\n';
  }
  return os.str();
}

void fig2(BundleWriter& out, const FigureOptions& opts) {
  const std::vector<double> quarter{kPi, 1.25 * kPi, 1.5 * kPi, 1.75 * kPi};
  const std::vector<std::string> quarter_labels{"pi", "5pi/4", "3pi/2", "7pi/4"};

  // Panel A: R(t) over w at K = 0.2, shared initial phases.
  {
    RunConfig cfg = identical_base(opts.seed);
    cfg.model.K = 0.2;
    cfg.run.kind = RunKind::Simulate;
    const auto y0 = initial_phases(cfg.init, cfg.model.N);
    std::vector<Trajectory> runs;
    for (double w : quarter) {
      cfg.model.gate.width = w;
      runs.push_back(integrate(build_model(cfg.model), cfg.integration, y0));
    }
    json config = to_json(cfg);
    config["series"] = {{"gate.w", quarter}};
    out.add("fig2A_R_vs_t.csv", r_series_csv(quarter_labels, runs), config);
  }
  // Panel B: convergence time over w at K = 0.02.
  {
    RunConfig spec = identical_base(opts.seed);
    spec.model.K = 0.02;
    spec.integration.t_end = 20000.0;
    spec.integration.sample_dt = 1.0;
    std::vector<double> ws;
    for (int i = 0; i < 16; ++i) ws.push_back(kPi + i * kPi / 16.0);
    spec.run.axes = {SweepAxis{SweepParam::W, ws}};
    out.add_sweep("fig2B_Tconv_vs_w.csv", run_experiment(spec, sweep_options(opts)), spec);
  }
  // Panel C: R(t) over K at w = pi.
  {
    const std::vector<double> Ks{0.05, 0.1, 0.2, 0.4};
    RunConfig cfg = identical_base(opts.seed);
    cfg.run.kind = RunKind::Simulate;
    const auto y0 = initial_phases(cfg.init, cfg.model.N);
    std::vector<Trajectory> runs;
    std::vector<std::string> labels;
    for (double K : Ks) {
      cfg.model.K = K;
      runs.push_back(integrate(build_model(cfg.model), cfg.integration, y0));
      labels.push_back("K" + format_real(K));
    }
    json config = to_json(cfg);
    config["series"] = {{"model.K", Ks}};
    out.add("fig2C_R_vs_t.csv", r_series_csv(labels, runs), config);
  }
  // Panel D: convergence time over K for three widths, with c/K fits.
  {
    RunConfig spec = identical_base(opts.seed);
    spec.integration.t_end = 5000.0;
    spec.integration.sample_dt = 0.5;
    const std::vector<double> Ks{0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
    const std::vector<double> ws(quarter.begin(), quarter.begin() + 3);
    spec.run.axes = {SweepAxis{SweepParam::K, Ks}, SweepAxis{SweepParam::W, ws}};
    const SweepResult res = run_experiment(spec, sweep_options(opts));
    out.add_sweep("fig2D_Tconv_vs_K.csv", res, spec);

    std::ostringstream os;
    os << "w,c,rel_rmse,n_points\n";
    for (double w : ws) {
      std::vector<std::pair<double, double>> pts;
      for (const SweepRow& r : res.rows)
        if (r.w == w && r.T_conv) pts.emplace_back(r.K, *r.T_conv);
      os << format_real(w) << ',';
      try {
        const InverseKFit fit = fit_inverse_K(pts);
        os << format_real(fit.c) << ',' << format_real(fit.rel_rmse);
      } catch (const Error&) {
        os << ',';
      }
      os << ',' << pts.size() << '\n';
    }
    out.add("fig2D_fits.csv", os.str(), to_json(spec));
  }
}

void fig4(BundleWriter& out, const FigureOptions& opts) {
  RunConfig cfg = heterogeneous_base(opts.seed);
  cfg.integration.t_end = 1000.0;
  cfg.integration.sample_dt = 0.5;
  cfg.run.kind = RunKind::Simulate;
  const auto y0 = initial_phases(cfg.init, cfg.model.N);
  const std::vector<std::pair<std::string, double>> panels{
      {"A", 0.0}, {"B", kPi / 2.0}, {"C", kPi}};
  for (const auto& [panel, w] : panels) {
    RunConfig c = cfg;
    c.model.gate.enabled = w != 0.0;
    if (w != 0.0) c.model.gate.width = w;
    const Trajectory traj = integrate(build_model(c.model), c.integration, y0);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    out.add("fig4" + panel + "_trajectory.csv", os.str(), to_json(c));
  }
}

std::string sections_csv(const char* key_name, const std::vector<const SweepRow*>& rows,
                         double (*key)(const SweepRow&)) {
  std::ostringstream os;
  os << key_name << ",w,seed,crossing,gap\n";
  for (const SweepRow* r : rows)
    for (std::size_t c = 0; c < r->section.size(); ++c)
      os << format_real(key(*r)) << ',' << format_real(r->w) << ',' << r->seed << ','
         << c << ',' << format_real(r->section[c]) << '\n';
  return os.str();
}

void fig5(BundleWriter& out, const FigureOptions& opts) {
  RunConfig spec = heterogeneous_base(opts.seed);
  const std::vector<double> Ks{0.02, 0.04, 0.08, 0.12, 0.16, 0.2};
  spec.run.axes = {SweepAxis{SweepParam::K, Ks},
                   SweepAxis{SweepParam::W, width_grid(0.1, 6.2, 0.1)}};
  const SweepResult res = run_experiment(spec, sweep_options(opts));
  out.add_sweep("fig5_sweep.csv", res, spec);

  std::ostringstream a;
  a << "K,w,verdict,steady_gap,spread\n";
  for (const SweepRow& r : res.rows)
    a << format_real(r.K) << ',' << format_real(r.w) << ',' << r.verdict << ','
      << (r.steady_gap ? format_real(*r.steady_gap) : "") << ','
      << (r.spread ? format_real(*r.spread) : "") << '\n';
  out.add("fig5A_steady_gap.csv", a.str(), to_json(spec));

  const std::vector<std::pair<std::string, double>> panels{
      {"B", 0.02}, {"C", 0.04}, {"D", 0.2}};
  for (const auto& [panel, K] : panels) {
    std::vector<const SweepRow*> rows;
    for (const SweepRow& r : res.rows)
      if (r.K == K) rows.push_back(&r);
    RunConfig panel_spec = spec;
    panel_spec.run.axes.front().values = {K};
    out.add("fig5" + panel + "_sections.csv",
            sections_csv("K", rows, [](const SweepRow& r) { return r.K; }),
            to_json(panel_spec));
  }
}

void figS1(BundleWriter& out, const FigureOptions& opts) {
  {
    std::ostringstream os;
    const std::vector<double> ks{0.0, 2.0, 10.0};
    os << "theta";
    for (double k : ks) os << ",S_k" << format_real(k);
    os << '\n';
    GateParams g;
    for (int i = 0; i <= 512; ++i) {
      const double th = -kPi + kTwoPi * i / 512.0;
      os << format_real(th);
      for (double k : ks) {
        g.sharpness = k;
        os << ',' << format_real(gate_value(g, th));
      }
      os << '\n';
    }
    out.add("figS1A_gate.csv", os.str(),
            json{{"gate", to_json(g)}, {"series", {{"gate.k", ks}}}});
  }

  const RunConfig base = robustness_base(opts.seed);
  const RobustnessResult res =
      robustness_sweep_k_N(base, width_grid(0.1, 3.2, 0.1), sweep_options(opts));
  RunConfig spec_k = base, spec_N = base;
  spec_k.run.kind = spec_N.run.kind = RunKind::Robustness;
  spec_k.run.axes = {SweepAxis{SweepParam::W, width_grid(0.1, 3.2, 0.1)},
                     SweepAxis{SweepParam::Sharpness, kRobustnessSharpness}};
  spec_N.run.axes = {SweepAxis{SweepParam::W, width_grid(0.1, 3.2, 0.1)},
                     SweepAxis{SweepParam::N, std::vector<double>(kRobustnessSizes.begin(),
                                                                  kRobustnessSizes.end())}};
  out.add_sweep("figS1_sweep_k.csv", res.by_k, spec_k);
  out.add_sweep("figS1_sweep_N.csv", res.by_N, spec_N);

  std::ostringstream gaps;
  write_gap_curves_csv(gaps, res);
  json both{{"k", to_json(spec_k)}, {"N", to_json(spec_N)}};
  out.add("figS1BD_gap_curves.csv", gaps.str(), both);

  std::vector<const SweepRow*> rows;
  for (const SweepRow& r : res.by_N.rows)
    if (r.N == 20 || r.N == 200) rows.push_back(&r);
  out.add("figS1C_sections.csv",
          sections_csv("N", rows, [](const SweepRow& r) { return static_cast<double>(r.N); }),
          to_json(spec_N));
}

}  // namespace

FigureBundle write_figure(const std::string& id, const std::filesystem::path& dir,
                          const FigureOptions& opts) {
  static const std::map<std::string, void (*)(BundleWriter&, const FigureOptions&)> table{
      {"fig2", fig2}, {"fig4", fig4}, {"fig5", fig5}, {"figS1", figS1}};
  const auto it = table.find(id);
  if (it == table.end())
    throw ConfigError("unknown figure id '" + id + "' (expected fig2, fig4, fig5 or figS1)");
  BundleWriter out(id, dir);
  it->second(out, opts);
  return out.finish();
}

}  // namespace deadzone
