#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deadzone/config.hpp"

namespace deadzone {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based generator: draw c of stream `key` is mix64 of (key, c), so
/// any draw can be recomputed without replaying the stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t at(std::uint64_t counter) const;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform_at(std::uint64_t counter) const;

  std::uint64_t next() { return at(counter_++); }
  double uniform() { return uniform_at(counter_++); }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Seed of one sweep point, independent of execution order.
std::uint64_t derive_seed(std::uint64_t master,
                          std::span<const std::size_t> grid_indices,
                          std::size_t replicate);

/// Equispaced: 2pi(i-1)/N. UniformRandom: theta_i is draw i of the
/// stream keyed by the seed.
std::vector<double> initial_phases(const InitSpec& init, std::size_t n);

/// One sweep result. `section` and `steady_gap` carry the Poincare phase
/// gap theta_1 - psi for the figure exports; they are not CSV columns.
struct SweepRow {
  std::size_t grid_idx = 0;
  std::vector<std::size_t> indices;  // axis indices then replicate
  double K = 0.0;
  double w = 0.0;  // 0 when the gate is disabled
  double k = 0.0;
  std::size_t N = 0;
  std::uint64_t seed = 0;
  std::string verdict;
  std::optional<double> spread;
  std::optional<double> omega_locked;
  std::optional<double> T_conv;
  std::optional<double> steady_gap;
  std::vector<double> section;
  std::string error;
  nlohmann::json config;
};

nlohmann::json to_json(const SweepRow& row);
SweepRow sweep_row_from_json(const nlohmann::json& j);

/// Resolved single-run config of a grid point: axis values applied, seed
/// derived, axes and replicate list cleared. An axis value w = 0 disables
/// the gate.
RunConfig point_config(const RunConfig& spec,
                       std::span<const std::size_t> axis_indices,
                       std::size_t replicate);

/// Runs the pipeline selected by cfg.run.kind on one resolved config.
/// simulate / sweep-convergence: T_conv and final R. poincare /
/// sweep-poincare / robustness: verdict, spread, locked frequency and gap.
/// locked: continuation to gate.w, stability verdict and Omega.
SweepRow run_point(const RunConfig& cfg);

struct SweepOptions {
  int jobs = 1;
  bool parallel = true;
  std::optional<std::filesystem::path> journal;  // JSONL of finished rows
  std::optional<std::size_t> stop_after;         // new rows before stopping
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by grid_idx
  std::size_t total = 0;
  bool complete = false;

  std::size_t failures() const;
};

/// One row per grid point x replicate seed. Per-point failures land in the
/// error column. With a journal, rows already present are reused, so an
/// interrupted sweep resumes where it stopped.
SweepResult run_experiment(const RunConfig& spec, const SweepOptions& opts = {});

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

struct InverseKFit {
  double c = 0.0;
  double rel_rmse = 0.0;
};

/// Least squares T = c / K. rel_rmse = sqrt(mean(((T - c/K) / T)^2)).
InverseKFit fit_inverse_K(std::span<const std::pair<double, double>> points);

inline const std::vector<double> kRobustnessSharpness{0.5, 1.0, 2.0, 5.0, 10.0};
inline const std::vector<std::size_t> kRobustnessSizes{10, 20, 50, 200};

struct RobustnessResult {
  SweepResult by_k;  // N fixed at the base value
  SweepResult by_N;  // k fixed at the base value
};

/// Poincare sweeps over w for every k (at the base N) and every N (at the
/// base k). `widths` replaces any w axis of the base spec.
RobustnessResult robustness_sweep_k_N(const RunConfig& base,
                                      const std::vector<double>& widths,
                                      const SweepOptions& opts = {},
                                      const std::vector<double>& sharpness = kRobustnessSharpness,
                                      const std::vector<std::size_t>& sizes = kRobustnessSizes);

/// family,k,N,w,seed,verdict,steady_gap
void write_gap_curves_csv(std::ostream& os, const RobustnessResult& res);

/// Shortest decimal that round-trips; empty for nullopt, "nan"/"inf" spelled out.
std::string format_real(double x);

}  // namespace deadzone
