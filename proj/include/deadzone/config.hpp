#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deadzone/analysis.hpp"
#include "deadzone/core.hpp"
#include "deadzone/integrator.hpp"
#include "deadzone/locked.hpp"

namespace deadzone {

enum class FrequencyMode { Identical, PeriodRange, Explicit };

struct FrequencySpec {
  FrequencyMode mode = FrequencyMode::PeriodRange;
  double period = 24.0;
  double period_min = 23.0;
  double period_max = 25.0;
  std::vector<double> omega;  // Explicit mode

  static FrequencySpec identical(double tau) {
    FrequencySpec f;
    f.mode = FrequencyMode::Identical;
    f.period = tau;
    return f;
  }
  static FrequencySpec period_range(double lo, double hi) {
    FrequencySpec f;
    f.mode = FrequencyMode::PeriodRange;
    f.period_min = lo;
    f.period_max = hi;
    return f;
  }
};

std::vector<double> build_frequencies(const FrequencySpec& spec, std::size_t n);

struct ModelSpec {
  std::size_t N = 20;
  double K = 0.02;
  FrequencySpec frequencies{};
  GateParams gate{};
};

ModelConfig build_model(const ModelSpec& spec);

enum class InitMode { Equispaced, UniformRandom };

struct InitSpec {
  InitMode mode = InitMode::UniformRandom;
  std::uint64_t seed = 1;
};

enum class RunKind {
  Simulate,
  Poincare,
  Locked,
  SweepConvergence,
  SweepPoincare,
  Robustness,
};

std::string to_string(RunKind kind);
RunKind run_kind_from_string(const std::string& name);

enum class SweepParam { K, W, Sharpness, N };

std::string to_string(SweepParam p);
SweepParam sweep_param_from_string(const std::string& name);

struct SweepAxis {
  SweepParam param = SweepParam::W;
  std::vector<double> values;
};

struct RunOptions {
  RunKind kind = RunKind::Simulate;
  PoincareOptions poincare{};
  LockingThresholds thresholds{};
  double convergence_tol = 1e-4;
  Normalization normalization{};
  std::vector<double> widths;              // locked continuation targets
  std::vector<SweepAxis> axes;             // sweeps
  std::vector<std::uint64_t> seeds;        // sweep replicate seeds
  std::optional<int> jobs;
};

/// Everything one invocation needs. Serializes to the JSON run-config file
/// format; unknown keys are rejected on parse.
struct RunConfig {
  ModelSpec model{};
  InitSpec init{};
  IntegrationConfig integration{};
  RunOptions run{};
  std::optional<std::string> output_dir;
};

/// Parses a run-config document. Missing keys take defaults (N = 20,
/// K = 0.02, k = 10, w = pi, periods 23..25); the gate frame defaults to
/// fixed for identical frequencies and mean_phase otherwise. Throws
/// ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& doc);

nlohmann::json to_json(const RunConfig& cfg);

/// Applies `a.b.c=value` to a JSON document; value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

nlohmann::json to_json(const GateParams& gate);
nlohmann::json to_json(const LockedProfile& profile,
                       const StabilityReport* report = nullptr);
nlohmann::json to_json(const LockingVerdict& verdict);

}  // namespace deadzone
