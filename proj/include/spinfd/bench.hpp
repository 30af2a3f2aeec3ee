/*
 Copyright 2026 The spinfd Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinfd/grad_estimate.hpp"
#include "spinfd/noise.hpp"

namespace spinfd {

enum class ExperimentKind { GradAccuracy, TheoremBound, TrajOpt, StepSizeSweep, Timing, QuasiNewton };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& s);

inline constexpr int kSchemaVersion = 1;

/// Declarative benchmark. `environment` is either a control environment
/// (name plus overrides) or a synthetic objective descriptor; `options` holds the
/// experiment-specific knobs (solver overrides, theorem parameters, ...).
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::TrajOpt;
  nlohmann::json environment = nlohmann::json::object();
  std::vector<EstimatorConfig> estimators;
  NoiseModel noise;
  std::vector<double> deltas{1e-4};
  std::vector<std::uint64_t> seeds;
  /// Solver iterations, or trials for the gradient experiments.
  int iterations = 50;
  long max_evaluations = 0;
  /// Wall time makes output nondeterministic, so it is opt-in.
  bool record_wall_time = false;
  nlohmann::json options = nlohmann::json::object();
  std::string output;

  /// FNV-1a over the canonical JSON form, excluding `output`.
  std::string config_hash() const;
};

/// Throws ConfigError on schema or value problems.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);
/// Looks up <preset dir>/<name>.json.
ExperimentConfig load_preset(const std::string& name);
std::vector<std::string> preset_names();
ExperimentConfig with_seed_offset(ExperimentConfig c, std::int64_t offset);

struct ExperimentRecord {
  std::string experiment;
  std::string estimator;
  std::string environment;
  std::uint64_t seed = 0;
  double delta = 0.0;
  double noise_sigma = 0.0;
  int iteration = 0;
  double cost_or_error = 0.0;
  long evaluations = 0;
  long wall_nanos = 0;
  std::string status = "ok";
  std::string config_hash;
};

/// Cross product estimators x deltas x seeds; cells run on up to `jobs`
/// workers and come back sorted (estimator, delta, seed, iteration).
/// A failing cell becomes one row with a non-"ok" status.
std::vector<ExperimentRecord> run(const ExperimentConfig& config, int jobs = 1);

std::string csv_header();
std::string to_csv_row(const ExperimentRecord& r);
void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_csv(std::istream& is);
/// Shortest text that parses back to the same double.
std::string format_double(double x);

struct SummaryRow {
  std::string estimator;
  double delta = 0.0;
  long cells = 0;
  double median_final = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double mean_wall_nanos = 0.0;
  double mean_evaluations = 0.0;
};

/// Lower-interpolation quantile of a nonempty sample.
double lower_quantile(std::vector<double> v, double q);

/// Final row (largest iteration) of each (estimator, delta, environment, seed)
/// cell, aggregated per (estimator, delta). Failed rows are skipped.
/// Throws DomainError on empty or mixed-experiment input.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace spinfd
