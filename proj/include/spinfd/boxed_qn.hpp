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
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/grad_estimate.hpp"
#include "spinfd/noise.hpp"

namespace spinfd {

/// Per-coordinate box; entries may be infinite.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxBounds() = default;
  BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi);

  static BoxBounds unbounded(Eigen::Index d);
  static BoxBounds uniform(Eigen::Index d, double lo, double hi);

  Eigen::Index dim() const { return lower.size(); }
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const;
  /// Mean width over finite coordinates, 1 if none are finite.
  double width_scale() const;
};

struct MinimizeOptions {
  /// L-BFGS memory.
  int memory = 10;
  /// Total quasi-Newton iterations over all step-size levels.
  int max_iterations = 500;
  /// Evaluation budget, 0 for none.
  long max_evaluations = 0;
  /// Decreasing finite-difference steps; empty means delta0 * 2^-k for
  /// k = 0..7 with delta0 = 0.1 * bounds.width_scale().
  std::vector<double> delta_schedule;
  /// Advance to the next level once ||projected gradient||_inf <= scale * delta.
  double level_tolerance_scale = 1.0;
  int max_backtracks = 20;
  double armijo = 1e-4;
  /// Fresh gradient draws allowed per level after a failed line search. Only
  /// used when the estimate is random (value noise or randomized directions).
  int stall_retries = 10;
  NoiseModel noise;
  std::uint64_t seed = 0;
  /// Exact gradient; replaces the finite-difference estimator when set.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct OptimizeReport {
  Eigen::VectorXd best_x;
  /// Best observed (possibly noisy) objective value.
  double best_f = 0.0;
  /// Best-so-far value after each quasi-Newton iteration.
  std::vector<double> trace;
  /// Best-so-far value at the end of each step-size level.
  std::vector<double> level_best;
  std::vector<double> deltas;
  long evaluations = 0;
  int iterations = 0;
  bool stalled = false;
  /// Every accepted iterate stayed inside the box.
  bool feasible = true;
};

std::vector<double> default_delta_schedule(const BoxBounds& bounds);

/// Implicit-filtering outer loop over the delta schedule around a projected
/// L-BFGS inner loop fed by finite-difference gradients.
OptimizeReport minimize(const Blackbox& bb, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                        const EstimatorConfig& estimator, const MinimizeOptions& options);

struct MultiStartReport {
  OptimizeReport best;
  /// (start index, report), sorted by best_f ascending then index.
  std::vector<std::pair<int, OptimizeReport>> ranked;
  std::vector<Eigen::VectorXd> starts;
};

/// Uniform random starts inside a finite box; per-start seeds derive from `seed`.
MultiStartReport multi_start(const Blackbox& bb, const BoxBounds& bounds, int num_starts,
                             const EstimatorConfig& estimator, const MinimizeOptions& options,
                             std::uint64_t seed, int workers = 1);

void to_json(nlohmann::json& j, const OptimizeReport& r);

}  // namespace spinfd
