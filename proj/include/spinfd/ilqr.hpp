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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/control_suite.hpp"
#include "spinfd/grad_estimate.hpp"
#include "spinfd/noise.hpp"

namespace spinfd::ilqr {

struct Trajectory {
  Eigen::MatrixXd states;    ///< (T+1) x n
  Eigen::MatrixXd controls;  ///< T x m
  Eigen::VectorXd stage_costs;
  double terminal_cost = 0.0;
  double total_cost = 0.0;

  int horizon() const { return static_cast<int>(controls.rows()); }
};

struct Linearization {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> B;
  long evaluations = 0;
  long wall_nanos = 0;
};

/// Affine feedback u = u_hat + alpha k + K (x - x_hat) and the expected
/// reduction model  -(alpha * dV1 + alpha^2 * dV2).
struct Gains {
  std::vector<Eigen::VectorXd> k;
  std::vector<Eigen::MatrixXd> K;
  double dV1 = 0.0;
  double dV2 = 0.0;

  double expected_reduction(double alpha) const { return -(alpha * dV1 + alpha * alpha * dV2); }
};

/// Controls are clamped before use; with noise the rollout is corrupted by
/// noisy_dynamics draws.
Trajectory rollout(const Environment& env, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls,
                   const std::optional<NoiseModel>& noise = std::nullopt);

/// True if states follow the noiseless dynamics and the costs add up.
bool is_consistent(const Environment& env, const Trajectory& traj, double tol = 1e-12);

/// Jacobians at every (x_t, u_t). Directions for step t come from
/// plan.draw(derive_seed(seed, iteration + 1, t)); noise is reseeded the same way.
Linearization linearize(const Environment& env, const Trajectory& traj, const DirectionPlan& plan,
                        double delta, const NoiseModel& noise, std::uint64_t seed, int iteration,
                        int workers = 1);

/// Riccati recursion with Q_uu + regularization * I. Controls whose step would
/// leave the box are held at the bound and the free block is re-solved.
/// Throws NotPositiveDefinite.
Gains backward_pass(const Environment& env, const Trajectory& traj, const Linearization& lin,
                    double regularization);

/// Throws RolloutDiverged on a non-finite state.
Trajectory forward_pass(const Environment& env, const Trajectory& traj, const Gains& gains,
                        double alpha, const std::optional<NoiseModel>& rollout_noise = std::nullopt);

struct SolveOptions {
  int max_iterations = 100;
  double delta = 1e-4;
  NoiseModel noise;
  /// Also corrupt rollouts (cost accounting) with `noise`.
  bool rollout_noise = false;
  /// Stop after `patience` consecutive iterations with relative improvement below this.
  double tolerance = 1e-6;
  int patience = 3;
  std::uint64_t seed = 0;
  double reg_init = 1e-6;
  double reg_min = 1e-6;
  double reg_max = 1e10;
  int line_search_steps = 11;  ///< alpha = 1, 1/2, ..., 2^-10
  double armijo = 1e-4;
  int workers = 1;
};

struct SolveReport {
  std::vector<double> cost_per_iteration;
  /// Cumulative counts at the end of each iteration.
  std::vector<long> evaluations_per_iteration;
  std::vector<long> wall_nanos_per_iteration;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  double initial_cost = 0.0;
  long wall_nanos_total = 0;
  long wall_nanos_linearization = 0;
  long evaluations = 0;
  /// Iterations whose line search or backward pass found no acceptable step.
  int failed_iterations = 0;
  nlohmann::json estimator_descriptor;
};

struct SolveResult {
  SolveReport report;
  Trajectory trajectory;
};

SolveResult solve(const Environment& env, const Eigen::MatrixXd& initial_controls,
                  const EstimatorConfig& estimator, const SolveOptions& options);

void to_json(nlohmann::json& j, const SolveReport& r);

}  // namespace spinfd::ilqr
