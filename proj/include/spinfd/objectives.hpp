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
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/boxed_qn.hpp"
#include "spinfd/grad_estimate.hpp"

namespace spinfd {

/// Synthetic test objective with its known optimum.
struct Objective {
  std::string name;
  Blackbox bb;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  BoxBounds bounds;
  Eigen::VectorXd x_star;
  double f_star = 0.0;
};

/// f = a^T x + b with a ~ N(0, I).
Objective make_linear_objective(int d, std::uint64_t seed);
/// f = 1/2 (x - c)^T A (x - c) with eigenvalues in [1, cond] under a random rotation,
/// box [-1, 1]^d and c drawn inside [-0.5, 0.5]^d.
Objective make_quadratic_objective(int d, std::uint64_t seed, double cond = 10.0);
/// Separable quadratic with the center placed outside the box; x_star is its projection.
Objective make_outside_quadratic_objective(int d, std::uint64_t seed);
/// Chained Rosenbrock on [-2, 2]^d, optimum at ones.
Objective make_rosenbrock_objective(int d);
/// Negative sum of two Gaussian wells on [0, 1]^d. The deeper well is the global one.
Objective make_two_well_objective(int d, std::uint64_t seed);
/// Negated running reward of the toy gait surrogate; x_star is unknown (f_star = NaN).
Objective make_gait_objective(int steps = 400);

/// {"name": "quadratic" | "linear" | "rosenbrock" | "two_well" | "gait_surrogate", "dim": d, ...}
Objective objective_from_json(const nlohmann::json& j, std::uint64_t seed);

}  // namespace spinfd
