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

#include <array>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/boxed_qn.hpp"

namespace spinfd {

/// Open-loop trotting policy: two sinusoids per leg, seven parameters.
/// Time is a timestep index and v is in radians per timestep.
struct GaitParams {
  double A_v = 0.5;   ///< extension amplitude
  double A_s = 0.5;   ///< swing amplitude (radians)
  double v = 0.06;    ///< frequency (radians per timestep)
  double phi_v = 0.0; ///< extension phase relative to swing
  double phi_leg2 = 0.0, phi_leg3 = 0.0, phi_leg4 = 0.0;

  Eigen::VectorXd to_vector() const;
  static GaitParams from_vector(const Eigen::VectorXd& x);
};

/// 0 <= A_v, A_s <= 0.9, 0.04 <= v <= 0.08, phases in [0, 2pi].
BoxBounds gait_bounds();

/// Fixed standing offset added to both motors of a leg.
inline constexpr double kMotorOffset = 1.5707963267948966;

struct LegSignal {
  double swing;
  double extension;
};

/// S_l(t) = A_s sin(t v + phi_l), V_l(t) = A_v sin(t v + phi_l + phi_v), phi_1 = 0.
std::array<LegSignal, 4> leg_signals(const GaitParams& p, double t);

/// Symmetric differential leg: motor1 = S + V + offset, motor2 = -S + V + offset.
std::array<double, 2> motor_angles(const LegSignal& leg);

/// Eight motor angles, ordered (leg1 m1, leg1 m2, leg2 m1, ...).
std::array<double, 8> gait_signals(const GaitParams& p, double t);

struct EpisodeMetrics {
  double d_forward = 0.0;
  double E = 0.0;
  double drift = 0.0;  ///< |y| displacement, not the finite-difference step
  double shake = 0.0;
  double r = 0.0;
};

struct RunningCoeffs {
  double alpha = 1.0, beta = 1.0, gamma = 1.0, xi = 1.0;
};
struct TurningCoeffs {
  double rho = 1.0, beta = 1.0, xi = 1.0;
};

/// alpha d - beta E - gamma drift - xi shake.
double reward_running(const EpisodeMetrics& m, const RunningCoeffs& c);
/// rho r - beta E - xi shake.
double reward_turning(const EpisodeMetrics& m, const TurningCoeffs& c);

/// Toy kinematic point-mass episode driven by the gait signals. Not a physics
/// model; it only gives the gait parameters a smooth, bounded objective.
EpisodeMetrics surrogate_episode(const GaitParams& p, int steps = 1000);

void to_json(nlohmann::json& j, const GaitParams& p);
void from_json(const nlohmann::json& j, GaitParams& p);
void to_json(nlohmann::json& j, const RunningCoeffs& c);
void from_json(const nlohmann::json& j, RunningCoeffs& c);

}  // namespace spinfd
