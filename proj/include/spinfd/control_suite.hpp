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

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/grad_estimate.hpp"
#include "spinfd/noise.hpp"

namespace spinfd {

enum class EnvName { CarParking, Cartpole, Acrobot, Linear };

/// (p_x, p_y) is the midpoint of the rear axle in meters, theta the heading
/// (radians, unwrapped), v the front-wheel speed in m/s.
struct CarState {
  double p_x = 0.0;
  double p_y = 0.0;
  double theta = 0.0;
  double v = 0.0;
};

/// Front-wheel angle (rad) and front-wheel acceleration (m/s^2).
struct CarControl {
  double omega = 0.0;
  double a = 0.0;
};

struct CarParams {
  double wheelbase = 2.0;
};

/// State (cart position, pole angle from upright, cart velocity, pole rate).
struct CartpoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gravity = 9.81;
};

/// State (theta1 from hanging, theta2 relative, rate1, rate2); torque on joint 2.
struct AcrobotParams {
  double m1 = 1.0, m2 = 1.0;
  double l1 = 1.0;
  double lc1 = 0.5, lc2 = 0.5;
  double i1 = 1.0, i2 = 1.0;
  double gravity = 9.81;
};

/// Quadratic-type cost weights with e = x - goal:
///   stage    = scale * [ 1/2 e^T Q e + 1/2 u^T R u + sum_i h_i (sqrt(e_i^2 + s^2) - s) ]
///   terminal = 1/2 e^T Qf e
/// where scale = dt if scale_by_dt, else 1. Coordinates flagged periodic use
/// Q_ii (1 - cos e_i) in place of 1/2 Q_ii e_i^2 (Q must be diagonal there).
struct CostParams {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd Qf;
  std::vector<bool> periodic;
  Eigen::VectorXd huber_weights;
  double huber_scale = 0.01;
  bool scale_by_dt = true;
};

struct Environment {
  EnvName name = EnvName::CarParking;
  Eigen::Index n = 4;
  Eigen::Index m = 2;
  int horizon = 500;
  double dt = 0.03;
  Eigen::VectorXd start;
  Eigen::VectorXd goal;
  Eigen::VectorXd u_lower;
  Eigen::VectorXd u_upper;
  CostParams cost;
  CarParams car;
  CartpoleParams cartpole;
  AcrobotParams acrobot;
  /// Linear environments: x' = A x + B u.
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

struct CostExpansion {
  double value = 0.0;
  Eigen::VectorXd gradient_x;
  Eigen::VectorXd gradient_u;
  Eigen::MatrixXd hessian_xx;
  Eigen::MatrixXd hessian_uu;
  Eigen::MatrixXd hessian_ux;
};

Environment make_car_parking();
Environment make_cartpole();
Environment make_acrobot();
/// Unconstrained discrete LQR instance with 1/2-weighted quadratic costs.
Environment make_linear(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q, Eigen::MatrixXd R,
                        Eigen::MatrixXd Qf, Eigen::VectorXd start, int horizon);
Environment make_environment(EnvName name);

std::string to_string(EnvName name);
EnvName parse_env_name(const std::string& s);

/// Kinematic bicycle step: the front wheel rolls v*dt at angle omega.
CarState car_step(const CarState& x, const CarControl& u, double dt, const CarParams& p = {});
Eigen::Vector4d cartpole_step(const Eigen::Vector4d& x, double force, double dt,
                              const CartpoleParams& p = {});
/// Continuous-time (cart acceleration, pole angular acceleration).
Eigen::Vector2d cartpole_accelerations(const Eigen::Vector4d& x, double force,
                                       const CartpoleParams& p = {});
Eigen::Vector4d acrobot_step(const Eigen::Vector4d& x, double torque, double dt,
                             const AcrobotParams& p = {});
/// Continuous-time joint accelerations.
Eigen::Vector2d acrobot_accelerations(const Eigen::Vector4d& x, double torque,
                                      const AcrobotParams& p = {});

Eigen::VectorXd clamp_controls(const Environment& env, const Eigen::VectorXd& u);

/// One step of env's dynamics; controls are clamped to the limits first.
Eigen::VectorXd step(const Environment& env, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

CostExpansion stage_cost(const Environment& env, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, int t);
CostExpansion terminal_cost(const Environment& env, const Eigen::VectorXd& x);

/// The same dynamics without the control clamp. Linearization uses this so that
/// perturbations of a control sitting on its bound still see the smooth model.
Eigen::VectorXd step_unclamped(const Environment& env, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Noiseless (x, u) -> x' blackbox; safe for concurrent evaluation.
VectorBlackbox dynamics_blackbox(const Environment& env, bool clamp = true);

/// (x, u) -> x' + noise, one draw per output coordinate per evaluation from a
/// single sequential stream seeded by noise.seed. Not concurrent-safe.
VectorBlackbox noisy_dynamics(const Environment& env, const NoiseModel& noise);

void to_json(nlohmann::json& j, const Environment& env);
/// Starts from the named defaults and overrides any fields present.
Environment environment_from_json(const nlohmann::json& j);

}  // namespace spinfd
