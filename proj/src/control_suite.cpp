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

#include "spinfd/control_suite.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "spinfd/errors.hpp"

namespace spinfd {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::MatrixXd diag(std::initializer_list<double> v) { return vec(v).asDiagonal(); }

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Either nested rows or {"diag": [...]}.
Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  if (j.is_object() && j.contains("diag")) {
    const auto d = j.at("diag").get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())).asDiagonal();
  }
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged matrix in environment config");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_environment(const Environment& env) {
  const auto bad = [](const std::string& what) { throw ConfigError("environment: " + what); };
  if (env.horizon < 1) bad("horizon must be >= 1");
  if (!(env.dt > 0.0)) bad("dt must be positive");
  if (env.start.size() != env.n || env.goal.size() != env.n) bad("start/goal length must equal n");
  if (env.u_lower.size() != env.m || env.u_upper.size() != env.m) bad("control limits must have length m");
  if ((env.u_lower.array() > env.u_upper.array()).any()) bad("control lower limit above upper");
  const auto& c = env.cost;
  if (c.Q.rows() != env.n || c.Q.cols() != env.n || c.Qf.rows() != env.n || c.Qf.cols() != env.n) {
    bad("Q and Qf must be n x n");
  }
  if (c.R.rows() != env.m || c.R.cols() != env.m) bad("R must be m x m");
  if (static_cast<Eigen::Index>(c.periodic.size()) != env.n) bad("periodic flags must have length n");
  if (c.huber_weights.size() != env.n) bad("huber weights must have length n");
  if (env.name == EnvName::Linear &&
      (env.A.rows() != env.n || env.A.cols() != env.n || env.B.rows() != env.n || env.B.cols() != env.m)) {
    bad("linear dynamics A must be n x n and B n x m");
  }
}

// 1/2 e^T W e with periodic coordinates replaced by W_ii (1 - cos e_i).
void add_state_term(const Eigen::MatrixXd& W, const std::vector<bool>& periodic,
                    const Eigen::VectorXd& e, double scale, CostExpansion& c) {
  Eigen::MatrixXd quad = W;
  for (std::size_t i = 0; i < periodic.size(); ++i) {
    if (!periodic[i]) continue;
    const auto k = static_cast<Eigen::Index>(i);
    quad.row(k).setZero();
    quad.col(k).setZero();
    const double w = W(k, k);
    c.value += scale * w * (1.0 - std::cos(e[k]));
    c.gradient_x[k] += scale * w * std::sin(e[k]);
    c.hessian_xx(k, k) += scale * w * std::cos(e[k]);
  }
  c.value += scale * 0.5 * e.dot(quad * e);
  c.gradient_x += scale * quad * e;
  c.hessian_xx += scale * quad;
}

}  // namespace

Environment make_car_parking() {
  Environment env;
  env.name = EnvName::CarParking;
  env.n = 4;
  env.m = 2;
  env.horizon = 500;
  env.dt = 0.03;
  env.start = vec({1.0, 1.0, 3.0 * kPi / 2.0, 0.0});
  env.goal = Eigen::VectorXd::Zero(4);
  env.u_lower = vec({-0.5, -2.0});
  env.u_upper = vec({0.5, 2.0});
  env.cost.Q = Eigen::MatrixXd::Zero(4, 4);
  env.cost.R = diag({2e-2, 2e-2});
  env.cost.Qf = diag({10.0, 10.0, 10.0, 10.0});
  env.cost.periodic = {false, false, true, false};
  env.cost.huber_weights = vec({0.1, 0.1, 0.0, 0.0});
  env.cost.huber_scale = 0.01;
  return env;
}

Environment make_cartpole() {
  Environment env;
  env.name = EnvName::Cartpole;
  env.n = 4;
  env.m = 1;
  env.horizon = 100;
  env.dt = 0.02;
  env.start = vec({0.0, kPi / 4.0, 0.0, 0.0});
  env.goal = Eigen::VectorXd::Zero(4);
  env.u_lower = vec({-10.0});
  env.u_upper = vec({10.0});
  env.cost.Q = diag({1.0, 10.0, 0.1, 0.1});
  env.cost.R = diag({1e-2});
  env.cost.Qf = diag({10.0, 100.0, 10.0, 10.0});
  env.cost.periodic = {false, true, false, false};
  env.cost.huber_weights = Eigen::VectorXd::Zero(4);
  return env;
}

Environment make_acrobot() {
  Environment env;
  env.name = EnvName::Acrobot;
  env.n = 4;
  env.m = 1;
  env.horizon = 150;
  env.dt = 0.02;
  // Slightly off upright: without control the pendulum falls well within the horizon.
  env.start = vec({3.09, 0.05, 0.0, 0.0});
  env.goal = vec({kPi, 0.0, 0.0, 0.0});
  env.u_lower = vec({-5.0});
  env.u_upper = vec({5.0});
  env.cost.Q = diag({1.0, 1.0, 0.1, 0.1});
  env.cost.R = diag({1.0});
  env.cost.Qf = diag({10.0, 10.0, 1.0, 1.0});
  env.cost.periodic = {false, false, false, false};
  env.cost.huber_weights = Eigen::VectorXd::Zero(4);
  return env;
}

Environment make_linear(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q, Eigen::MatrixXd R,
                        Eigen::MatrixXd Qf, Eigen::VectorXd start, int horizon) {
  Environment env;
  env.name = EnvName::Linear;
  env.n = A.rows();
  env.m = B.cols();
  env.horizon = horizon;
  env.dt = 1.0;
  env.goal = Eigen::VectorXd::Zero(env.n);
  env.start = std::move(start);
  env.u_lower = Eigen::VectorXd::Constant(env.m, -std::numeric_limits<double>::infinity());
  env.u_upper = Eigen::VectorXd::Constant(env.m, std::numeric_limits<double>::infinity());
  env.cost.Q = std::move(Q);
  env.cost.R = std::move(R);
  env.cost.Qf = std::move(Qf);
  env.cost.periodic.assign(static_cast<std::size_t>(env.n), false);
  env.cost.huber_weights = Eigen::VectorXd::Zero(env.n);
  env.cost.scale_by_dt = false;
  env.A = std::move(A);
  env.B = std::move(B);
  check_environment(env);
  return env;
}

Environment make_environment(EnvName name) {
  switch (name) {
    case EnvName::CarParking: return make_car_parking();
    case EnvName::Cartpole: return make_cartpole();
    case EnvName::Acrobot: return make_acrobot();
    case EnvName::Linear: {
      Eigen::MatrixXd A(2, 2);
      A << 1.0, 0.1, 0.0, 1.0;
      Eigen::MatrixXd B(2, 1);
      B << 0.005, 0.1;
      return make_linear(A, B, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1),
                         10.0 * Eigen::MatrixXd::Identity(2, 2), vec({1.0, 0.0}), 50);
    }
  }
  throw ConfigError("unknown environment");
}

std::string to_string(EnvName name) {
  switch (name) {
    case EnvName::CarParking: return "car";
    case EnvName::Cartpole: return "cartpole";
    case EnvName::Acrobot: return "acrobot";
    case EnvName::Linear: return "linear";
  }
  return "unknown";
}

EnvName parse_env_name(const std::string& s) {
  if (s == "car" || s == "car_parking") return EnvName::CarParking;
  if (s == "cartpole") return EnvName::Cartpole;
  if (s == "acrobot") return EnvName::Acrobot;
  if (s == "linear") return EnvName::Linear;
  throw ConfigError("unknown environment '" + s + "'");
}

CarState car_step(const CarState& x, const CarControl& u, double dt, const CarParams& p) {
  const double L = p.wheelbase;
  const double f = dt * x.v;  // front-wheel rolling distance
  const double lateral = f * std::sin(u.omega);
  const double back = L + f * std::cos(u.omega) - std::sqrt(std::max(0.0, L * L - lateral * lateral));
  const double turn = std::asin(std::clamp(lateral / L, -1.0, 1.0));
  CarState y;
  y.p_x = x.p_x + back * std::cos(x.theta);
  y.p_y = x.p_y + back * std::sin(x.theta);
  y.theta = x.theta + turn;
  y.v = x.v + dt * u.a;
  return y;
}

Eigen::Vector2d cartpole_accelerations(const Eigen::Vector4d& x, double force,
                                       const CartpoleParams& p) {
  const double total = p.cart_mass + p.pole_mass;
  const double pml = p.pole_mass * p.half_length;
  const double s = std::sin(x[1]);
  const double c = std::cos(x[1]);
  const double temp = (force + pml * x[3] * x[3] * s) / total;
  const double theta_acc =
      (p.gravity * s - c * temp) / (p.half_length * (4.0 / 3.0 - p.pole_mass * c * c / total));
  const double x_acc = temp - pml * theta_acc * c / total;
  return {x_acc, theta_acc};
}

Eigen::Vector4d cartpole_step(const Eigen::Vector4d& x, double force, double dt,
                              const CartpoleParams& p) {
  const Eigen::Vector2d acc = cartpole_accelerations(x, force, p);
  Eigen::Vector4d y;
  y[2] = x[2] + dt * acc[0];
  y[3] = x[3] + dt * acc[1];
  y[0] = x[0] + dt * y[2];
  y[1] = x[1] + dt * y[3];
  return y;
}

Eigen::Vector2d acrobot_accelerations(const Eigen::Vector4d& x, double torque,
                                      const AcrobotParams& p) {
  const double th1 = x[0], th2 = x[1], dth1 = x[2], dth2 = x[3];
  const double g = p.gravity;
  const double d1 = p.m1 * p.lc1 * p.lc1 +
                    p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * std::cos(th2)) +
                    p.i1 + p.i2;
  const double d2 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * std::cos(th2)) + p.i2;
  const double phi2 = p.m2 * p.lc2 * g * std::sin(th1 + th2);
  const double phi1 = -p.m2 * p.l1 * p.lc2 * dth2 * dth2 * std::sin(th2) -
                      2.0 * p.m2 * p.l1 * p.lc2 * dth2 * dth1 * std::sin(th2) +
                      (p.m1 * p.lc1 + p.m2 * p.l1) * g * std::sin(th1) + phi2;
  const double ddth2 = (torque + d2 / d1 * phi1 - p.m2 * p.l1 * p.lc2 * dth1 * dth1 * std::sin(th2) - phi2) /
                       (p.m2 * p.lc2 * p.lc2 + p.i2 - d2 * d2 / d1);
  const double ddth1 = -(d2 * ddth2 + phi1) / d1;
  return {ddth1, ddth2};
}

Eigen::Vector4d acrobot_step(const Eigen::Vector4d& x, double torque, double dt,
                             const AcrobotParams& p) {
  const Eigen::Vector2d acc = acrobot_accelerations(x, torque, p);
  Eigen::Vector4d y;
  y[2] = x[2] + dt * acc[0];
  y[3] = x[3] + dt * acc[1];
  y[0] = x[0] + dt * y[2];
  y[1] = x[1] + dt * y[3];
  return y;
}

Eigen::VectorXd clamp_controls(const Environment& env, const Eigen::VectorXd& u) {
  return u.cwiseMax(env.u_lower).cwiseMin(env.u_upper);
}

Eigen::VectorXd step(const Environment& env, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (u.size() != env.m) throw DimensionMismatch("step: wrong state/control length");
  return step_unclamped(env, x, clamp_controls(env, u));
}

Eigen::VectorXd step_unclamped(const Environment& env, const Eigen::VectorXd& x, const Eigen::VectorXd& uc) {
  if (x.size() != env.n || uc.size() != env.m) throw DimensionMismatch("step: wrong state/control length");
  switch (env.name) {
    case EnvName::CarParking: {
      const CarState y = car_step({x[0], x[1], x[2], x[3]}, {uc[0], uc[1]}, env.dt, env.car);
      Eigen::VectorXd out(4);
      out << y.p_x, y.p_y, y.theta, y.v;
      return out;
    }
    case EnvName::Cartpole: return cartpole_step(Eigen::Vector4d(x), uc[0], env.dt, env.cartpole);
    case EnvName::Acrobot: return acrobot_step(Eigen::Vector4d(x), uc[0], env.dt, env.acrobot);
    case EnvName::Linear: return env.A * x + env.B * uc;
  }
  throw ConfigError("unknown environment");
}

CostExpansion stage_cost(const Environment& env, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         int /*t*/) {
  const auto& c = env.cost;
  const double scale = c.scale_by_dt ? env.dt : 1.0;
  CostExpansion out;
  out.gradient_x = Eigen::VectorXd::Zero(env.n);
  out.gradient_u = Eigen::VectorXd::Zero(env.m);
  out.hessian_xx = Eigen::MatrixXd::Zero(env.n, env.n);
  out.hessian_uu = Eigen::MatrixXd::Zero(env.m, env.m);
  out.hessian_ux = Eigen::MatrixXd::Zero(env.m, env.n);

  const Eigen::VectorXd e = x - env.goal;
  add_state_term(c.Q, c.periodic, e, scale, out);

  const double s2 = c.huber_scale * c.huber_scale;
  for (Eigen::Index i = 0; i < env.n; ++i) {
    const double w = c.huber_weights[i];
    if (w == 0.0) continue;
    const double r = std::sqrt(e[i] * e[i] + s2);
    out.value += scale * w * (r - c.huber_scale);
    out.gradient_x[i] += scale * w * e[i] / r;
    out.hessian_xx(i, i) += scale * w * s2 / (r * r * r);
  }

  out.value += scale * 0.5 * u.dot(c.R * u);
  out.gradient_u = scale * c.R * u;
  out.hessian_uu = scale * c.R;
  return out;
}

CostExpansion terminal_cost(const Environment& env, const Eigen::VectorXd& x) {
  CostExpansion out;
  out.gradient_x = Eigen::VectorXd::Zero(env.n);
  out.gradient_u = Eigen::VectorXd::Zero(env.m);
  out.hessian_xx = Eigen::MatrixXd::Zero(env.n, env.n);
  out.hessian_uu = Eigen::MatrixXd::Zero(env.m, env.m);
  out.hessian_ux = Eigen::MatrixXd::Zero(env.m, env.n);
  add_state_term(env.cost.Qf, env.cost.periodic, x - env.goal, 1.0, out);
  return out;
}

VectorBlackbox dynamics_blackbox(const Environment& env, bool clamp) {
  return VectorBlackbox(
      env.n + env.m, env.n,
      [env, clamp](const Eigen::VectorXd& z) {
        return clamp ? step(env, z.head(env.n), z.tail(env.m)) : step_unclamped(env, z.head(env.n), z.tail(env.m));
      },
      true);
}

VectorBlackbox noisy_dynamics(const Environment& env, const NoiseModel& noise) {
  if (!noise.perturbs_values()) return dynamics_blackbox(env);
  auto sampler = std::make_shared<NoiseSampler>(noise);
  return VectorBlackbox(env.n + env.m, env.n, [env, sampler](const Eigen::VectorXd& z) {
    Eigen::VectorXd y = step(env, z.head(env.n), z.tail(env.m));
    return Eigen::VectorXd(y + sampler->vector(env.n));
  });
}

void to_json(nlohmann::json& j, const Environment& env) {
  j = nlohmann::json{
      {"name", to_string(env.name)},
      {"horizon", env.horizon},
      {"dt", env.dt},
      {"start", vector_json(env.start)},
      {"goal", vector_json(env.goal)},
      {"u_lower", vector_json(env.u_lower)},
      {"u_upper", vector_json(env.u_upper)},
      {"cost",
       {{"Q", matrix_json(env.cost.Q)},
        {"R", matrix_json(env.cost.R)},
        {"Qf", matrix_json(env.cost.Qf)},
        {"periodic", env.cost.periodic},
        {"huber_weights", vector_json(env.cost.huber_weights)},
        {"huber_scale", env.cost.huber_scale},
        {"scale_by_dt", env.cost.scale_by_dt}}},
  };
  switch (env.name) {
    case EnvName::CarParking: j["params"] = {{"wheelbase", env.car.wheelbase}}; break;
    case EnvName::Cartpole:
      j["params"] = {{"cart_mass", env.cartpole.cart_mass},
                     {"pole_mass", env.cartpole.pole_mass},
                     {"half_length", env.cartpole.half_length},
                     {"gravity", env.cartpole.gravity}};
      break;
    case EnvName::Acrobot:
      j["params"] = {{"m1", env.acrobot.m1}, {"m2", env.acrobot.m2},   {"l1", env.acrobot.l1},
                     {"lc1", env.acrobot.lc1}, {"lc2", env.acrobot.lc2}, {"i1", env.acrobot.i1},
                     {"i2", env.acrobot.i2}, {"gravity", env.acrobot.gravity}};
      break;
    case EnvName::Linear: j["params"] = {{"A", matrix_json(env.A)}, {"B", matrix_json(env.B)}}; break;
  }
}

Environment environment_from_json(const nlohmann::json& j) {
  if (j.is_string()) return make_environment(parse_env_name(j.get<std::string>()));
  try {
    Environment env = make_environment(parse_env_name(j.at("name").get<std::string>()));
    if (j.contains("horizon")) env.horizon = j["horizon"].get<int>();
    if (j.contains("dt")) env.dt = j["dt"].get<double>();
    if (j.contains("start")) env.start = vector_from(j["start"]);
    if (j.contains("goal")) env.goal = vector_from(j["goal"]);
    if (j.contains("u_lower")) env.u_lower = vector_from(j["u_lower"]);
    if (j.contains("u_upper")) env.u_upper = vector_from(j["u_upper"]);
    if (j.contains("cost")) {
      const auto& c = j["cost"];
      if (c.contains("Q")) env.cost.Q = matrix_from(c["Q"]);
      if (c.contains("R")) env.cost.R = matrix_from(c["R"]);
      if (c.contains("Qf")) env.cost.Qf = matrix_from(c["Qf"]);
      if (c.contains("periodic")) env.cost.periodic = c["periodic"].get<std::vector<bool>>();
      if (c.contains("huber_weights")) env.cost.huber_weights = vector_from(c["huber_weights"]);
      env.cost.huber_scale = c.value("huber_scale", env.cost.huber_scale);
      env.cost.scale_by_dt = c.value("scale_by_dt", env.cost.scale_by_dt);
    }
    if (j.contains("params")) {
      const auto& p = j["params"];
      env.car.wheelbase = p.value("wheelbase", env.car.wheelbase);
      env.cartpole.cart_mass = p.value("cart_mass", env.cartpole.cart_mass);
      env.cartpole.pole_mass = p.value("pole_mass", env.cartpole.pole_mass);
      env.cartpole.half_length = p.value("half_length", env.cartpole.half_length);
      env.cartpole.gravity = p.value("gravity", env.cartpole.gravity);
      env.acrobot.m1 = p.value("m1", env.acrobot.m1);
      env.acrobot.m2 = p.value("m2", env.acrobot.m2);
      env.acrobot.l1 = p.value("l1", env.acrobot.l1);
      env.acrobot.lc1 = p.value("lc1", env.acrobot.lc1);
      env.acrobot.lc2 = p.value("lc2", env.acrobot.lc2);
      env.acrobot.i1 = p.value("i1", env.acrobot.i1);
      env.acrobot.i2 = p.value("i2", env.acrobot.i2);
      env.acrobot.gravity = p.value("gravity", env.acrobot.gravity);
      if (p.contains("A")) env.A = matrix_from(p["A"]);
      if (p.contains("B")) env.B = matrix_from(p["B"]);
      if (env.name == EnvName::Linear) {
        env.n = env.A.rows();
        env.m = env.B.cols();
      }
    }
    check_environment(env);
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("environment config: ") + e.what());
  }
}

}  // namespace spinfd
