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
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spinfd/control_suite.hpp"
#include "spinfd/errors.hpp"
#include "spinfd/rng.hpp"

using namespace spinfd;

namespace {

constexpr double kPi = std::numbers::pi;

double cartpole_energy(const Eigen::Vector4d& x, const CartpoleParams& p = {}) {
  // Uniform rod of half-length l hinged on the cart; angle measured from upright.
  const double l = p.half_length, m = p.pole_mass, M = p.cart_mass;
  const double vx = x[2] + l * std::cos(x[1]) * x[3];
  const double vy = -l * std::sin(x[1]) * x[3];
  return 0.5 * M * x[2] * x[2] + 0.5 * m * (vx * vx + vy * vy) + 0.5 * (m * l * l / 3.0) * x[3] * x[3] +
         m * p.gravity * l * std::cos(x[1]);
}

double acrobot_energy(const Eigen::Vector4d& x, const AcrobotParams& p = {}) {
  const double c2 = std::cos(x[1]);
  const double w1 = x[2], w12 = x[2] + x[3];
  const double kinetic = 0.5 * (p.m1 * p.lc1 * p.lc1 + p.i1) * w1 * w1 +
                         0.5 * p.m2 * (p.l1 * p.l1 * w1 * w1 + p.lc2 * p.lc2 * w12 * w12 +
                                       2.0 * p.l1 * p.lc2 * w1 * w12 * c2) +
                         0.5 * p.i2 * w12 * w12;
  const double potential = -p.m1 * p.gravity * p.lc1 * std::cos(x[0]) -
                           p.m2 * p.gravity * (p.l1 * std::cos(x[0]) + p.lc2 * std::cos(x[0] + x[1]));
  return kinetic + potential;
}

Eigen::VectorXd random_vec(Rng& rng, Eigen::Index n, double scale) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

// Worst energy error relative to the initial energy (potential zero at the pivot).
template <class Step, class Energy>
double energy_drift(Eigen::Vector4d x, Step step, Energy energy, double dt, int steps) {
  const double e0 = energy(x);
  double worst = 0.0;
  for (int t = 0; t < steps; ++t) {
    x = step(x, dt);
    worst = std::max(worst, std::abs(energy(x) - e0));
  }
  return worst / std::abs(e0);
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("car step oracles") {
  const CarState rest{0.3, -0.2, 1.1, 0.0};
  const CarState y = car_step(rest, {0.4, 0.0}, 0.03);
  CHECK(y.p_x == rest.p_x);
  CHECK(y.p_y == rest.p_y);
  CHECK(y.theta == rest.theta);
  CHECK(y.v == 0.0);

  const CarState start{1.0, 1.0, 3.0 * kPi / 2.0, 0.0};
  const CarState s = car_step(start, {0.0, 0.0}, 0.03);
  CHECK(s.p_x == start.p_x);
  CHECK(s.p_y == start.p_y);
  CHECK(s.theta == start.theta);

  const CarState line = car_step({0.0, 0.0, 0.0, 1.0}, {0.0, 0.0}, 0.03);
  CHECK(line.p_x == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(line.p_y == 0.0);
  CHECK(line.theta == 0.0);
  CHECK(line.v == 1.0);

  // Turning left at positive speed increases the heading; theta is not wrapped.
  const CarState turn = car_step({0.0, 0.0, 6.2, 2.0}, {0.3, 0.0}, 0.03);
  CHECK(turn.theta > 6.2);
}

TEST_CASE("car controls are clamped") {
  const Environment env = make_car_parking();
  const Eigen::Vector4d x(0.5, -0.5, 0.3, 1.5);
  const Eigen::Vector2d wild(3.0, -9.0);
  const Eigen::VectorXd clamped = clamp_controls(env, wild);
  CHECK(clamped[0] == 0.5);
  CHECK(clamped[1] == -2.0);
  CHECK(clamp_controls(env, clamped) == clamped);
  CHECK(step(env, x, wild) == step(env, x, clamped));
  CHECK(step(env, x, clamped) == step_unclamped(env, x, clamped));
}

TEST_CASE("clamping idempotence on random controls") {
  Rng rng(11);
  for (const Environment& env : {make_car_parking(), make_cartpole(), make_acrobot()}) {
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd x = random_vec(rng, env.n, 2.0);
      const Eigen::VectorXd u = random_vec(rng, env.m, 20.0);
      const Eigen::VectorXd c = clamp_controls(env, u);
      CHECK(clamp_controls(env, c) == c);
      CHECK(step(env, x, u) == step(env, x, c));
    }
  }
}

TEST_CASE("cartpole equilibrium, energy and sign") {
  const Eigen::Vector4d upright = Eigen::Vector4d::Zero();
  CHECK(cartpole_step(upright, 0.0, 0.02) == upright);

  const Eigen::Vector4d rest(0.0, 0.0, 0.0, 0.0);
  CHECK(cartpole_accelerations(rest, 1.0)[0] > 0.0);
  CHECK(cartpole_accelerations(rest, -1.0)[0] < 0.0);

  const auto step = [](const Eigen::Vector4d& x, double dt) { return cartpole_step(x, 0.0, dt); };
  const auto energy = [](const Eigen::Vector4d& x) { return cartpole_energy(x); };
  // Released from rest below horizontal.
  for (const Eigen::Vector4d& x0 : {Eigen::Vector4d(0.0, 2.5, 0.0, 0.0), Eigen::Vector4d(0.2, kPi - 0.3, 0.0, 0.0)})
    CHECK(energy_drift(x0, step, energy, 0.01, 100) <= 0.01);
  // Falls from near upright drift by a few percent at this step size; the
  // error is first order in dt everywhere.
  for (const Eigen::Vector4d& x0 : {Eigen::Vector4d(0.0, 0.3, 0.0, 0.0), Eigen::Vector4d(0.0, kPi / 4, 0.0, 0.0),
                                    Eigen::Vector4d(0.0, 2.5, 0.3, 1.0)}) {
    const double coarse = energy_drift(x0, step, energy, 0.01, 100);
    const double fine = energy_drift(x0, step, energy, 0.001, 1000);
    CHECK(fine <= 0.15 * coarse);
  }
}

TEST_CASE("acrobot equilibria and energy") {
  const Eigen::Vector4d hanging = Eigen::Vector4d::Zero();
  CHECK(acrobot_step(hanging, 0.0, 0.02) == hanging);

  const Eigen::Vector4d upright(kPi, 0.0, 0.0, 0.0);
  CHECK(acrobot_accelerations(upright, 0.0).cwiseAbs().maxCoeff() <= 1e-9);

  const auto step = [](const Eigen::Vector4d& x, double dt) { return acrobot_step(x, 0.0, dt); };
  const auto energy = [](const Eigen::Vector4d& x) { return acrobot_energy(x); };
  for (const Eigen::Vector4d& x0 : {Eigen::Vector4d(0.8, -0.4, 0.0, 0.0), Eigen::Vector4d(0.3, 0.3, 0.0, 0.0),
                                    Eigen::Vector4d(3.09, 0.05, 0.0, 0.0)})
    CHECK(energy_drift(x0, step, energy, 0.01, 100) <= 0.01);
  for (const Eigen::Vector4d& x0 : {Eigen::Vector4d(2.0, 1.0, 0.0, -0.5), Eigen::Vector4d(1.2, 0.6, 0.0, 0.0),
                                    Eigen::Vector4d(0.8, -0.4, 0.5, 0.0)}) {
    const double coarse = energy_drift(x0, step, energy, 0.01, 100);
    const double fine = energy_drift(x0, step, energy, 0.001, 1000);
    CHECK(fine <= 0.15 * coarse);
  }
}

TEST_CASE("steps are deterministic and finite") {
  Rng rng(3);
  for (const Environment& env : {make_car_parking(), make_cartpole(), make_acrobot()}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd x = random_vec(rng, env.n, 10.0);
      const Eigen::VectorXd u = random_vec(rng, env.m, 10.0);
      const Eigen::VectorXd y = step(env, x, u);
      CHECK(y.allFinite());
      CHECK(step(env, x, u) == y);
    }
  }
}

TEST_CASE("cost is zero at the goal") {
  for (const Environment& env : {make_car_parking(), make_cartpole(), make_acrobot()}) {
    const CostExpansion c = stage_cost(env, env.goal, Eigen::VectorXd::Zero(env.m), 0);
    CHECK(c.value == 0.0);
    CHECK(c.gradient_x.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.gradient_u.cwiseAbs().maxCoeff() == 0.0);
    const CostExpansion f = terminal_cost(env, env.goal);
    CHECK(f.value == 0.0);
    CHECK(f.gradient_x.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("analytic cost derivatives match central differences") {
  const double h = 1e-5;
  Rng rng(7);
  for (const Environment& env : {make_car_parking(), make_cartpole(), make_acrobot()}) {
    const double scale = env.cost.scale_by_dt ? env.dt : 1.0;
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd x = env.goal + random_vec(rng, env.n, 2.0);
      const Eigen::VectorXd u = random_vec(rng, env.m, 2.0);
      const CostExpansion c = stage_cost(env, x, u, i);
      const CostExpansion f = terminal_cost(env, x);

      CHECK(c.hessian_uu == scale * env.cost.R);
      CHECK(c.hessian_xx.isApprox(c.hessian_xx.transpose(), 0.0));
      CHECK(f.hessian_xx.isApprox(f.hessian_xx.transpose(), 0.0));

      for (Eigen::Index j = 0; j < env.n; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const CostExpansion cp = stage_cost(env, xp, u, i), cm = stage_cost(env, xm, u, i);
        CHECK(close_rel((cp.value - cm.value) / (2 * h), c.gradient_x[j], 1e-6));
        const Eigen::VectorXd hx = (cp.gradient_x - cm.gradient_x) / (2 * h);
        for (Eigen::Index k = 0; k < env.n; ++k) CHECK(close_rel(hx[k], c.hessian_xx(k, j), 1e-5));
        const Eigen::VectorXd hux = (cp.gradient_u - cm.gradient_u) / (2 * h);
        for (Eigen::Index k = 0; k < env.m; ++k) CHECK(close_rel(hux[k], c.hessian_ux(k, j), 1e-6));

        const double fp = terminal_cost(env, xp).value, fm = terminal_cost(env, xm).value;
        CHECK(close_rel((fp - fm) / (2 * h), f.gradient_x[j], 1e-6));
      }
      for (Eigen::Index j = 0; j < env.m; ++j) {
        Eigen::VectorXd up = u, um = u;
        up[j] += h;
        um[j] -= h;
        const double d = (stage_cost(env, x, up, i).value - stage_cost(env, x, um, i).value) / (2 * h);
        CHECK(close_rel(d, c.gradient_u[j], 1e-6));
      }
    }
  }
}

TEST_CASE("noisy dynamics") {
  const Environment env = make_cartpole();
  const Eigen::VectorXd z = (Eigen::VectorXd(5) << 0.1, 0.4, -0.2, 0.3, 2.0).finished();
  const Eigen::VectorXd clean = step(env, z.head(4), z.tail(1));

  const VectorBlackbox quiet = noisy_dynamics(env, NoiseModel::none());
  CHECK(quiet.eval(z) == clean);

  const double sigma = 1e-4;
  const int samples = 100000;
  const VectorBlackbox noisy = noisy_dynamics(env, NoiseModel::gaussian(sigma, 42));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < samples; ++i) mean += noisy.eval(z);
  mean /= samples;
  CHECK(noisy.eval_count() == static_cast<std::uint64_t>(samples));
  CHECK((mean - clean).cwiseAbs().maxCoeff() <= 3.0 * sigma / std::sqrt(double(samples)));

  const VectorBlackbox a = noisy_dynamics(env, NoiseModel::gaussian(sigma, 9));
  const VectorBlackbox b = noisy_dynamics(env, NoiseModel::gaussian(sigma, 9));
  for (int i = 0; i < 20; ++i) CHECK(a.eval(z) == b.eval(z));
  const VectorBlackbox c = noisy_dynamics(env, NoiseModel::gaussian(sigma, 10));
  CHECK(a.eval(z) != c.eval(z));
}

TEST_CASE("environment json round trip") {
  for (const Environment& env : {make_car_parking(), make_cartpole(), make_acrobot()}) {
    nlohmann::json j;
    to_json(j, env);
    const Environment back = environment_from_json(j);
    CHECK(back.name == env.name);
    CHECK(back.horizon == env.horizon);
    CHECK(back.dt == env.dt);
    CHECK(back.start == env.start);
    CHECK(back.goal == env.goal);
    CHECK(back.cost.Q == env.cost.Q);
    CHECK(back.cost.R == env.cost.R);
    CHECK(back.cost.Qf == env.cost.Qf);
    CHECK(back.u_lower == env.u_lower);
    CHECK(back.u_upper == env.u_upper);
  }
  const Environment short_car = environment_from_json({{"name", "car_parking"}, {"horizon", 40}});
  CHECK(short_car.horizon == 40);
  CHECK(short_car.dt == 0.03);
  CHECK_THROWS_AS(environment_from_json({{"name", "submarine"}}), ConfigError);
}
