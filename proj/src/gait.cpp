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

#include "spinfd/gait.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spinfd/errors.hpp"

namespace spinfd {

namespace {
constexpr double kTwoPi = 6.283185307179586;

void check_metrics(const EpisodeMetrics& m) {
  if (!std::isfinite(m.d_forward) || !std::isfinite(m.E) || !std::isfinite(m.drift) ||
      !std::isfinite(m.shake) || !std::isfinite(m.r))
    throw DomainError("episode metrics must be finite");
  if (m.E < 0) throw DomainError("energy must be nonnegative");
}
}  // namespace

Eigen::VectorXd GaitParams::to_vector() const {
  Eigen::VectorXd x(7);
  x << A_v, A_s, v, phi_v, phi_leg2, phi_leg3, phi_leg4;
  return x;
}

GaitParams GaitParams::from_vector(const Eigen::VectorXd& x) {
  if (x.size() != 7) throw DimensionMismatch("gait parameter vector must have 7 entries");
  return {x[0], x[1], x[2], x[3], x[4], x[5], x[6]};
}

BoxBounds gait_bounds() {
  Eigen::VectorXd lo(7), hi(7);
  lo << 0, 0, 0.04, 0, 0, 0, 0;
  hi << 0.9, 0.9, 0.08, kTwoPi, kTwoPi, kTwoPi, kTwoPi;
  return {lo, hi};
}

std::array<LegSignal, 4> leg_signals(const GaitParams& p, double t) {
  const double phase[4] = {0.0, p.phi_leg2, p.phi_leg3, p.phi_leg4};
  std::array<LegSignal, 4> out{};
  for (int l = 0; l < 4; ++l) {
    const double a = t * p.v + phase[l];
    out[l] = {p.A_s * std::sin(a), p.A_v * std::sin(a + p.phi_v)};
  }
  return out;
}

std::array<double, 2> motor_angles(const LegSignal& leg) {
  return {leg.swing + leg.extension + kMotorOffset, -leg.swing + leg.extension + kMotorOffset};
}

std::array<double, 8> gait_signals(const GaitParams& p, double t) {
  const auto legs = leg_signals(p, t);
  std::array<double, 8> out{};
  for (int l = 0; l < 4; ++l) {
    const auto m = motor_angles(legs[l]);
    out[2 * l] = m[0];
    out[2 * l + 1] = m[1];
  }
  return out;
}

double reward_running(const EpisodeMetrics& m, const RunningCoeffs& c) {
  check_metrics(m);
  return c.alpha * m.d_forward - c.beta * m.E + c.gamma * (-m.drift) + c.xi * (-m.shake);
}

double reward_turning(const EpisodeMetrics& m, const TurningCoeffs& c) {
  check_metrics(m);
  return c.rho * m.r - c.beta * m.E + c.xi * (-m.shake);
}

EpisodeMetrics surrogate_episode(const GaitParams& p, int steps) {
  if (steps < 1) throw DomainError("episode needs at least one step");
  // A leg is in stance while its extension is positive; stance legs drag the
  // body opposite to their swing velocity. Legs 1,3 sit on the left.
  const double side[4] = {1.0, -1.0, 1.0, -1.0};
  const double gain = 0.05, dt = 0.01;
  EpisodeMetrics m;
  double x = 0.0, y = 0.0, yaw = 0.0, zmin = 0.0, zmax = 0.0;
  auto prev_motor = gait_signals(p, 0.0);
  auto prev_legs = leg_signals(p, 0.0);
  for (int k = 1; k <= steps; ++k) {
    const auto legs = leg_signals(p, k);
    const auto motor = gait_signals(p, k);
    double push = 0.0, lateral = 0.0, z = 0.0;
    int stance = 0;
    for (int l = 0; l < 4; ++l) {
      const double ds = legs[l].swing - prev_legs[l].swing;
      if (legs[l].extension > 0) {
        push -= ds;
        lateral += side[l] * ds;
        ++stance;
      }
      z += legs[l].extension;
    }
    if (stance) {
      push /= stance;
      lateral /= stance;
    }
    yaw += 0.5 * lateral;
    x += gain * push * std::cos(yaw);
    y += gain * push * std::sin(yaw);
    z *= 0.25 * gain;
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
    for (int i = 0; i < 8; ++i) m.E += 0.01 * std::pow(motor[i] - prev_motor[i], 2) / dt;
    prev_motor = motor;
    prev_legs = legs;
  }
  m.d_forward = x;
  m.drift = std::abs(y);
  m.shake = zmax - zmin;
  m.r = yaw / (steps * dt);
  return m;
}

void to_json(nlohmann::json& j, const GaitParams& p) {
  j = {{"A_v", p.A_v},         {"A_s", p.A_s},           {"v", p.v},
       {"phi_v", p.phi_v},     {"phi_leg2", p.phi_leg2}, {"phi_leg3", p.phi_leg3},
       {"phi_leg4", p.phi_leg4}};
}

void from_json(const nlohmann::json& j, GaitParams& p) {
  GaitParams d;
  p.A_v = j.value("A_v", d.A_v);
  p.A_s = j.value("A_s", d.A_s);
  p.v = j.value("v", d.v);
  p.phi_v = j.value("phi_v", d.phi_v);
  p.phi_leg2 = j.value("phi_leg2", d.phi_leg2);
  p.phi_leg3 = j.value("phi_leg3", d.phi_leg3);
  p.phi_leg4 = j.value("phi_leg4", d.phi_leg4);
  if (!gait_bounds().contains(p.to_vector())) throw ConfigError("gait parameters outside their bounds");
}

void to_json(nlohmann::json& j, const RunningCoeffs& c) {
  j = {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"xi", c.xi}};
}

void from_json(const nlohmann::json& j, RunningCoeffs& c) {
  RunningCoeffs d;
  c.alpha = j.value("alpha", d.alpha);
  c.beta = j.value("beta", d.beta);
  c.gamma = j.value("gamma", d.gamma);
  c.xi = j.value("xi", d.xi);
}

}  // namespace spinfd
