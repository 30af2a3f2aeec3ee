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

#include "spinfd/objectives.hpp"

#include <cmath>
#include <limits>

#include "spinfd/errors.hpp"
#include "spinfd/gait.hpp"
#include "spinfd/rng.hpp"

namespace spinfd {

namespace {

Eigen::MatrixXd random_rotation(int d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

void check_dim(int d) {
  if (d < 1) throw DomainError("objective dimension must be positive");
}

}  // namespace

Objective make_linear_objective(int d, std::uint64_t seed) {
  check_dim(d);
  Rng rng(seed);
  const Eigen::VectorXd a = rng.normal_vector(d);
  const double b = rng.normal();
  Objective o{"linear",
              Blackbox(d, [a, b](const Eigen::VectorXd& x) { return a.dot(x) + b; }, true),
              [a](const Eigen::VectorXd&) { return a; },
              BoxBounds::unbounded(d),
              Eigen::VectorXd(),
              -std::numeric_limits<double>::infinity()};
  return o;
}

Objective make_quadratic_objective(int d, std::uint64_t seed, double cond) {
  check_dim(d);
  Rng rng(seed);
  const Eigen::MatrixXd Q = random_rotation(d, rng);
  Eigen::VectorXd eig(d);
  for (int i = 0; i < d; ++i) eig[i] = d == 1 ? 1.0 : std::pow(cond, double(i) / (d - 1));
  const Eigen::MatrixXd A = Q * eig.asDiagonal() * Q.transpose();
  Eigen::VectorXd c(d);
  for (int i = 0; i < d; ++i) c[i] = rng.uniform(-0.5, 0.5);
  return {"quadratic",
          Blackbox(d, [A, c](const Eigen::VectorXd& x) { return 0.5 * (x - c).dot(A * (x - c)); }, true),
          [A, c](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * (x - c); },
          BoxBounds::uniform(d, -1.0, 1.0),
          c,
          0.0};
}

Objective make_outside_quadratic_objective(int d, std::uint64_t seed) {
  check_dim(d);
  Rng rng(seed);
  Eigen::VectorXd w(d), c(d);
  for (int i = 0; i < d; ++i) {
    w[i] = rng.uniform(1.0, 5.0);
    // Alternate coordinates inside and outside [-1, 1].
    c[i] = (i % 2 == 0) ? rng.uniform(1.5, 3.0) * (rng.sign()) : rng.uniform(-0.5, 0.5);
  }
  const BoxBounds box = BoxBounds::uniform(d, -1.0, 1.0);
  const Eigen::VectorXd xs = box.project(c);
  const double fs = 0.5 * (xs - c).cwiseAbs2().dot(w);
  return {"outside_quadratic",
          Blackbox(d, [w, c](const Eigen::VectorXd& x) { return 0.5 * (x - c).cwiseAbs2().dot(w); }, true),
          [w, c](const Eigen::VectorXd& x) -> Eigen::VectorXd { return w.cwiseProduct(x - c); },
          box,
          xs,
          fs};
}

Objective make_rosenbrock_objective(int d) {
  if (d < 2) throw DomainError("Rosenbrock needs at least two coordinates");
  auto f = [](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
      s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
    return s;
  };
  auto g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double t = x[i + 1] - x[i] * x[i];
      r[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
      r[i + 1] += 200.0 * t;
    }
    return r;
  };
  return {"rosenbrock", Blackbox(d, f, true), g, BoxBounds::uniform(d, -2.0, 2.0),
          Eigen::VectorXd::Ones(d), 0.0};
}

Objective make_two_well_objective(int d, std::uint64_t seed) {
  check_dim(d);
  Rng rng(seed);
  Eigen::VectorXd c1(d), c2(d);
  for (int i = 0; i < d; ++i) c1[i] = rng.uniform(0.2, 0.8);
  // Second well sits well away from the first.
  for (int i = 0; i < d; ++i) c2[i] = c1[i] < 0.5 ? c1[i] + 0.35 : c1[i] - 0.35;
  const double w1 = 1.0, w2 = 0.7, s1 = 0.25, s2 = 0.25;
  auto f = [=](const Eigen::VectorXd& x) {
    return -w1 * std::exp(-(x - c1).squaredNorm() / (2 * s1 * s1)) -
           w2 * std::exp(-(x - c2).squaredNorm() / (2 * s2 * s2));
  };
  auto g = [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return w1 * std::exp(-(x - c1).squaredNorm() / (2 * s1 * s1)) * (x - c1) / (s1 * s1) +
           w2 * std::exp(-(x - c2).squaredNorm() / (2 * s2 * s2)) * (x - c2) / (s2 * s2);
  };
  // The wells barely overlap, so the global minimizer is c1 up to a tiny shift;
  // polish it with Newton-free fixed-point steps on the gradient.
  Eigen::VectorXd xs = c1;
  for (int k = 0; k < 200; ++k) xs -= 0.5 * s1 * s1 * g(xs);
  return {"two_well", Blackbox(d, f, true), g, BoxBounds::uniform(d, 0.0, 1.0), xs, f(xs)};
}

Objective make_gait_objective(int steps) {
  auto f = [steps](const Eigen::VectorXd& x) {
    return -reward_running(surrogate_episode(GaitParams::from_vector(x), steps), RunningCoeffs{});
  };
  return {"gait_surrogate", Blackbox(7, f, true), nullptr, gait_bounds(), Eigen::VectorXd(),
          std::numeric_limits<double>::quiet_NaN()};
}

Objective objective_from_json(const nlohmann::json& j, std::uint64_t seed) {
  const std::string name = j.value("name", std::string("quadratic"));
  const int d = j.value("dim", 8);
  if (name == "linear") return make_linear_objective(d, seed);
  if (name == "quadratic") return make_quadratic_objective(d, seed, j.value("cond", 10.0));
  if (name == "outside_quadratic") return make_outside_quadratic_objective(d, seed);
  if (name == "rosenbrock") return make_rosenbrock_objective(d);
  if (name == "two_well") return make_two_well_objective(d, seed);
  if (name == "gait_surrogate") return make_gait_objective(j.value("steps", 400));
  throw ConfigError("unknown objective '" + name + "'");
}

}  // namespace spinfd
