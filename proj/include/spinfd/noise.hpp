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

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/rng.hpp"

namespace spinfd {

enum class NoiseKind { None, Gaussian, UniformBall, Adversarial };
enum class BallNorm { L2, Linf };

/// Corruption added to blackbox evaluations.
///
/// Gaussian and UniformBall perturb every function value (each output
/// coordinate for vector blackboxes). Adversarial leaves values untouched and
/// adds eta[i] to the i-th finite-difference measurement instead.
struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  double radius = 0.0;
  BallNorm norm = BallNorm::Linf;
  Eigen::VectorXd eta;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma, std::uint64_t seed);
  static NoiseModel uniform_ball(double radius, BallNorm norm, std::uint64_t seed);
  static NoiseModel adversarial(Eigen::VectorXd eta);

  NoiseModel reseeded(std::uint64_t new_seed) const {
    NoiseModel m = *this;
    m.seed = new_seed;
    return m;
  }
  bool perturbs_values() const {
    return kind == NoiseKind::Gaussian || kind == NoiseKind::UniformBall;
  }
  /// Scale reported in experiment output: sigma, radius, or ||eta||_2.
  double magnitude() const;
};

/// Stateful draw stream for one NoiseModel.
class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseModel& model) : model_(model), rng_(model.seed) {}

  double scalar();
  Eigen::VectorXd vector(Eigen::Index dim);

 private:
  NoiseModel model_;
  Rng rng_;
};

void to_json(nlohmann::json& j, const NoiseModel& m);
void from_json(const nlohmann::json& j, NoiseModel& m);

}  // namespace spinfd
