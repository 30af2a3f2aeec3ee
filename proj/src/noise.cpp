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

#include "spinfd/noise.hpp"

#include <cmath>

#include "spinfd/errors.hpp"

namespace spinfd {

NoiseModel NoiseModel::gaussian(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw DomainError("Gaussian noise needs sigma >= 0");
  NoiseModel m;
  m.kind = NoiseKind::Gaussian;
  m.sigma = sigma;
  m.seed = seed;
  return m;
}

NoiseModel NoiseModel::uniform_ball(double radius, BallNorm norm, std::uint64_t seed) {
  if (!(radius >= 0.0)) throw DomainError("uniform noise needs radius >= 0");
  NoiseModel m;
  m.kind = NoiseKind::UniformBall;
  m.radius = radius;
  m.norm = norm;
  m.seed = seed;
  return m;
}

NoiseModel NoiseModel::adversarial(Eigen::VectorXd eta) {
  if (!eta.allFinite()) throw DomainError("adversarial noise vector must be finite");
  NoiseModel m;
  m.kind = NoiseKind::Adversarial;
  m.eta = std::move(eta);
  return m;
}

double NoiseModel::magnitude() const {
  switch (kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Gaussian: return sigma;
    case NoiseKind::UniformBall: return radius;
    case NoiseKind::Adversarial: return eta.norm();
  }
  return 0.0;
}

double NoiseSampler::scalar() {
  switch (model_.kind) {
    case NoiseKind::Gaussian: return model_.sigma * rng_.normal();
    case NoiseKind::UniformBall: return rng_.uniform(-model_.radius, model_.radius);
    default: return 0.0;
  }
}

Eigen::VectorXd NoiseSampler::vector(Eigen::Index dim) {
  switch (model_.kind) {
    case NoiseKind::Gaussian: return model_.sigma * rng_.normal_vector(dim);
    case NoiseKind::UniformBall: {
      if (model_.norm == BallNorm::Linf) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng_.uniform(-model_.radius, model_.radius);
        return v;
      }
      Eigen::VectorXd dir = rng_.normal_vector(dim);
      const double norm = dir.norm();
      if (norm == 0.0) return Eigen::VectorXd::Zero(dim);
      const double r = model_.radius * std::pow(rng_.uniform(), 1.0 / static_cast<double>(dim));
      return dir * (r / norm);
    }
    default: return Eigen::VectorXd::Zero(dim);
  }
}

void to_json(nlohmann::json& j, const NoiseModel& m) {
  switch (m.kind) {
    case NoiseKind::None: j = {{"kind", "none"}}; break;
    case NoiseKind::Gaussian: j = {{"kind", "gaussian"}, {"sigma", m.sigma}, {"seed", m.seed}}; break;
    case NoiseKind::UniformBall:
      j = {{"kind", "uniform"},
           {"radius", m.radius},
           {"norm", m.norm == BallNorm::L2 ? "l2" : "linf"},
           {"seed", m.seed}};
      break;
    case NoiseKind::Adversarial:
      j = {{"kind", "adversarial"},
           {"eta", std::vector<double>(m.eta.data(), m.eta.data() + m.eta.size())}};
      break;
  }
}

void from_json(const nlohmann::json& j, NoiseModel& m) {
  const auto kind = j.value("kind", std::string("none"));
  const auto seed = j.value("seed", std::uint64_t{0});
  if (kind == "none") {
    m = NoiseModel::none();
  } else if (kind == "gaussian") {
    m = NoiseModel::gaussian(j.at("sigma").get<double>(), seed);
  } else if (kind == "uniform") {
    const auto norm = j.value("norm", std::string("linf"));
    if (norm != "l2" && norm != "linf") throw ConfigError("uniform noise norm must be l2 or linf");
    m = NoiseModel::uniform_ball(j.at("radius").get<double>(),
                                 norm == "l2" ? BallNorm::L2 : BallNorm::Linf, seed);
  } else if (kind == "adversarial") {
    const auto eta = j.at("eta").get<std::vector<double>>();
    m = NoiseModel::adversarial(Eigen::Map<const Eigen::VectorXd>(eta.data(),
                                                                  static_cast<Eigen::Index>(eta.size())));
  } else {
    throw ConfigError("unknown noise kind '" + kind + "'");
  }
}

}  // namespace spinfd
