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
#include <random>

#include <Eigen/Dense>

namespace spinfd {

/// Portable pseudo-random source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not portable across library
/// implementations, so every conversion from bits to numbers is done here:
///   - uniform():  top 53 bits scaled by 2^-53, in [0, 1)
///   - sign():     +1 if the top bit is clear, -1 otherwise
///   - normal():   Box-Muller on two uniforms, caching the second variate
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double sign() { return (engine_() >> 63) != 0 ? -1.0 : 1.0; }
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::VectorXd sign_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Child seed for a (parent, a, b) triple, e.g. (solve seed, iteration, timestep).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0);

}  // namespace spinfd
