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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinfd {

/// Requested dimension exceeds the configured cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedKind : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Blackbox evaluation failed; carries the index of the offending direction
/// (or -1 for the base point).
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(long index, const std::string& what)
      : std::runtime_error("evaluation " + std::to_string(index) + ": " + what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

/// Q_uu + reg*I failed its Cholesky factorization at a timestep.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t t)
      : std::runtime_error("Q_uu not positive definite at t=" + std::to_string(t)), timestep_(t) {}
  std::size_t timestep() const { return timestep_; }

 private:
  std::size_t timestep_;
};

/// Rollout produced a non-finite state.
class RolloutDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinfd
