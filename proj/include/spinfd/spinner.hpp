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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace spinfd {

enum class SpinnerKind {
  HadamardDeterministic,
  HadamardRandom,
  QuadraticResidue,
  QuadraticResidueRandom,
  MultiSpinner,
  Explicit,
};

/// Deterministic factor a randomized or chained spinner is built from.
enum class BaseKind { Hadamard, QuadraticResidue };

inline constexpr Eigen::Index kDefaultDimensionCap = Eigen::Index{1} << 20;

/// Structured n x n perturbation matrix.
///
/// Every non-explicit spinner represents
///
///     M = (B D_1 B D_2 ... B D_k) / s
///
/// where B is the deterministic base (Sylvester Hadamard or the bordered
/// quadratic-residue matrix), D_i are +-1 diagonals and s = n^((k-1)/2).
/// Deterministic spinners carry no diagonals (k = 1, D_1 = I). The matrix is
/// never stored; fast_transform.hpp applies it.
///
/// Spinners are immutable after construction and cheap to copy.
class Spinner {
 public:
  SpinnerKind kind() const { return kind_; }
  BaseKind base() const { return base_; }
  Eigen::Index n() const { return n_; }
  /// Number of chained base factors (1 unless kind() == MultiSpinner).
  int chain_length() const { return chain_length_; }
  /// D factors in application order (D_1 first); empty for deterministic kinds.
  const std::vector<Eigen::VectorXd>& sign_diagonals() const { return signs_; }
  double normalization() const { return normalization_; }
  /// Prime p for quadratic-residue bases, 0 otherwise.
  std::int64_t prime() const { return prime_; }
  std::optional<std::uint64_t> seed() const { return seed_; }

  /// chi[r] = +1 if r == 0 or r is a nonzero quadratic residue mod p, else -1.
  /// Empty unless base() == QuadraticResidue.
  const std::vector<std::int8_t>& residue_character() const { return *chi_; }

  /// Dense rows; only for kind() == Explicit.
  const Eigen::MatrixXd& explicit_rows() const { return *explicit_; }

  /// Entry (i, j) of the deterministic base B.
  double base_entry(Eigen::Index i, Eigen::Index j) const;

  /// Row i of M. O(n) for k = 1, O(k n log n) for chained spinners.
  Eigen::VectorXd row(Eigen::Index i) const;

  /// Explicit n x n materialization.
  Eigen::MatrixXd dense(Eigen::Index cap = 4096) const;

  bool is_orthogonal() const { return kind_ != SpinnerKind::Explicit; }

 private:
  friend Spinner build_hadamard(int, Eigen::Index);
  friend Spinner build_quadratic_residue(std::int64_t, Eigen::Index);
  friend Spinner randomize(const Spinner&, std::uint64_t);
  friend Spinner build_multispinner(BaseKind, Eigen::Index, int, std::uint64_t, Eigen::Index);
  friend Spinner make_explicit(Eigen::MatrixXd);

  SpinnerKind kind_ = SpinnerKind::HadamardDeterministic;
  BaseKind base_ = BaseKind::Hadamard;
  Eigen::Index n_ = 1;
  int chain_length_ = 1;
  std::vector<Eigen::VectorXd> signs_;
  double normalization_ = 1.0;
  std::int64_t prime_ = 0;
  std::optional<std::uint64_t> seed_;
  std::shared_ptr<const std::vector<std::int8_t>> chi_ =
      std::make_shared<const std::vector<std::int8_t>>();
  std::shared_ptr<const Eigen::MatrixXd> explicit_;
};

struct SpinnerVerificationReport {
  bool invertible = false;
  /// min_i ||m_i||_2 / sqrt(n)
  double alpha_achieved = 0.0;
  /// 1 - max_{i<j} |m_i . m_j| / min_i ||m_i||_2 (not clamped)
  double beta_achieved = 0.0;
  double max_abs_entry = 0.0;
  double min_singular_value = 0.0;
};

/// Sylvester Walsh-Hadamard matrix of order 2^l.
Spinner build_hadamard(int l, Eigen::Index cap = kDefaultDimensionCap);

/// (Q_p^*)^T of order p + 1 for a prime p = 3 (mod 4).
Spinner build_quadratic_residue(std::int64_t p, Eigen::Index cap = kDefaultDimensionCap);

/// M D with D drawn from rng_seed. Base must be HadamardDeterministic or
/// QuadraticResidue.
Spinner randomize(const Spinner& base, std::uint64_t rng_seed);

/// Normalized chain (B D_1 ... B D_k) / n^((k-1)/2) of order n. For
/// quadratic-residue bases n must equal p + 1 for an admissible p.
Spinner build_multispinner(BaseKind base_kind, Eigen::Index n, int k, std::uint64_t rng_seed,
                           Eigen::Index cap = kDefaultDimensionCap);

/// Wrap an arbitrary square matrix (used by oracles and Gaussian baselines).
Spinner make_explicit(Eigen::MatrixXd rows);

SpinnerVerificationReport verify_balanced(const Eigen::Ref<const Eigen::MatrixXd>& rows);

/// Smallest admissible spinner order >= d for the given base.
Eigen::Index smallest_spinner_dimension(BaseKind kind, Eigen::Index d,
                                        Eigen::Index cap = kDefaultDimensionCap);

bool is_prime(std::int64_t p);
bool is_power_of_two(Eigen::Index n);

/// Q_p itself (p x p, +-1), the tournament adjacency matrix.
Eigen::MatrixXi residue_tournament_matrix(std::int64_t p);

std::string to_string(SpinnerKind kind);

/// Compact descriptor {kind, n_or_p, k, seed[, base]}; spinners are never
/// serialized densely. Explicit spinners have no descriptor.
nlohmann::json to_descriptor(const Spinner& s);
Spinner from_descriptor(const nlohmann::json& j);

}  // namespace spinfd
