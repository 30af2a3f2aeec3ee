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

#include "spinfd/spinner.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "spinfd/errors.hpp"
#include "spinfd/fast_transform.hpp"
#include "spinfd/rng.hpp"

namespace spinfd {
namespace {

std::vector<std::int8_t> residue_character_table(std::int64_t p) {
  std::vector<std::int8_t> chi(static_cast<std::size_t>(p), -1);
  chi[0] = 1;
  for (std::int64_t a = 1; a < p; ++a) chi[static_cast<std::size_t>((a * a) % p)] = 1;
  return chi;
}

void check_residue_prime(std::int64_t p) {
  if (!is_prime(p) || p % 4 != 3) {
    throw DomainError("quadratic residue spinner needs a prime p = 3 (mod 4), got " +
                      std::to_string(p));
  }
}

}  // namespace

bool is_prime(std::int64_t p) {
  if (p < 2) return false;
  if (p % 2 == 0) return p == 2;
  for (std::int64_t q = 3; q * q <= p; q += 2) {
    if (p % q == 0) return false;
  }
  return true;
}

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

double Spinner::base_entry(Eigen::Index i, Eigen::Index j) const {
  if (kind_ == SpinnerKind::Explicit) return (*explicit_)(i, j);
  if (base_ == BaseKind::Hadamard) {
    return (std::popcount(static_cast<std::uint64_t>(i & j)) & 1) != 0 ? -1.0 : 1.0;
  }
  if (i == 0 || j == 0) return -1.0;
  Eigen::Index r = (i - j) % prime_;
  if (r < 0) r += prime_;
  return (*chi_)[static_cast<std::size_t>(r)];
}

Eigen::VectorXd Spinner::row(Eigen::Index i) const {
  if (i < 0 || i >= n_) throw DimensionMismatch("row index out of range");
  if (kind_ == SpinnerKind::Explicit) return explicit_->row(i).transpose();
  if (chain_length_ == 1) {
    Eigen::VectorXd r(n_);
    for (Eigen::Index j = 0; j < n_; ++j) r[j] = base_entry(i, j);
    if (!signs_.empty()) r.array() *= signs_.front().array();
    return r;
  }
  return apply_transpose(*this, Eigen::VectorXd::Unit(n_, i));
}

Eigen::MatrixXd Spinner::dense(Eigen::Index cap) const {
  if (n_ > cap) {
    throw CapacityError("dense materialization of order " + std::to_string(n_) +
                        " exceeds cap " + std::to_string(cap));
  }
  if (kind_ == SpinnerKind::Explicit) return *explicit_;
  Eigen::MatrixXd m(n_, n_);
  if (chain_length_ == 1) {
    for (Eigen::Index i = 0; i < n_; ++i) m.row(i) = row(i).transpose();
  } else {
    for (Eigen::Index j = 0; j < n_; ++j) m.col(j) = apply(*this, Eigen::VectorXd::Unit(n_, j));
  }
  return m;
}

Spinner build_hadamard(int l, Eigen::Index cap) {
  if (l < 0) throw DomainError("build_hadamard: negative order exponent");
  if (l >= 62 || (Eigen::Index{1} << l) > cap) {
    throw CapacityError("build_hadamard: 2^" + std::to_string(l) + " exceeds dimension cap " +
                        std::to_string(cap));
  }
  Spinner s;
  s.kind_ = SpinnerKind::HadamardDeterministic;
  s.base_ = BaseKind::Hadamard;
  s.n_ = Eigen::Index{1} << l;
  return s;
}

Spinner build_quadratic_residue(std::int64_t p, Eigen::Index cap) {
  check_residue_prime(p);
  if (p + 1 > cap) {
    throw CapacityError("build_quadratic_residue: order " + std::to_string(p + 1) +
                        " exceeds dimension cap " + std::to_string(cap));
  }
  Spinner s;
  s.kind_ = SpinnerKind::QuadraticResidue;
  s.base_ = BaseKind::QuadraticResidue;
  s.n_ = p + 1;
  s.prime_ = p;
  s.chi_ = std::make_shared<const std::vector<std::int8_t>>(residue_character_table(p));
  return s;
}

Spinner randomize(const Spinner& base, std::uint64_t rng_seed) {
  if (base.kind_ != SpinnerKind::HadamardDeterministic &&
      base.kind_ != SpinnerKind::QuadraticResidue) {
    throw DomainError("randomize: base must be a deterministic Hadamard or quadratic residue spinner");
  }
  Spinner s = base;
  s.kind_ = base.kind_ == SpinnerKind::HadamardDeterministic ? SpinnerKind::HadamardRandom
                                                              : SpinnerKind::QuadraticResidueRandom;
  Rng rng(rng_seed);
  s.signs_ = {rng.sign_vector(base.n_)};
  s.seed_ = rng_seed;
  return s;
}

Spinner build_multispinner(BaseKind base_kind, Eigen::Index n, int k, std::uint64_t rng_seed,
                           Eigen::Index cap) {
  if (k < 1) throw DomainError("build_multispinner: chain length must be >= 1");
  Spinner base;
  if (base_kind == BaseKind::Hadamard) {
    if (!is_power_of_two(n)) throw DomainError("build_multispinner: Hadamard order must be 2^l");
    base = build_hadamard(std::countr_zero(static_cast<std::uint64_t>(n)), cap);
  } else {
    base = build_quadratic_residue(static_cast<std::int64_t>(n) - 1, cap);
  }
  if (k == 1) return randomize(base, rng_seed);

  Spinner s = base;
  s.kind_ = SpinnerKind::MultiSpinner;
  s.chain_length_ = k;
  Rng rng(rng_seed);
  s.signs_.clear();
  for (int i = 0; i < k; ++i) s.signs_.push_back(rng.sign_vector(n));
  s.normalization_ = std::pow(static_cast<double>(n), 0.5 * (k - 1));
  s.seed_ = rng_seed;
  return s;
}

Spinner make_explicit(Eigen::MatrixXd rows) {
  if (rows.rows() != rows.cols() || rows.rows() == 0) {
    throw DimensionMismatch("make_explicit: matrix must be square and nonempty");
  }
  Spinner s;
  s.kind_ = SpinnerKind::Explicit;
  s.n_ = rows.rows();
  s.explicit_ = std::make_shared<const Eigen::MatrixXd>(std::move(rows));
  return s;
}

SpinnerVerificationReport verify_balanced(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() != rows.cols()) throw DimensionMismatch("verify_balanced: matrix must be square");
  const Eigen::Index n = rows.rows();
  SpinnerVerificationReport r;
  if (n == 0) return r;

  const Eigen::MatrixXd gram = rows * rows.transpose();
  const double min_norm = gram.diagonal().minCoeff() <= 0.0
                              ? 0.0
                              : std::sqrt(gram.diagonal().minCoeff());
  double max_off = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) max_off = std::max(max_off, std::abs(gram(i, j)));
  }
  r.alpha_achieved = min_norm / std::sqrt(static_cast<double>(n));
  if (min_norm > 0.0) {
    r.beta_achieved = 1.0 - max_off / min_norm;
  } else {
    r.beta_achieved = max_off == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  r.max_abs_entry = rows.cwiseAbs().maxCoeff();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(rows);
  const auto& sv = svd.singularValues();
  r.min_singular_value = sv.minCoeff();
  const double max_sv = sv.maxCoeff();
  r.invertible = max_sv > 0.0 && r.min_singular_value > 1e-10 * max_sv;
  return r;
}

Eigen::Index smallest_spinner_dimension(BaseKind kind, Eigen::Index d, Eigen::Index cap) {
  if (d < 1) throw DomainError("smallest_spinner_dimension: d must be >= 1");
  Eigen::Index n = 0;
  if (kind == BaseKind::Hadamard) {
    n = static_cast<Eigen::Index>(std::bit_ceil(static_cast<std::uint64_t>(d)));
  } else {
    std::int64_t p = std::max<std::int64_t>(3, d - 1);
    while (p % 4 != 3 || !is_prime(p)) {
      ++p;
      if (p + 1 > cap) break;
    }
    n = p + 1;
  }
  if (n > cap) {
    throw CapacityError("no admissible spinner order >= " + std::to_string(d) +
                        " within cap " + std::to_string(cap));
  }
  return n;
}

Eigen::MatrixXi residue_tournament_matrix(std::int64_t p) {
  check_residue_prime(p);
  const auto chi = residue_character_table(p);
  Eigen::MatrixXi q(p, p);
  for (std::int64_t i = 0; i < p; ++i) {
    for (std::int64_t j = 0; j < p; ++j) {
      q(i, j) = chi[static_cast<std::size_t>(((i - j) % p + p) % p)];
    }
  }
  return q;
}

std::string to_string(SpinnerKind kind) {
  switch (kind) {
    case SpinnerKind::HadamardDeterministic: return "hadamard";
    case SpinnerKind::HadamardRandom: return "hadamard_random";
    case SpinnerKind::QuadraticResidue: return "quadratic_residue";
    case SpinnerKind::QuadraticResidueRandom: return "quadratic_residue_random";
    case SpinnerKind::MultiSpinner: return "multispinner";
    case SpinnerKind::Explicit: return "explicit";
  }
  return "unknown";
}

nlohmann::json to_descriptor(const Spinner& s) {
  if (s.kind() == SpinnerKind::Explicit) {
    throw UnsupportedKind("explicit spinners have no compact descriptor");
  }
  nlohmann::json j;
  j["kind"] = to_string(s.kind());
  j["n_or_p"] = s.base() == BaseKind::Hadamard ? static_cast<std::int64_t>(s.n()) : s.prime();
  j["k"] = s.chain_length();
  j["seed"] = s.seed() ? nlohmann::json(*s.seed()) : nlohmann::json(nullptr);
  if (s.kind() == SpinnerKind::MultiSpinner) {
    j["base"] = s.base() == BaseKind::Hadamard ? "hadamard" : "quadratic_residue";
  }
  return j;
}

Spinner from_descriptor(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const auto n_or_p = j.at("n_or_p").get<std::int64_t>();
  const int k = j.value("k", 1);
  const auto seed_of = [&]() -> std::uint64_t {
    if (!j.contains("seed") || j["seed"].is_null()) {
      throw DomainError("descriptor of kind '" + kind + "' needs a seed");
    }
    return j["seed"].get<std::uint64_t>();
  };
  const auto hadamard = [&]() {
    if (!is_power_of_two(n_or_p)) throw DomainError("Hadamard order must be a power of two");
    return build_hadamard(std::countr_zero(static_cast<std::uint64_t>(n_or_p)));
  };

  if (kind == "hadamard") return hadamard();
  if (kind == "hadamard_random") return randomize(hadamard(), seed_of());
  if (kind == "quadratic_residue") return build_quadratic_residue(n_or_p);
  if (kind == "quadratic_residue_random") return randomize(build_quadratic_residue(n_or_p), seed_of());
  if (kind == "multispinner") {
    const auto base = j.value("base", std::string("hadamard"));
    if (base == "hadamard") return build_multispinner(BaseKind::Hadamard, n_or_p, k, seed_of());
    if (base == "quadratic_residue") {
      return build_multispinner(BaseKind::QuadraticResidue, n_or_p + 1, k, seed_of());
    }
    throw DomainError("unknown multispinner base '" + base + "'");
  }
  throw DomainError("unknown spinner kind '" + kind + "'");
}

}  // namespace spinfd
