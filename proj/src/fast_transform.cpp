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

#include "spinfd/fast_transform.hpp"

#include <string>

namespace spinfd {
namespace {

void check_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* op) {
  if (!v.allFinite()) throw DomainError(std::string(op) + ": non-finite input");
}

void check_dim(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v, const char* op) {
  if (v.size() != s.n()) {
    throw DimensionMismatch(std::string(op) + ": spinner order " + std::to_string(s.n()) +
                            " vs vector length " + std::to_string(v.size()));
  }
}

// Bordered quadratic-residue base B = (Q_p^*)^T:
//   B[0][*] = B[*][0] = -1,  B[i][j] = chi((i - j) mod p) for i, j >= 1.
// O(n^2) time, O(n) space.
void residue_base_apply(const std::vector<std::int8_t>& chi, Eigen::VectorXd& v, bool transpose) {
  const auto p = static_cast<Eigen::Index>(chi.size());
  Eigen::VectorXd out(p + 1);
  out[0] = -v.sum();
  for (Eigen::Index i = 1; i <= p; ++i) {
    double acc = -v[0];
    for (Eigen::Index j = 1; j <= p; ++j) {
      Eigen::Index r = transpose ? (j - i) : (i - j);
      if (r < 0) r += p;
      acc += chi[static_cast<std::size_t>(r)] * v[j];
    }
    out[i] = acc;
  }
  v.swap(out);
}

void base_apply(const Spinner& s, Eigen::VectorXd& v, bool transpose) {
  if (s.base() == BaseKind::Hadamard) {
    fwht_inplace(v);  // H is symmetric
  } else {
    residue_base_apply(s.residue_character(), v, transpose);
  }
}

}  // namespace

Eigen::VectorXd apply(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v) {
  check_dim(s, v, "apply");
  check_finite(v, "apply");
  if (s.kind() == SpinnerKind::Explicit) return s.explicit_rows() * v;

  Eigen::VectorXd w = v;
  const auto& signs = s.sign_diagonals();
  if (signs.empty()) {
    base_apply(s, w, false);
  } else {
    for (auto it = signs.rbegin(); it != signs.rend(); ++it) {
      w.array() *= it->array();
      base_apply(s, w, false);
    }
  }
  if (s.normalization() != 1.0) w /= s.normalization();
  return w;
}

Eigen::VectorXd apply_transpose(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v) {
  check_dim(s, v, "apply_transpose");
  check_finite(v, "apply_transpose");
  if (s.kind() == SpinnerKind::Explicit) return s.explicit_rows().transpose() * v;

  Eigen::VectorXd w = v;
  const auto& signs = s.sign_diagonals();
  if (signs.empty()) {
    base_apply(s, w, true);
  } else {
    for (const auto& d : signs) {
      base_apply(s, w, true);
      w.array() *= d.array();
    }
  }
  if (s.normalization() != 1.0) w /= s.normalization();
  return w;
}

Eigen::VectorXd apply_inverse(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (s.kind() == SpinnerKind::Explicit) {
    throw UnsupportedKind("apply_inverse: explicit spinners need a dense solve");
  }
  Eigen::VectorXd w = apply_transpose(s, v);
  w /= static_cast<double>(s.n());
  return w;
}

Eigen::VectorXd naive_matvec(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                             const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (rows.cols() != v.size()) {
    throw DimensionMismatch("naive_matvec: " + std::to_string(rows.cols()) + " columns vs length " +
                            std::to_string(v.size()));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) acc += rows(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

}  // namespace spinfd
