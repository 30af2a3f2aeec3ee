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

#include <Eigen/Dense>

#include "spinfd/errors.hpp"
#include "spinfd/spinner.hpp"

namespace spinfd {

/// In-place unnormalized Walsh-Hadamard butterfly: v <- H v for Sylvester H.
/// Length must be a power of two.
template <typename Derived>
void fwht_inplace(const Eigen::MatrixBase<Derived>& v_) {
  auto& v = const_cast<Eigen::MatrixBase<Derived>&>(v_);
  const Eigen::Index n = v.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw DomainError("fwht: length " + std::to_string(n) + " is not a power of two");
  }
  for (Eigen::Index h = 1; h < n; h *= 2) {
    for (Eigen::Index i = 0; i < n; i += 2 * h) {
      for (Eigen::Index j = i; j < i + h; ++j) {
        const auto x = v(j);
        const auto y = v(j + h);
        v(j) = x + y;
        v(j + h) = x - y;
      }
    }
  }
}

template <typename Derived>
typename Derived::PlainObject fwht(const Eigen::MatrixBase<Derived>& v) {
  typename Derived::PlainObject out = v;
  fwht_inplace(out);
  return out;
}

/// M v through the structured factorization.
Eigen::VectorXd apply(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v);

/// M^T v through the structured factorization.
Eigen::VectorXd apply_transpose(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v);

/// M^{-1} v = (1/n) M^T v. Explicit spinners are rejected with UnsupportedKind.
Eigen::VectorXd apply_inverse(const Spinner& s, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Textbook O(n^2) product; the oracle for every fast path.
Eigen::VectorXd naive_matvec(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                             const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace spinfd
