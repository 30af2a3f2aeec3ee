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

#include <doctest.h>

#include <chrono>
#include <cmath>

#include "spinfd/errors.hpp"
#include "spinfd/fast_transform.hpp"
#include "spinfd/rng.hpp"
#include "spinfd/spinner.hpp"

using namespace spinfd;

namespace {

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace

TEST_CASE("fwht oracles") {
  Eigen::VectorXd one(1);
  one << 2.5;
  CHECK(fwht(one) == one);
  CHECK(fwht(Eigen::Vector4d(1, 0, 0, 0)) == Eigen::Vector4d(1, 1, 1, 1));
  CHECK(fwht(Eigen::Vector4d(1, 2, 3, 4)) == Eigen::Vector4d(10, -2, -4, 0));
  Eigen::VectorXd bad(3);
  CHECK_THROWS_AS(fwht(bad), DomainError);
}

TEST_CASE("fwht matches the dense product") {
  Rng rng(1);
  for (int l = 1; l <= 10; ++l) {
    const Eigen::MatrixXd H = build_hadamard(l).dense();
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd v = rng.normal_vector(H.rows());
      CHECK(rel_err(fwht(v), naive_matvec(H, v)) <= 1e-10);
    }
  }
}

TEST_CASE("parseval") {
  Rng rng(2);
  for (int l = 1; l <= 10; ++l) {
    const Eigen::VectorXd v = rng.normal_vector(Eigen::Index{1} << l);
    const double scaled = fwht(v).norm() / std::sqrt(double(v.size()));
    CHECK(std::abs(scaled - v.norm()) <= 1e-10 * v.norm());
  }
}

TEST_CASE("apply oracles") {
  const Spinner h = build_hadamard(2);
  CHECK(apply(h, Eigen::Vector4d(1, 0, 0, 0)) == Eigen::Vector4d(1, 1, 1, 1));
  CHECK(apply_inverse(h, Eigen::Vector4d(1, 1, 1, 1)) == Eigen::Vector4d(1, 0, 0, 0));
  CHECK(apply_inverse(h, Eigen::Vector4d::Zero()) == Eigen::Vector4d::Zero());
  const Spinner q = build_quadratic_residue(3);
  CHECK(apply(q, Eigen::Vector4d(1, 0, 0, 0)) == Eigen::Vector4d(-1, -1, -1, -1));
  Eigen::Vector2d ones(1, 1);
  CHECK(naive_matvec(build_hadamard(1).dense(), ones) == Eigen::Vector2d(2, 0));
  CHECK(naive_matvec(Eigen::MatrixXd::Identity(2, 2), ones) == ones);
  CHECK_THROWS_AS(apply(h, Eigen::VectorXd::Zero(3)), DimensionMismatch);
  CHECK_THROWS_AS(apply_inverse(make_explicit(Eigen::MatrixXd::Identity(2, 2)), ones), UnsupportedKind);
}

TEST_CASE("all-minus signs negate the hadamard product") {
  // Seeds are opaque, so find one whose 2-entry diagonal is all minus.
  const Spinner h = build_hadamard(1);
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const Spinner r = randomize(h, seed);
    if (r.sign_diagonals()[0] != -Eigen::Vector2d::Ones()) continue;
    const Eigen::Vector2d v(0.3, -1.7);
    CHECK(apply(r, v) == -apply(h, v));
    return;
  }
  FAIL("no all-minus diagonal in 64 seeds");
}

TEST_CASE("fast paths match the dense oracle") {
  Rng rng(3);
  std::vector<Spinner> spinners;
  for (int l = 1; l <= 10; ++l) {
    spinners.push_back(build_hadamard(l));
    spinners.push_back(randomize(build_hadamard(l), l));
    spinners.push_back(build_multispinner(BaseKind::Hadamard, Eigen::Index{1} << l, 2, l));
  }
  for (int p : {3, 7, 11, 19, 23, 31}) {
    spinners.push_back(build_quadratic_residue(p));
    spinners.push_back(randomize(build_quadratic_residue(p), p));
    spinners.push_back(build_multispinner(BaseKind::QuadraticResidue, p + 1, 3, p));
  }
  for (const Spinner& s : spinners) {
    const Eigen::MatrixXd M = s.dense();
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd v = rng.normal_vector(s.n());
      CHECK(rel_err(apply(s, v), naive_matvec(M, v)) <= 1e-10);
      CHECK(rel_err(apply_transpose(s, v), naive_matvec(M.transpose(), v)) <= 1e-10);
      CHECK(rel_err(apply_inverse(s, apply(s, v)), v) <= 1e-10);
    }
  }
}

TEST_CASE("multispinner round trip") {
  Rng rng(4);
  const Spinner s = build_multispinner(BaseKind::Hadamard, 64, 2, 17);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd v = rng.normal_vector(64);
    CHECK(rel_err(apply(s, apply_inverse(s, v)), v) <= 1e-10);
  }
}

TEST_CASE("multispinner is k sign-flip and fwht passes") {
  const Spinner s = build_multispinner(BaseKind::Hadamard, 32, 3, 8);
  Rng rng(5);
  const Eigen::VectorXd v = rng.normal_vector(32);
  // M = (H D_1 H D_2 H D_3) / s applies D_3 first.
  Eigen::VectorXd w = v;
  const auto& d = s.sign_diagonals();
  for (auto it = d.rbegin(); it != d.rend(); ++it) {
    w = it->cwiseProduct(w);
    fwht_inplace(w);
  }
  w /= s.normalization();
  CHECK(rel_err(apply(s, v), w) <= 1e-12);
  CHECK(s.normalization() == doctest::Approx(32.0));
}

TEST_CASE("fwht scales like n log n") {
  auto time_it = [](auto&& fn, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
  };
  Rng rng(6);
  Eigen::VectorXd small = rng.normal_vector(1 << 10), big = rng.normal_vector(1 << 16);
  double sink = 0.0;
  const double t_small = time_it([&] { sink += fwht(small)[0]; }, 2000);
  const double t_big = time_it([&] { sink += fwht(big)[0]; }, 40);
  const double nlogn_ratio = (65536.0 * 16) / (1024.0 * 10);
  CHECK(t_big / t_small <= 1.5 * nlogn_ratio);

  const Eigen::MatrixXd m_small = Eigen::MatrixXd::Ones(256, 256), m_big = Eigen::MatrixXd::Ones(1024, 1024);
  const Eigen::VectorXd v_small = rng.normal_vector(256), v_big = rng.normal_vector(1024);
  const double n_small = time_it([&] { sink += naive_matvec(m_small, v_small)[0]; }, 200);
  const double n_big = time_it([&] { sink += naive_matvec(m_big, v_big)[0]; }, 20);
  CHECK(n_big / n_small >= 0.5 * 16.0);
  CHECK(std::isfinite(sink));
}
