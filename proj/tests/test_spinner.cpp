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

#include <cmath>

#include "spinfd/errors.hpp"
#include "spinfd/fast_transform.hpp"
#include "spinfd/rng.hpp"
#include "spinfd/spinner.hpp"

using namespace spinfd;

namespace {

double gram_error(const Eigen::MatrixXd& M) {
  const Eigen::Index n = M.rows();
  return (M * M.transpose() - double(n) * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd kron_hadamard(int l) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Ones(1, 1);
  for (int i = 0; i < l; ++i) {
    Eigen::MatrixXd N(2 * H.rows(), 2 * H.cols());
    N << H, H, H, -H;
    H = N;
  }
  return H;
}

}  // namespace

TEST_CASE("hadamard base cases") {
  CHECK(build_hadamard(0).dense() == Eigen::MatrixXd::Ones(1, 1));
  Eigen::MatrixXd h2(2, 2);
  h2 << 1, 1, 1, -1;
  CHECK(build_hadamard(1).dense() == h2);
  const Eigen::MatrixXd h4 = build_hadamard(2).dense();
  CHECK(h4.rowwise().sum() == Eigen::Vector4d(4, 0, 0, 0));
  CHECK(gram_error(h4) == 0.0);
  CHECK(h4 == kron_hadamard(2));
}

TEST_CASE("hadamard matches the kronecker recursion") {
  for (int l = 1; l <= 8; ++l) CHECK(build_hadamard(l).dense() == kron_hadamard(l));
}

TEST_CASE("hadamard capacity") {
  CHECK_THROWS_AS(build_hadamard(12, 1024), CapacityError);
}

TEST_CASE("quadratic residue p = 3 by hand") {
  // Bordered Q_3*; the spinner is its transpose.
  Eigen::MatrixXd qstar(4, 4);
  qstar << -1, -1, -1, -1,
           -1,  1,  1, -1,
           -1, -1,  1,  1,
           -1,  1, -1,  1;
  const Eigen::MatrixXd m = build_quadratic_residue(3).dense();
  CHECK(m == qstar.transpose());
  CHECK(gram_error(m) == 0.0);
}

TEST_CASE("quadratic residue p = 7") {
  const Spinner s = build_quadratic_residue(7);
  CHECK(s.n() == 8);
  const auto& chi = s.residue_character();
  REQUIRE(chi.size() == 7);
  for (int r = 1; r < 7; ++r) CHECK((chi[r] == 1) == (r == 1 || r == 2 || r == 4));
  CHECK(gram_error(s.dense()) < 1e-12);
}

TEST_CASE("quadratic residue rejects bad primes") {
  CHECK_THROWS_AS(build_quadratic_residue(4), DomainError);
  CHECK_THROWS_AS(build_quadratic_residue(5), DomainError);
  CHECK_THROWS_AS(build_quadratic_residue(9), DomainError);
}

TEST_CASE("tournament columns have inner product -1") {
  for (int p : {3, 7, 11, 19, 23}) {
    const Eigen::MatrixXi q = residue_tournament_matrix(p);
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) CHECK(q.col(i).dot(q.col(j)) == -1);
  }
}

TEST_CASE("every spinner family is orthogonal") {
  for (int l = 1; l <= 8; ++l) {
    const Spinner h = build_hadamard(l);
    CHECK(gram_error(h.dense()) <= 1e-10);
    CHECK(gram_error(randomize(h, 7 + l).dense()) <= 1e-10);
    for (int k = 1; k <= 3; ++k)
      CHECK(gram_error(build_multispinner(BaseKind::Hadamard, h.n(), k, 11 * l + k).dense()) <= 1e-10);
  }
  for (int p : {3, 7, 11, 19, 23}) {
    const Spinner q = build_quadratic_residue(p);
    CHECK(gram_error(q.dense()) <= 1e-10);
    CHECK(gram_error(randomize(q, p).dense()) <= 1e-10);
    for (int k = 1; k <= 3; ++k)
      CHECK(gram_error(build_multispinner(BaseKind::QuadraticResidue, p + 1, k, p + k).dense()) <= 1e-10);
  }
}

TEST_CASE("randomize keeps the balance") {
  const Spinner h = build_hadamard(4);
  const auto base = verify_balanced(h.dense());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = verify_balanced(randomize(h, seed).dense());
    CHECK(r.alpha_achieved == base.alpha_achieved);
    CHECK(r.beta_achieved == base.beta_achieved);
    CHECK(r.alpha_achieved == 1.0);
    CHECK(r.beta_achieved == 1.0);
  }
}

TEST_CASE("randomize with all-plus signs is the base") {
  const Spinner h = build_hadamard(3);
  const Spinner r = randomize(h, 3);
  const Eigen::VectorXd d = r.sign_diagonals().at(0);
  for (Eigen::Index i = 0; i < d.size(); ++i) CHECK(std::abs(d[i]) == 1.0);
  // M D with the drawn signs undone must give back M.
  CHECK(r.dense() * d.asDiagonal() == h.dense());
}

TEST_CASE("spinners are deterministic per seed") {
  CHECK(randomize(build_hadamard(5), 42).sign_diagonals() == randomize(build_hadamard(5), 42).sign_diagonals());
  CHECK(build_multispinner(BaseKind::Hadamard, 16, 3, 9).dense() ==
        build_multispinner(BaseKind::Hadamard, 16, 3, 9).dense());
  CHECK(randomize(build_hadamard(5), 42).sign_diagonals() != randomize(build_hadamard(5), 43).sign_diagonals());
}

TEST_CASE("multispinner with one factor is randomize") {
  const Spinner a = build_multispinner(BaseKind::Hadamard, 8, 1, 5);
  const Spinner b = randomize(build_hadamard(3), 5);
  CHECK(a.dense() == b.dense());
  CHECK_THROWS_AS(build_multispinner(BaseKind::Hadamard, 8, 0, 5), DomainError);
}

TEST_CASE("two-factor multispinner entries can leave [-1, 1]") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = verify_balanced(build_multispinner(BaseKind::Hadamard, 4, 2, seed).dense());
    CHECK(r.alpha_achieved == doctest::Approx(1.0));
    worst = std::max(worst, r.max_abs_entry);
  }
  CHECK(worst > 1.0);
}

TEST_CASE("verify_balanced oracles") {
  const auto id = verify_balanced(Eigen::MatrixXd::Identity(16, 16));
  CHECK(id.alpha_achieved == doctest::Approx(0.25));
  CHECK(id.beta_achieved == 1.0);
  CHECK(id.invertible);

  const auto h = verify_balanced(kron_hadamard(2));
  CHECK(h.alpha_achieved == 1.0);
  CHECK(h.beta_achieved == 1.0);
  CHECK(h.min_singular_value == doctest::Approx(2.0));

  // B_1 = [[-1, 1], [1, 1]] differs from Sylvester by signs only.
  Eigen::MatrixXd b1(2, 2);
  b1 << -1, 1, 1, 1;
  Eigen::MatrixXd b2(4, 4);
  b2 << -b1, b1, b1, b1;
  for (const Eigen::MatrixXd& b : {b1, b2}) {
    const auto r = verify_balanced(b);
    CHECK(r.alpha_achieved == 1.0);
    CHECK(r.beta_achieved == 1.0);
  }

  Eigen::MatrixXd dup = kron_hadamard(2);
  dup.row(3) = dup.row(1);
  CHECK_FALSE(verify_balanced(dup).invertible);
}

TEST_CASE("smallest spinner dimension") {
  CHECK(smallest_spinner_dimension(BaseKind::Hadamard, 7) == 8);
  CHECK(smallest_spinner_dimension(BaseKind::Hadamard, 8) == 8);
  CHECK(smallest_spinner_dimension(BaseKind::Hadamard, 1) == 1);
  CHECK(smallest_spinner_dimension(BaseKind::QuadraticResidue, 7) == 8);
  CHECK(smallest_spinner_dimension(BaseKind::QuadraticResidue, 9) == 12);
  CHECK(smallest_spinner_dimension(BaseKind::QuadraticResidue, 13) == 20);
  CHECK_THROWS_AS(smallest_spinner_dimension(BaseKind::Hadamard, 2000, 1024), CapacityError);
}

TEST_CASE("descriptor round trip") {
  for (const Spinner& s : {build_hadamard(4), randomize(build_hadamard(4), 3), build_quadratic_residue(11),
                           randomize(build_quadratic_residue(7), 8),
                           build_multispinner(BaseKind::Hadamard, 16, 2, 5)}) {
    const nlohmann::json d = to_descriptor(s);
    CHECK(from_descriptor(d).dense() == s.dense());
    CHECK(to_descriptor(from_descriptor(d)) == d);
  }
  CHECK_THROWS(to_descriptor(make_explicit(Eigen::MatrixXd::Identity(3, 3))));
}

TEST_CASE("rng is the standard mt19937_64 stream") {
  Rng rng(5489);
  CHECK(rng.next_u64() == 14514284786278117030ULL);
  Rng a(1), b(1);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}
