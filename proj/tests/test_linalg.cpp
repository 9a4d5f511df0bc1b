#include "helpers.hpp"
#include "pmod/errors.hpp"
#include "pmod/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pmod;
using testing::rel;

TEST_SUITE("linalg") {
  TEST_CASE("generalized norm of small matrices") {
    CHECK(generalized_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-15));

    Matrix frame(3, 2);
    frame << 1, 0, 0, 1, 0, 0;
    CHECK(generalized_norm(frame) == doctest::Approx(1.0).epsilon(1e-15));

    Matrix column(2, 1);
    column << 3, 4;
    CHECK(generalized_norm(column) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(generalized_norm(column.transpose()) == doctest::Approx(5.0).epsilon(1e-15));

    Matrix diag = Vector(testing::vec({2, 3})).asDiagonal();
    CHECK(generalized_norm(diag) == doctest::Approx(6.0).epsilon(1e-15));

    CHECK(generalized_norm(Matrix::Zero(4, 2)) == 0.0);
    CHECK(generalized_norm(Matrix::Zero(3, 3)) == 0.0);
  }

  TEST_CASE("generalized norm matches brute-force minor enumeration up to 6x4") {
    std::mt19937_64 rng(7);
    for (int rows = 1; rows <= 6; ++rows) {
      for (int cols = 1; cols <= 4; ++cols) {
        for (int trial = 0; trial < 20; ++trial) {
          const Matrix a = testing::random_matrix(rng, rows, cols);
          const double expected = oracle::minor_sum_norm(testing::to_dense(a));
          CHECK(rel(generalized_norm(a), expected) <= 1e-10);
        }
      }
    }
  }

  TEST_CASE("generalized norm is invariant under orthogonal left factors") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix a = testing::random_matrix(rng, 5, 3);
      const Matrix q = Eigen::HouseholderQR<Matrix>(testing::random_matrix(rng, 5, 5)).householderQ();
      CHECK(rel(generalized_norm(q * a), generalized_norm(a)) <= 1e-12);
    }
  }

  TEST_CASE("companion block examples") {
    Matrix a = Vector(testing::vec({2, 3, 5})).asDiagonal();
    Matrix expected(2, 3);
    expected << 0.5, 0, 0, 0, 1.0 / 3.0, 0;
    CHECK((companion_block(a, 1) - expected).norm() <= 1e-15);

    CHECK((companion_block(Matrix::Identity(4, 4), 2) - Matrix::Identity(4, 4).topRows(2)).norm() == 0.0);

    const double theta = 0.7;
    Matrix rotation(2, 2);
    rotation << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const Matrix b = companion_block(rotation, 1);
    CHECK(b(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-14));
    CHECK(b(0, 1) == doctest::Approx(std::sin(theta)).epsilon(1e-14));
  }

  TEST_CASE("companion block annihilates the trailing columns") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 5;
      const int m = 1 + trial % (n - 1);
      const Matrix a = testing::random_matrix(rng, n, n);
      if (testing::condition_number(a) > 1e6) continue;
      Matrix target = Matrix::Zero(n - m, n);
      target.leftCols(n - m).setIdentity();
      CHECK((companion_block(a, m) * a - target).norm() <= 1e-9);
    }
  }

  TEST_CASE("companion block errors") {
    CHECK_THROWS_AS(companion_block(Matrix::Zero(3, 3), 1), SingularMatrix);
    Matrix nearly = Matrix::Identity(3, 3);
    nearly(2, 2) = 1e-15;
    CHECK_THROWS_AS(companion_block(nearly, 1), SingularMatrix);
    CHECK_THROWS_AS(companion_block(Matrix::Identity(3, 2), 1), InvalidArgument);
    CHECK_THROWS_AS(companion_block(Matrix::Identity(3, 3), 0), InvalidArgument);
    CHECK_THROWS_AS(companion_block(Matrix::Identity(3, 3), 3), InvalidArgument);
    CHECK_THROWS_AS(verify_factorization(Matrix::Zero(2, 2), 1), SingularMatrix);
  }

  TEST_CASE("factorization examples") {
    const Matrix a = Vector(testing::vec({2, 3, 5})).asDiagonal();
    const auto check = verify_factorization(a, 1);
    CHECK(check.lhs == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(check.rhs == doctest::Approx(5.0).epsilon(1e-14));
    for (int n = 2; n <= 6; ++n) {
      for (int m = 1; m < n; ++m) {
        const auto id = verify_factorization(Matrix::Identity(n, n), m);
        CHECK(id.lhs == doctest::Approx(1.0));
        CHECK(id.rhs == doctest::Approx(1.0));
      }
    }
  }

  TEST_CASE("factorization holds on random well-conditioned matrices") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(2, 6);
    int tested = 0;
    while (tested < 1000) {
      const int n = size(rng);
      const Matrix a = testing::random_matrix(rng, n, n);
      if (testing::condition_number(a) > 1e6) continue;
      const int m = std::uniform_int_distribution<int>(1, n - 1)(rng);
      const auto check = verify_factorization(a, m);
      // Brute-force route for both sides.
      const double lhs = oracle::minor_sum_norm(testing::to_dense(a.rightCols(m)));
      const double rhs = std::abs(oracle::det(testing::to_dense(a))) *
                         oracle::minor_sum_norm(testing::to_dense(Matrix(a.inverse().topRows(n - m))));
      REQUIRE(rel(check.lhs, check.rhs) <= 1e-9);
      REQUIRE(rel(check.lhs, lhs) <= 1e-9);
      REQUIRE(rel(check.rhs, rhs) <= 1e-9);
      ++tested;
    }
  }

  TEST_CASE("two-by-two special case: |w| = |det A| |v|") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix a = testing::random_matrix(rng, 2, 2);
      if (testing::condition_number(a) > 1e6) continue;
      const Vector v = companion_block(a, 1).transpose();
      const Vector w = a.col(1);
      CHECK(rel(w.norm(), std::abs(a.determinant()) * v.norm()) <= 1e-10);
    }
  }
}
