#pragma once

#include <Eigen/Dense>

#include <utility>

namespace pmod {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Reciprocal condition estimates below this are treated as singular.
inline constexpr double kSingularRcond = 1e-12;

/// Generalized Jacobian norm |A|: the square root of the sum of squared
/// maximal minors. Equals |det A| for square A and sqrt(det(A^T A)) for tall
/// A; wide matrices use sqrt(det(A A^T)). Computed from the R factor of a
/// Householder QR, so the condition number is never squared.
double generalized_norm(const Matrix& a);

/// The first n-m rows of A^{-1}, i.e. the unique B with B A = (I_{n-m} 0).
/// Throws SingularMatrix when the reciprocal condition estimate of A is
/// below kSingularRcond.
Matrix companion_block(const Matrix& a, int m);

struct FactorizationCheck {
  double lhs;  // |A'|, A' = last m columns of A
  double rhs;  // |A| * |B|, B = companion_block(A, m)
};

/// Evaluates both sides of |A'| = |A| |B|.
FactorizationCheck verify_factorization(const Matrix& a, int m);

}  // namespace pmod
