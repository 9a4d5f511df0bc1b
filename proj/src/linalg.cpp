#include "pmod/linalg.hpp"

#include "pmod/errors.hpp"

#include <cmath>
#include <string>

namespace pmod {

namespace {

double tall_norm(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix& r = qr.matrixQR();
  double prod = 1.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) prod *= r(i, i);
  return std::abs(prod);
}

void require_square_split(const Matrix& a, int m) {
  if (a.rows() != a.cols())
    throw InvalidArgument("expected a square matrix, got " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
  if (m < 1 || m > a.rows() - 1)
    throw InvalidArgument("split m=" + std::to_string(m) + " outside [1, n-1] for n=" +
                          std::to_string(a.rows()));
}

}  // namespace

double generalized_norm(const Matrix& a) {
  if (a.size() == 0) throw InvalidArgument("generalized_norm of an empty matrix");
  if (a.rows() >= a.cols()) return tall_norm(a);
  return tall_norm(a.transpose());
}

Matrix companion_block(const Matrix& a, int m) {
  require_square_split(a, m);
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond >= kSingularRcond))
    throw SingularMatrix("matrix is numerically singular (rcond=" + std::to_string(rcond) + ")");
  const Eigen::Index k = a.rows() - m;
  return lu.inverse().topRows(k);
}

FactorizationCheck verify_factorization(const Matrix& a, int m) {
  const Matrix b = companion_block(a, m);
  return {generalized_norm(a.rightCols(m)), generalized_norm(a) * generalized_norm(b)};
}

}  // namespace pmod
