#pragma once

#include "oracles.hpp"
#include "pmod/linalg.hpp"

#include <random>

namespace testing {

inline oracle::Dense to_dense(const pmod::Matrix& a) {
  oracle::Dense out(a.rows(), std::vector<double>(a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[i][j] = a(i, j);
  return out;
}

inline pmod::Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  pmod::Matrix a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = dist(rng);
  return a;
}

inline double condition_number(const pmod::Matrix& a) {
  Eigen::JacobiSVD<pmod::Matrix> svd(a);
  const auto& s = svd.singularValues();
  return s[0] / s[s.size() - 1];
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

inline pmod::Vector vec(std::initializer_list<double> values) {
  pmod::Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace testing
