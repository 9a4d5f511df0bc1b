#include "pmod/family.hpp"

#include "detail.hpp"
#include "pmod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmod {

namespace {

void require_finite(const Vector& value, const char* what) {
  if (!value.allFinite()) throw EvaluationFailure(std::string(what) + " returned a non-finite value");
}

}  // namespace

double fd_step(double c) {
  static const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
  return cbrt_eps * std::max(1.0, std::abs(c));
}

ParametrizedFamily::ParametrizedFamily(BoxDomain u, BoxDomain v, Map map, std::optional<JacobianFn> jacobian,
                                       std::optional<InverseFn> inverse)
    : u_(std::move(u)),
      v_(std::move(v)),
      map_(std::move(map)),
      jacobian_(std::move(jacobian)),
      inverse_(std::move(inverse)) {
  if (!map_) throw InvalidArgument("family map is empty");
}

Vector ParametrizedFamily::evaluate(const Vector& x, const Vector& y) const {
  if (x.size() != u_.dim() || y.size() != v_.dim())
    throw InvalidArgument("family evaluated with wrong parameter dimensions");
  Vector z = map_(x, y);
  if (z.size() != n()) throw InvalidArgument("family map returned a vector of the wrong length");
  require_finite(z, "family map");
  return z;
}

Matrix ParametrizedFamily::jacobian_full(const Vector& x, const Vector& y) const {
  if (!jacobian_) return jacobian_fd(x, y);
  Matrix jac = (*jacobian_)(x, y);
  if (jac.rows() != n() || jac.cols() != n()) throw InvalidArgument("analytic Jacobian has the wrong shape");
  if (!jac.allFinite()) throw EvaluationFailure("analytic Jacobian is non-finite at " + detail::format_point(x));
  return jac;
}

Matrix ParametrizedFamily::jacobian_fd(const Vector& x, const Vector& y) const {
  const int k = u_.dim();
  const int dim = n();
  Vector w(dim);
  w << x, y;
  Vector lower(dim), upper(dim);
  lower << u_.lower(), v_.lower();
  upper << u_.upper(), v_.upper();

  Matrix jac(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const double h = fd_step(w[j]);
    // Keep the stencil inside the open box.
    Vector center = w;
    center[j] = std::clamp(w[j], lower[j] + h, upper[j] - h);
    Vector plus = center, minus = center;
    plus[j] += h;
    minus[j] -= h;
    const Vector fp = evaluate(plus.head(k), plus.tail(dim - k));
    const Vector fm = evaluate(minus.head(k), minus.tail(dim - k));
    jac.col(j) = (fp - fm) / (plus[j] - minus[j]);
  }
  return jac;
}

Matrix ParametrizedFamily::jacobian_partial_x(const Vector& x, const Vector& y) const {
  return jacobian_full(x, y).leftCols(u_.dim());
}

Matrix ParametrizedFamily::jacobian_partial_y(const Vector& x, const Vector& y) const {
  return jacobian_full(x, y).rightCols(v_.dim());
}

ParametrizedFamily ParametrizedFamily::without_analytic_jacobian() const {
  return ParametrizedFamily(u_, v_, map_, std::nullopt, inverse_);
}

ParametrizedFamily ParametrizedFamily::transverse() const {
  const int k = u_.dim();
  const int m = v_.dim();
  Map map = [f = map_](const Vector& a, const Vector& b) { return f(b, a); };
  std::optional<JacobianFn> jacobian;
  if (jacobian_) {
    jacobian = [jf = *jacobian_, k, m](const Vector& a, const Vector& b) {
      const Matrix full = jf(b, a);
      Matrix swapped(full.rows(), full.cols());
      swapped << full.rightCols(m), full.leftCols(k);
      return swapped;
    };
  }
  std::optional<InverseFn> inverse;
  if (inverse_) {
    inverse = [inv = *inverse_](const Vector& z) {
      auto [x, y] = inv(z);
      return std::pair<Vector, Vector>{std::move(y), std::move(x)};
    };
  }
  return ParametrizedFamily(v_, u_, std::move(map), std::move(jacobian), std::move(inverse));
}

Submersion::Submersion(int n, int k, Map map, std::optional<JacobianFn> jacobian)
    : n_(n), k_(k), map_(std::move(map)), jacobian_(std::move(jacobian)) {
  if (k_ < 1 || k_ >= n_) throw InvalidArgument("submersion target dimension must lie in [1, n-1]");
  if (!map_) throw InvalidArgument("submersion map is empty");
}

Vector Submersion::evaluate(const Vector& z) const {
  Vector value = map_(z);
  if (value.size() != k_) throw InvalidArgument("submersion returned a vector of the wrong length");
  require_finite(value, "submersion");
  return value;
}

Matrix Submersion::jacobian(const Vector& z) const {
  if (jacobian_) {
    Matrix jac = (*jacobian_)(z);
    if (jac.rows() != k_ || jac.cols() != n_) throw InvalidArgument("submersion Jacobian has the wrong shape");
    if (!jac.allFinite()) throw EvaluationFailure("submersion Jacobian is non-finite at " + detail::format_point(z));
    return jac;
  }
  Matrix jac(k_, n_);
  for (int j = 0; j < n_; ++j) {
    const double h = fd_step(z[j]);
    Vector plus = z, minus = z;
    plus[j] += h;
    minus[j] -= h;
    jac.col(j) = (evaluate(plus) - evaluate(minus)) / (plus[j] - minus[j]);
  }
  return jac;
}

Submersion Submersion::without_analytic_jacobian() const { return Submersion(n_, k_, map_, std::nullopt); }

double key_relation_residual(const ParametrizedFamily& fam, const Submersion& submersion, const Vector& x,
                             const Vector& y) {
  if (submersion.n() != fam.n() || submersion.k() != fam.n() - fam.m())
    throw InvalidArgument("submersion dimensions do not match the family");
  const Matrix jac = fam.jacobian_full(x, y);
  const double surface = generalized_norm(jac.rightCols(fam.m()));
  if (!(surface >= kDegenerateSurfaceNorm))
    throw DegenerateJacobian("|J^y_f| vanishes at x=" + detail::format_point(x) + ", y=" + detail::format_point(y));
  const double full = generalized_norm(jac);
  const double level = generalized_norm(submersion.jacobian(fam.evaluate(x, y)));
  return std::abs(surface - full * level) / surface;
}

}  // namespace pmod
