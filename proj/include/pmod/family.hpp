#pragma once

#include "pmod/linalg.hpp"
#include "pmod/quadrature.hpp"

#include <functional>
#include <optional>

namespace pmod {

/// A C^1 diffeomorphism f: U x V -> R^n whose slices f(x, V) form a family of
/// m-dimensional surfaces. U has dimension n-m, V has dimension m.
///
/// Jacobian columns are ordered (x-block | y-block), so the last m columns are
/// the differential of y -> f(x, y).
class ParametrizedFamily {
 public:
  using Map = std::function<Vector(const Vector& x, const Vector& y)>;
  using JacobianFn = std::function<Matrix(const Vector& x, const Vector& y)>;
  /// z -> (x, y) with f(x, y) = z.
  using InverseFn = std::function<std::pair<Vector, Vector>(const Vector& z)>;

  ParametrizedFamily(BoxDomain u, BoxDomain v, Map map, std::optional<JacobianFn> jacobian = std::nullopt,
                     std::optional<InverseFn> inverse = std::nullopt);

  int n() const { return u_.dim() + v_.dim(); }
  int m() const { return v_.dim(); }
  const BoxDomain& u() const { return u_; }
  const BoxDomain& v() const { return v_; }
  bool has_analytic_jacobian() const { return jacobian_.has_value(); }
  const std::optional<InverseFn>& inverse() const { return inverse_; }

  /// f(x, y); throws EvaluationFailure on non-finite output.
  Vector evaluate(const Vector& x, const Vector& y) const;

  /// Df at (x, y): analytic when supplied, otherwise central differences.
  Matrix jacobian_full(const Vector& x, const Vector& y) const;
  /// Central-difference Df regardless of whether an analytic one exists.
  Matrix jacobian_fd(const Vector& x, const Vector& y) const;
  Matrix jacobian_partial_x(const Vector& x, const Vector& y) const;
  Matrix jacobian_partial_y(const Vector& x, const Vector& y) const;

  /// Same family with the analytic Jacobian dropped (forces finite differences).
  ParametrizedFamily without_analytic_jacobian() const;

  /// The transverse family (y, x) -> f(x, y): its surfaces are f(U, y).
  ParametrizedFamily transverse() const;

 private:
  BoxDomain u_;
  BoxDomain v_;
  Map map_;
  std::optional<JacobianFn> jacobian_;
  std::optional<InverseFn> inverse_;
};

/// A submersion F: R^n -> R^k whose level sets are the surfaces of a family.
class Submersion {
 public:
  using Map = std::function<Vector(const Vector& z)>;
  using JacobianFn = std::function<Matrix(const Vector& z)>;

  Submersion(int n, int k, Map map, std::optional<JacobianFn> jacobian = std::nullopt);

  int n() const { return n_; }
  int k() const { return k_; }
  bool has_analytic_jacobian() const { return jacobian_.has_value(); }

  Vector evaluate(const Vector& z) const;
  /// k x n differential; central differences when no analytic form is given.
  Matrix jacobian(const Vector& z) const;
  Submersion without_analytic_jacobian() const;

 private:
  int n_;
  int k_;
  Map map_;
  std::optional<JacobianFn> jacobian_;
};

/// Relative residual of |J^y_f| = |J_f| (|J_F| o f) at (x, y).
/// Throws DegenerateJacobian when |J^y_f| is below kDegenerateSurfaceNorm.
double key_relation_residual(const ParametrizedFamily& fam, const Submersion& submersion, const Vector& x,
                             const Vector& y);

inline constexpr double kDegenerateSurfaceNorm = 1e-300;

/// Central-difference step for coordinate c.
double fd_step(double c);

}  // namespace pmod
