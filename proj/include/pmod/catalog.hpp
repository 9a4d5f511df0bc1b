#pragma once

#include "pmod/family.hpp"
#include "pmod/quadrature.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pmod {

using ParameterMap = std::map<std::string, double>;

/// A built-in family with its closed-form (or directly evaluated) modulus.
struct CatalogEntry {
  std::string name;
  ParametrizedFamily family;
  std::optional<Submersion> submersion;
  /// p -> mod_p of the family.
  std::function<double(double)> expected_modulus;
  ParameterMap parameters;

  /// Transverse family f(U, y) and its expected modulus as a function of the
  /// exponent applied to it (the conjugate q in the reciprocal identity).
  std::optional<ParametrizedFamily> transverse;
  std::function<double(double)> transverse_expected;
};

/// Identity parametrization of U x V: surfaces {x} x V.
CatalogEntry make_parallel(const BoxDomain& u, const BoxDomain& v);

/// (x, y) -> (x + B y, y) over U x V, B of shape dim(U) x dim(V). In the
/// shear's own naming (sheared coordinate of dimension k, surfaces of
/// dimension n - k) this is the k x (n - k) matrix.
CatalogEntry make_shear(const BoxDomain& u, const BoxDomain& v, const Matrix& b);

enum class PolarMode {
  Radial,    // x = angle in (0, 2π), y = radius in (r0, r1): radial segments
  Circular,  // x = radius in (r0, r1), y = angle in (0, 2π): circles
};

CatalogEntry make_polar_annulus(double r0, double r1, PolarMode mode);

/// A C^1 diffeomorphism of R^n with optional analytic differential and inverse.
struct Diffeomorphism {
  int n;
  std::function<Vector(const Vector&)> map;
  std::optional<std::function<Matrix(const Vector&)>> jacobian;
  std::optional<std::function<Vector(const Vector&)>> inverse;

  Matrix differential(const Vector& z) const;
  static Diffeomorphism linear(const Matrix& a);
};

/// The family outer ∘ u. Its expected modulus is evaluated directly from the
/// chain rule I = (J_outer ∘ u) J_u with the given quadrature. A level-set
/// submersion is attached when `base_submersion` and an inverse of `outer`
/// are both available.
CatalogEntry make_condenser(const ParametrizedFamily& u, const Diffeomorphism& outer,
                            const std::optional<Submersion>& base_submersion = std::nullopt,
                            const QuadratureScheme& expected_quad = {});

/// Affine (p,q)-map (x, y) -> (a x, b y) with a = b^{p-1}, so that
/// |J^y|^p = |J^x|^q = |J|.
CatalogEntry make_pq_map(double p, double b = 1.0, const BoxDomain& u = BoxDomain::unit(1),
                         const BoxDomain& v = BoxDomain::unit(1));

/// max(| |J^y|^p - |J| |, | |J^x|^q - |J| |) / |J| at (x, y).
double pq_map_defect(const ParametrizedFamily& fam, double p, const Vector& x, const Vector& y);

/// Names accepted by make_entry.
std::vector<std::string> catalog_names();

/// Builds an entry from a name and a flat parameter map:
///   boxes      u<i>_lo, u<i>_hi, v<i>_lo, v<i>_hi   (default: unit intervals)
///   shear      b<i>_<j> (row-major), or b for a 1 x 1 matrix
///   annulus-*  r0, r1
///   pq-map     b (scale of the surface direction)
///   condenser-diag  d<i>, diagonal of a linear map applied to the parallel family
/// `p` is used only by families that depend on it (pq-map).
CatalogEntry make_entry(const std::string& name, const ParameterMap& parameters, double p);

}  // namespace pmod
