#include "pmod/catalog.hpp"

#include "pmod/errors.hpp"
#include "pmod/modulus.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pmod {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ∫_{r0}^{r1} t^{a-1} dt, continuous through a = 0.
double power_integral(double a, double r0, double r1) {
  const double log_ratio = std::log(r1 / r0);
  const double s = a * log_ratio;
  if (std::abs(s) < 1e-12) return std::pow(r0, a) * log_ratio * (1.0 + 0.5 * s);
  return std::pow(r0, a) * std::expm1(s) / a;
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

std::function<double(double)> parallel_formula(double vol_u, double vol_v) {
  return [vol_u, vol_v](double p) {
    conjugate_exponent(p);
    return vol_u * std::pow(vol_v, 1.0 - p);
  };
}

}  // namespace

CatalogEntry make_parallel(const BoxDomain& u, const BoxDomain& v) {
  const int k = u.dim();
  const int n = u.dim() + v.dim();
  ParametrizedFamily family(
      u, v, [](const Vector& x, const Vector& y) { return concat(x, y); },
      [n](const Vector&, const Vector&) { return Matrix(Matrix::Identity(n, n)); },
      [k, n](const Vector& z) { return std::pair<Vector, Vector>{z.head(k), z.tail(n - k)}; });
  Submersion submersion(
      n, k, [k](const Vector& z) { return Vector(z.head(k)); },
      [k, n](const Vector&) { return Matrix(Matrix::Identity(k, n)); });

  CatalogEntry entry{"parallel", family, submersion, parallel_formula(u.volume(), v.volume()), {}, std::nullopt, {}};
  entry.transverse = family.transverse();
  entry.transverse_expected = parallel_formula(v.volume(), u.volume());
  for (int i = 0; i < u.dim(); ++i) {
    entry.parameters["u" + std::to_string(i) + "_lo"] = u.lower()[i];
    entry.parameters["u" + std::to_string(i) + "_hi"] = u.upper()[i];
  }
  for (int i = 0; i < v.dim(); ++i) {
    entry.parameters["v" + std::to_string(i) + "_lo"] = v.lower()[i];
    entry.parameters["v" + std::to_string(i) + "_hi"] = v.upper()[i];
  }
  return entry;
}

CatalogEntry make_shear(const BoxDomain& u, const BoxDomain& v, const Matrix& b) {
  const int k = u.dim();
  const int m = v.dim();
  const int n = k + m;
  if (b.rows() != k || b.cols() != m)
    throw InvalidArgument("shear matrix must have shape " + std::to_string(k) + "x" + std::to_string(m));
  if (!b.allFinite()) throw InvalidArgument("shear matrix has non-finite entries");

  Matrix linear = Matrix::Identity(n, n);
  linear.topRightCorner(k, m) = b;
  ParametrizedFamily family(
      u, v, [b](const Vector& x, const Vector& y) { return concat(x + b * y, y); },
      [linear](const Vector&, const Vector&) { return linear; },
      [b, k, m](const Vector& z) {
        Vector y = z.tail(m);
        return std::pair<Vector, Vector>{z.head(k) - b * y, y};
      });
  Matrix level(k, n);
  level << Matrix::Identity(k, k), -b;
  Submersion submersion(
      n, k, [b, k, m](const Vector& z) { return Vector(z.head(k) - b * z.tail(m)); },
      [level](const Vector&) { return level; });

  const double det = (b.transpose() * b + Matrix::Identity(m, m)).determinant();
  const double vol_u = u.volume(), vol_v = v.volume();
  auto expected = [vol_u, vol_v, det](double p) {
    conjugate_exponent(p);
    return vol_u * std::pow(vol_v, 1.0 - p) * std::pow(det, -0.5 * p);
  };
  CatalogEntry entry{"shear", family, submersion, expected, make_parallel(u, v).parameters, std::nullopt, {}};
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < m; ++j) entry.parameters["b" + std::to_string(i) + "_" + std::to_string(j)] = b(i, j);
  return entry;
}

CatalogEntry make_polar_annulus(double r0, double r1, PolarMode mode) {
  if (!(r0 > 0.0) || !(r1 > r0) || !std::isfinite(r1))
    throw InvalidArgument("annulus radii must satisfy 0 < r0 < r1");
  const BoxDomain angle = BoxDomain::interval(0.0, kTwoPi);
  const BoxDomain radius = BoxDomain::interval(r0, r1);

  auto polar = [](double r, double theta) {
    Vector z(2);
    z << r * std::cos(theta), r * std::sin(theta);
    return z;
  };
  auto polar_inverse = [](const Vector& z) {
    double theta = std::atan2(z[1], z[0]);
    if (theta < 0.0) theta += kTwoPi;
    return std::pair<double, double>{z.norm(), theta};
  };

  if (mode == PolarMode::Radial) {
    ParametrizedFamily family(
        angle, radius, [polar](const Vector& x, const Vector& y) { return polar(y[0], x[0]); },
        [](const Vector& x, const Vector& y) {
          const double th = x[0], t = y[0];
          Matrix jac(2, 2);
          jac << -t * std::sin(th), std::cos(th), t * std::cos(th), std::sin(th);
          return jac;
        },
        [polar_inverse](const Vector& z) {
          const auto [r, theta] = polar_inverse(z);
          return std::pair<Vector, Vector>{Vector::Constant(1, theta), Vector::Constant(1, r)};
        });
    Submersion submersion(
        2, 1, [polar_inverse](const Vector& z) { return Vector::Constant(1, polar_inverse(z).second); },
        [](const Vector& z) {
          Matrix jac(1, 2);
          jac << -z[1], z[0];
          return Matrix(jac / z.squaredNorm());
        });
    auto expected = [r0, r1](double p) {
      const double q = conjugate_exponent(p);
      return kTwoPi * std::pow(power_integral(2.0 - q, r0, r1), 1.0 - p);
    };
    return {"annulus-radial", family, submersion, expected, {{"r0", r0}, {"r1", r1}}, std::nullopt, {}};
  }

  ParametrizedFamily family(
      radius, angle, [polar](const Vector& x, const Vector& y) { return polar(x[0], y[0]); },
      [](const Vector& x, const Vector& y) {
        const double r = x[0], th = y[0];
        Matrix jac(2, 2);
        jac << std::cos(th), -r * std::sin(th), std::sin(th), r * std::cos(th);
        return jac;
      },
      [polar_inverse](const Vector& z) {
        const auto [r, theta] = polar_inverse(z);
        return std::pair<Vector, Vector>{Vector::Constant(1, r), Vector::Constant(1, theta)};
      });
  Submersion submersion(
      2, 1, [](const Vector& z) { return Vector::Constant(1, z.norm()); },
      [](const Vector& z) { return Matrix(z.transpose() / z.norm()); });
  auto expected = [r0, r1](double p) {
    conjugate_exponent(p);
    return std::pow(kTwoPi, 1.0 - p) * power_integral(2.0 - p, r0, r1);
  };
  return {"annulus-circular", family, submersion, expected, {{"r0", r0}, {"r1", r1}}, std::nullopt, {}};
}

Matrix Diffeomorphism::differential(const Vector& z) const {
  if (jacobian) return (*jacobian)(z);
  Matrix jac(n, n);
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(z[j]);
    Vector plus = z, minus = z;
    plus[j] += h;
    minus[j] -= h;
    jac.col(j) = (map(plus) - map(minus)) / (plus[j] - minus[j]);
  }
  return jac;
}

Diffeomorphism Diffeomorphism::linear(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("linear diffeomorphism needs a square matrix");
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!(lu.rcond() >= kSingularRcond)) throw SingularMatrix("linear diffeomorphism is singular");
  const Matrix inv = lu.inverse();
  return {static_cast<int>(a.rows()), [a](const Vector& z) { return Vector(a * z); },
          [a](const Vector&) { return a; }, [inv](const Vector& z) { return Vector(inv * z); }};
}

CatalogEntry make_condenser(const ParametrizedFamily& u, const Diffeomorphism& outer,
                            const std::optional<Submersion>& base_submersion, const QuadratureScheme& expected_quad) {
  if (outer.n != u.n()) throw InvalidArgument("outer diffeomorphism dimension does not match the family");
  const int k = u.u().dim();
  const int m = u.m();

  ParametrizedFamily::Map map = [u, outer](const Vector& x, const Vector& y) { return outer.map(u.evaluate(x, y)); };
  ParametrizedFamily::JacobianFn jacobian = [u, outer](const Vector& x, const Vector& y) {
    return Matrix(outer.differential(u.evaluate(x, y)) * u.jacobian_full(x, y));
  };
  std::optional<ParametrizedFamily::InverseFn> inverse;
  if (outer.inverse && u.inverse()) {
    inverse = [u, outer](const Vector& z) { return (*u.inverse())((*outer.inverse)(z)); };
  }
  ParametrizedFamily family(u.u(), u.v(), map, jacobian, inverse);

  std::optional<Submersion> submersion;
  if (base_submersion && outer.inverse) {
    submersion = Submersion(
        u.n(), k, [base = *base_submersion, outer](const Vector& z) { return base.evaluate((*outer.inverse)(z)); },
        [base = *base_submersion, outer](const Vector& z) {
          const Vector w = (*outer.inverse)(z);
          // D(F ∘ g^{-1}) = DF(w) (Dg(w))^{-1}
          return Matrix(outer.differential(w).transpose().fullPivLu().solve(base.jacobian(w).transpose()).transpose());
        });
  }

  // Chain rule: |I_f| = |det J_outer(u)| |J_u|, |I^y_f| = |J_outer(u) J^y_u|.
  auto expected = [u, outer, expected_quad, m](double p) {
    const double q = conjugate_exponent(p);
    const auto outer_nodes = tensor_nodes(u.u(), expected_quad);
    const auto inner_nodes = tensor_nodes(u.v(), expected_quad);
    double modulus = 0.0;
    for (const auto& xn : outer_nodes) {
      double l = 0.0;
      for (const auto& yn : inner_nodes) {
        const Matrix ju = u.jacobian_full(xn.point, yn.point);
        const Matrix jo = outer.differential(u.evaluate(xn.point, yn.point));
        const double full = std::abs(jo.determinant()) * generalized_norm(ju);
        const double surface = generalized_norm(jo * ju.rightCols(m));
        l += yn.weight * std::pow(surface / full, q) * full;
      }
      modulus += xn.weight * std::pow(l, 1.0 - p);
    }
    return modulus;
  };
  return {"condenser", family, submersion, expected, {}, std::nullopt, {}};
}

CatalogEntry make_pq_map(double p, double b, const BoxDomain& u, const BoxDomain& v) {
  const double q = conjugate_exponent(p);
  if (u.dim() != 1 || v.dim() != 1) throw InvalidArgument("the affine (p,q)-map is planar");
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("(p,q)-map scale must be positive");
  const double a = std::pow(b, p - 1.0);

  Matrix linear(2, 2);
  linear << a, 0.0, 0.0, b;
  ParametrizedFamily family(
      u, v,
      [a, b](const Vector& x, const Vector& y) {
        Vector z(2);
        z << a * x[0], b * y[0];
        return z;
      },
      [linear](const Vector&, const Vector&) { return linear; },
      [a, b](const Vector& z) {
        return std::pair<Vector, Vector>{Vector::Constant(1, z[0] / a), Vector::Constant(1, z[1] / b)};
      });
  Matrix level(1, 2);
  level << 1.0 / a, 0.0;
  Submersion submersion(
      2, 1, [a](const Vector& z) { return Vector::Constant(1, z[0] / a); }, [level](const Vector&) { return level; });

  CatalogEntry entry{"pq-map", family, submersion, parallel_formula(u.volume(), v.volume()),
                     {{"b", b}, {"a", a}, {"p", p}, {"q", q}}, family.transverse(),
                     parallel_formula(v.volume(), u.volume())};
  return entry;
}

double pq_map_defect(const ParametrizedFamily& fam, double p, const Vector& x, const Vector& y) {
  const double q = conjugate_exponent(p);
  const Matrix jac = fam.jacobian_full(x, y);
  const double full = generalized_norm(jac);
  const double surface = generalized_norm(jac.rightCols(fam.m()));
  const double transverse = generalized_norm(jac.leftCols(fam.n() - fam.m()));
  return std::max(std::abs(std::pow(surface, p) - full), std::abs(std::pow(transverse, q) - full)) / full;
}

// ----------------------------------------------------------------------------
// Name-based construction

namespace {

double lookup(const ParameterMap& params, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const auto it = params.find(key);
  if (it != params.end()) return it->second;
  if (fallback) return *fallback;
  throw InvalidArgument("missing parameter '" + key + "'");
}

BoxDomain box_from(const ParameterMap& params, const std::string& prefix) {
  int dim = 0;
  while (params.count(prefix + std::to_string(dim) + "_lo") || params.count(prefix + std::to_string(dim) + "_hi"))
    ++dim;
  if (dim == 0) return BoxDomain::unit(1);
  Vector lo(dim), hi(dim);
  for (int i = 0; i < dim; ++i) {
    lo[i] = lookup(params, prefix + std::to_string(i) + "_lo");
    hi[i] = lookup(params, prefix + std::to_string(i) + "_hi");
  }
  return BoxDomain(lo, hi);
}

void reject_unknown(const ParameterMap& params, const std::string& family,
                    const std::function<bool(const std::string&)>& known) {
  for (const auto& [key, value] : params)
    if (!known(key)) throw InvalidArgument("parameter '" + key + "' is not used by family '" + family + "'");
}

bool is_box_key(const std::string& key) {
  return (key.starts_with("u") || key.starts_with("v")) && (key.ends_with("_lo") || key.ends_with("_hi"));
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"parallel", "shear", "annulus-radial", "annulus-circular", "pq-map", "condenser-diag"};
}

CatalogEntry make_entry(const std::string& name, const ParameterMap& params, double p) {
  if (name == "parallel") {
    reject_unknown(params, name, is_box_key);
    return make_parallel(box_from(params, "u"), box_from(params, "v"));
  }
  if (name == "shear") {
    reject_unknown(params, name, [](const std::string& key) { return is_box_key(key) || key.starts_with("b"); });
    const BoxDomain u = box_from(params, "u"), v = box_from(params, "v");
    Matrix b(u.dim(), v.dim());
    if (params.count("b")) {
      if (u.dim() != 1 || v.dim() != 1) throw InvalidArgument("scalar 'b' requires one-dimensional U and V");
      b(0, 0) = params.at("b");
    } else {
      for (int i = 0; i < u.dim(); ++i)
        for (int j = 0; j < v.dim(); ++j) b(i, j) = lookup(params, "b" + std::to_string(i) + "_" + std::to_string(j));
    }
    return make_shear(u, v, b);
  }
  if (name == "annulus-radial" || name == "annulus-circular") {
    reject_unknown(params, name, [](const std::string& key) { return key == "r0" || key == "r1"; });
    return make_polar_annulus(lookup(params, "r0", 1.0), lookup(params, "r1", std::exp(1.0)),
                              name == "annulus-radial" ? PolarMode::Radial : PolarMode::Circular);
  }
  if (name == "pq-map") {
    reject_unknown(params, name, [](const std::string& key) { return is_box_key(key) || key == "b"; });
    return make_pq_map(p, lookup(params, "b", 1.0), box_from(params, "u"), box_from(params, "v"));
  }
  if (name == "condenser-diag") {
    reject_unknown(params, name, [](const std::string& key) { return is_box_key(key) || key.starts_with("d"); });
    const CatalogEntry base = make_parallel(box_from(params, "u"), box_from(params, "v"));
    const int n = base.family.n();
    Vector diag(n);
    for (int i = 0; i < n; ++i) diag[i] = lookup(params, "d" + std::to_string(i), i == 0 ? 2.0 : 1.0);
    CatalogEntry entry = make_condenser(base.family, Diffeomorphism::linear(diag.asDiagonal().toDenseMatrix()),
                                        base.submersion);
    entry.name = name;
    entry.parameters = base.parameters;
    for (int i = 0; i < n; ++i) entry.parameters["d" + std::to_string(i)] = diag[i];
    return entry;
  }
  throw InvalidArgument("unknown family '" + name + "'");
}

}  // namespace pmod
