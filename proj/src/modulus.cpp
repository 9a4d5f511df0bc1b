#include "pmod/modulus.hpp"

#include "detail.hpp"
#include "pmod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace pmod {

namespace {

struct NodeJacobians {
  double full;     // |J_f|
  double surface;  // |J^y_f|
};

NodeJacobians node_jacobians(const ParametrizedFamily& fam, const Vector& x, const Vector& y, double threshold) {
  const Matrix jac = fam.jacobian_full(x, y);
  const double full = generalized_norm(jac);
  if (!(full >= threshold))
    throw DegenerateJacobian("|J_f| = " + std::to_string(full) + " below threshold at x=" +
                             detail::format_point(x) + ", y=" + detail::format_point(y));
  return {full, generalized_norm(jac.rightCols(fam.m()))};
}

double checked_length(double l, const Vector& x) {
  if (!std::isfinite(l)) throw NonFiniteIntegrand("l(x) is non-finite at x=" + detail::format_point(x));
  if (l < kVanishingLength) throw NonFiniteIntegrand("l(x) vanishes at x=" + detail::format_point(x));
  return l;
}

// ∫_V (|J^y|/|J|)^q |J| dy over precomputed inner nodes; tracks min |J_f|.
double inner_length(const ParametrizedFamily& fam, const Vector& x, double q,
                    const std::vector<QuadratureNode>& inner, double threshold, double& min_jac) {
  double sum = 0.0;
  for (const auto& node : inner) {
    const auto jac = node_jacobians(fam, x, node.point, threshold);
    min_jac = std::min(min_jac, jac.full);
    const double term = std::pow(jac.surface / jac.full, q) * jac.full;
    if (!std::isfinite(term))
      throw NonFiniteIntegrand("integrand of l(x) is non-finite at x=" + detail::format_point(x) +
                               ", y=" + detail::format_point(node.point));
    sum += node.weight * term;
  }
  return sum;
}

// Outer integral over U of length(x)^{1-p}, evaluated in parallel.
template <typename LengthFn>
ModulusReport outer_integral(const ParametrizedFamily& fam, double p, const QuadratureScheme& quad,
                             unsigned threads, std::size_t inner_count, LengthFn&& length) {
  const auto outer = tensor_nodes(fam.u(), quad);
  std::vector<double> lengths(outer.size());
  std::vector<double> min_jacs(outer.size(), std::numeric_limits<double>::infinity());
  detail::parallel_for(outer.size(), threads, [&](std::size_t i) {
    lengths[i] = checked_length(length(outer[i].point, min_jacs[i]), outer[i].point);
  });

  ModulusReport report;
  report.p = p;
  report.q = conjugate_exponent(p);
  report.node_count = outer.size() * inner_count;
  report.min_jacobian = *std::min_element(min_jacs.begin(), min_jacs.end());
  report.l_samples.reserve(outer.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    sum += outer[i].weight * std::pow(lengths[i], 1.0 - p);
    report.l_samples.push_back({outer[i].point, lengths[i]});
  }
  report.modulus = sum;
  return report;
}

}  // namespace

double conjugate_exponent(double p) {
  if (!std::isfinite(p) || !(p > kMinExponent))
    throw InvalidArgument("exponent p must satisfy p > 1, got " + std::to_string(p));
  return p / (p - 1.0);
}

double degenerate_jacobian_threshold(const ParametrizedFamily& fam) {
  const QuadratureScheme probe{4, 1, QuadratureKind::Midpoint};
  const auto xs = tensor_nodes(fam.u(), probe);
  const auto ys = tensor_nodes(fam.v(), probe);
  std::vector<double> values;
  values.reserve(xs.size() * ys.size());
  for (const auto& x : xs)
    for (const auto& y : ys) values.push_back(generalized_norm(fam.jacobian_full(x.point, y.point)));
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return kDegenerateJacobianRatio * *mid;
}

double l_of_x(const ParametrizedFamily& fam, const Vector& x, double p, const QuadratureScheme& quad) {
  const double q = conjugate_exponent(p);
  const auto inner = tensor_nodes(fam.v(), quad);
  double min_jac = std::numeric_limits<double>::infinity();
  return checked_length(inner_length(fam, x, q, inner, degenerate_jacobian_threshold(fam), min_jac), x);
}

ModulusReport modulus_p(const ParametrizedFamily& fam, double p, const QuadratureScheme& quad,
                        const ModulusOptions& options) {
  const double q = conjugate_exponent(p);
  quad.validate();
  const double threshold = degenerate_jacobian_threshold(fam);
  const auto inner = tensor_nodes(fam.v(), quad);
  ModulusReport report = outer_integral(fam, p, quad, options.threads, inner.size(),
                                        [&](const Vector& x, double& min_jac) {
                                          return inner_length(fam, x, q, inner, threshold, min_jac);
                                        });
  if (options.estimate_error) {
    QuadratureScheme finer = quad;
    finer.subdivisions *= 2;
    ModulusOptions plain = options;
    plain.estimate_error = false;
    report.quadrature_error = std::abs(modulus_p(fam, p, finer, plain).modulus - report.modulus);
  }
  return report;
}

// ----------------------------------------------------------------------------
// ExtremalDensity

ExtremalDensity::ExtremalDensity(ParametrizedFamily fam, double p, QuadratureScheme quad, LengthMode mode,
                                 int table_points)
    : fam_(std::move(fam)),
      p_(p),
      q_(conjugate_exponent(p)),
      quad_(quad),
      mode_(mode),
      threshold_(degenerate_jacobian_threshold(fam_)) {
  quad_.validate();
  if (mode_ == LengthMode::Tabulate) {
    if (table_points < 2) throw InvalidArgument("tabulated l(x) needs at least 2 points per axis");
    table_points_ = table_points;
    const int d = fam_.u().dim();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(table_points_);
    table_.resize(total);
    const auto inner = tensor_nodes(fam_.v(), quad_);
    std::vector<int> index(d, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      Vector t(d);
      for (int i = 0; i < d; ++i) t[i] = static_cast<double>(index[i]) / (table_points_ - 1);
      const Vector x = fam_.u().from_unit(t);
      double min_jac = std::numeric_limits<double>::infinity();
      table_[flat] = checked_length(inner_length(fam_, x, q_, inner, threshold_, min_jac), x);
      for (int i = d - 1; i >= 0; --i) {
        if (++index[i] < table_points_) break;
        index[i] = 0;
      }
    }
  }
  if (!fam_.inverse()) {
    // Coarse forward grid for Newton seeds.
    const QuadratureScheme seeds{8, 1, QuadratureKind::Midpoint};
    const auto xs = tensor_nodes(fam_.u(), seeds);
    const auto ys = tensor_nodes(fam_.v(), seeds);
    Vector lo = Vector::Constant(fam_.n(), std::numeric_limits<double>::infinity());
    Vector hi = -lo;
    for (const auto& x : xs) {
      for (const auto& y : ys) {
        Vector z = fam_.evaluate(x.point, y.point);
        lo = lo.cwiseMin(z);
        hi = hi.cwiseMax(z);
        seed_params_.emplace_back(x.point, y.point);
        seed_images_.push_back(std::move(z));
      }
    }
    diameter_ = (hi - lo).norm();
  }
}

double ExtremalDensity::length(const Vector& x) const {
  if (mode_ == LengthMode::Tabulate) return interpolate(x);
  const auto inner = tensor_nodes(fam_.v(), quad_);
  double min_jac = std::numeric_limits<double>::infinity();
  return checked_length(inner_length(fam_, x, q_, inner, threshold_, min_jac), x);
}

double ExtremalDensity::interpolate(const Vector& x) const {
  const int d = fam_.u().dim();
  const Vector& lo = fam_.u().lower();
  const Vector& hi = fam_.u().upper();
  std::vector<int> base(d);
  std::vector<double> frac(d);
  for (int i = 0; i < d; ++i) {
    const double s = std::clamp((x[i] - lo[i]) / (hi[i] - lo[i]), 0.0, 1.0) * (table_points_ - 1);
    base[i] = std::min(static_cast<int>(s), table_points_ - 2);
    frac[i] = s - base[i];
  }
  double value = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int i = 0; i < d; ++i) {
      const int bit = (corner >> (d - 1 - i)) & 1;
      weight *= bit ? frac[i] : 1.0 - frac[i];
      flat = flat * table_points_ + static_cast<std::size_t>(base[i] + bit);
    }
    value += weight * table_[flat];
  }
  return value;
}

double ExtremalDensity::shape(const Vector& x, const Vector& y) const {
  const auto jac = node_jacobians(fam_, x, y, threshold_);
  return std::pow(jac.surface / jac.full, q_ - 1.0);
}

double ExtremalDensity::evaluate_param(const Vector& x, const Vector& y) const {
  return shape(x, y) / length(x);
}

std::pair<Vector, Vector> ExtremalDensity::invert(const Vector& z) const {
  if (fam_.inverse()) return (*fam_.inverse())(z);
  if (z.size() != fam_.n()) throw InvalidArgument("ambient point has the wrong dimension");

  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < seed_images_.size(); ++i) {
    const double dist = (seed_images_[i] - z).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  const int k = fam_.u().dim();
  const int dim = fam_.n();
  Vector lower(dim), upper(dim), w(dim);
  lower << fam_.u().lower(), fam_.v().lower();
  upper << fam_.u().upper(), fam_.v().upper();
  const Vector inset = 1e-12 * (upper - lower);
  w << seed_params_[best].first, seed_params_[best].second;

  const double tol = kNewtonRelativeTolerance * std::max(diameter_, 1e-300);
  Vector residual = fam_.evaluate(w.head(k), w.tail(dim - k)) - z;
  for (int iter = 0; iter < kNewtonMaxIterations; ++iter) {
    if (residual.norm() <= tol) return {w.head(k), w.tail(dim - k)};
    const Matrix jac = fam_.jacobian_full(w.head(k), w.tail(dim - k));
    const Vector step = jac.fullPivLu().solve(-residual);
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, alpha *= 0.5) {
      Vector trial = (w + alpha * step).cwiseMax(lower + inset).cwiseMin(upper - inset);
      Vector trial_residual = fam_.evaluate(trial.head(k), trial.tail(dim - k)) - z;
      if (trial_residual.norm() < residual.norm()) {
        w = std::move(trial);
        residual = std::move(trial_residual);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (residual.norm() <= tol) return {w.head(k), w.tail(dim - k)};
  throw InversionFailure("Newton inversion did not converge for z=" + detail::format_point(z));
}

double ExtremalDensity::evaluate_ambient(const Vector& z) const {
  const auto [x, y] = invert(z);
  return evaluate_param(x, y);
}

// ----------------------------------------------------------------------------
// Verification checks

std::vector<SurfaceIntegral> admissibility_check(const ParametrizedFamily& fam, const ExtremalDensity& density,
                                                 const QuadratureScheme& quad, std::span<const Vector> x_samples) {
  if (fam.n() != density.family().n() || fam.m() != density.family().m())
    throw InvalidArgument("density was built for a different family");
  const auto inner = tensor_nodes(fam.v(), quad);
  const double threshold = degenerate_jacobian_threshold(fam);
  const double q = density.q();
  std::vector<SurfaceIntegral> out;
  out.reserve(x_samples.size());
  for (const Vector& x : x_samples) {
    const double inv_length = 1.0 / density.length(x);
    double sum = 0.0;
    for (const auto& node : inner) {
      const auto jac = node_jacobians(fam, x, node.point, threshold);
      sum += node.weight * inv_length * std::pow(jac.surface / jac.full, q - 1.0) * jac.surface;
    }
    out.push_back({x, sum});
  }
  return out;
}

CoareaCheck coarea_check(const ParametrizedFamily& fam, const Submersion& submersion, const ScalarField& g,
                         const QuadratureScheme& quad, unsigned threads) {
  if (submersion.n() != fam.n() || submersion.k() != fam.n() - fam.m())
    throw InvalidArgument("submersion dimensions do not match the family");
  const auto outer = tensor_nodes(fam.u(), quad);
  const auto inner = tensor_nodes(fam.v(), quad);
  std::vector<double> lhs(outer.size()), rhs(outer.size());
  detail::parallel_for(outer.size(), threads, [&](std::size_t i) {
    double l_sum = 0.0, r_sum = 0.0;
    for (const auto& node : inner) {
      const Vector z = fam.evaluate(outer[i].point, node.point);
      const Matrix jac = fam.jacobian_full(outer[i].point, node.point);
      const double gz = g(z);
      if (!std::isfinite(gz)) throw NonFiniteIntegrand("test integrand is non-finite at " + detail::format_point(z));
      l_sum += node.weight * gz * generalized_norm(submersion.jacobian(z)) * generalized_norm(jac);
      r_sum += node.weight * gz * generalized_norm(jac.rightCols(fam.m()));
    }
    lhs[i] = outer[i].weight * l_sum;
    rhs[i] = outer[i].weight * r_sum;
  });
  CoareaCheck out{0.0, 0.0};
  for (std::size_t i = 0; i < outer.size(); ++i) {
    out.lhs += lhs[i];
    out.rhs += rhs[i];
  }
  return out;
}

ModulusReport submersion_modulus(const Submersion& submersion, const ParametrizedFamily& levelset_param, double p,
                                 const QuadratureScheme& quad, const ModulusOptions& options) {
  const ParametrizedFamily& fam = levelset_param;
  const double q = conjugate_exponent(p);
  quad.validate();
  if (submersion.n() != fam.n() || submersion.k() != fam.n() - fam.m())
    throw InvalidArgument("submersion dimensions do not match the family");

  const QuadratureScheme probe{3, 1, QuadratureKind::Midpoint};
  for (const auto& x : tensor_nodes(fam.u(), probe)) {
    for (const auto& y : tensor_nodes(fam.v(), probe)) {
      const double residual = key_relation_residual(fam, submersion, x.point, y.point);
      const double level_gap = (submersion.evaluate(fam.evaluate(x.point, y.point)) - x.point).norm();
      if (!(residual <= kSubmersionResidualTolerance) ||
          !(level_gap <= kSubmersionLevelTolerance * (1.0 + x.point.norm())))
        throw InconsistentSubmersion("submersion does not match the level-set parametrization at x=" +
                                     detail::format_point(x.point) + ", y=" + detail::format_point(y.point));
    }
  }

  const double threshold = degenerate_jacobian_threshold(fam);
  const auto inner = tensor_nodes(fam.v(), quad);
  ModulusReport report = outer_integral(
      fam, p, quad, options.threads, inner.size(), [&](const Vector& x, double& min_jac) {
        double sum = 0.0;
        for (const auto& node : inner) {
          const auto jac = node_jacobians(fam, x, node.point, threshold);
          min_jac = std::min(min_jac, jac.full);
          const double level = generalized_norm(submersion.jacobian(fam.evaluate(x, node.point)));
          const double term = std::pow(level, q - 1.0) * jac.surface;
          if (!std::isfinite(term))
            throw NonFiniteIntegrand("level-set integrand is non-finite at x=" + detail::format_point(x));
          sum += node.weight * term;
        }
        return sum;
      });
  if (options.estimate_error) {
    QuadratureScheme finer = quad;
    finer.subdivisions *= 2;
    ModulusOptions plain = options;
    plain.estimate_error = false;
    report.quadrature_error =
        std::abs(submersion_modulus(submersion, fam, p, finer, plain).modulus - report.modulus);
  }
  return report;
}

namespace {

// Π_k P_k(t_k) with |P_k| <= 1 on the unit cube.
class TrigPerturbation {
 public:
  TrigPerturbation(int dim, int harmonics, std::mt19937_64& rng) : harmonics_(harmonics) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    coefs_.resize(dim);
    for (auto& axis : coefs_) {
      double total = 0.0;
      for (int j = 0; j <= harmonics; ++j) {
        const double a = coef(rng);
        const double b = j == 0 ? 0.0 : coef(rng);
        axis.push_back({a, b});
        total += std::abs(a) + std::abs(b);
      }
      for (auto& [a, b] : axis) {
        a /= total;
        b /= total;
      }
    }
  }

  double operator()(const Vector& t) const {
    double value = 1.0;
    for (std::size_t k = 0; k < coefs_.size(); ++k) {
      double axis = 0.0;
      for (int j = 0; j <= harmonics_; ++j) {
        const double angle = j * std::numbers::pi * t[static_cast<Eigen::Index>(k)];
        axis += coefs_[k][j].first * std::cos(angle) + coefs_[k][j].second * std::sin(angle);
      }
      value *= axis;
    }
    return value;
  }

 private:
  int harmonics_;
  std::vector<std::vector<std::pair<double, double>>> coefs_;
};

}  // namespace

double extremality_probe(const ParametrizedFamily& fam, double p, const QuadratureScheme& quad, int trials,
                         std::uint64_t seed, const ExtremalityOptions& options) {
  if (trials < 1) throw InvalidArgument("extremality_probe needs at least one trial");
  if (!(options.amplitude >= 0.0 && options.amplitude < 1.0))
    throw InvalidArgument("perturbation amplitude must lie in [0, 1)");
  const double q = conjugate_exponent(p);
  quad.validate();
  const double threshold = degenerate_jacobian_threshold(fam);
  const auto outer = tensor_nodes(fam.u(), quad);
  const auto inner = tensor_nodes(fam.v(), quad);
  const std::size_t ni = outer.size(), nj = inner.size();

  // Per-node Jacobians and the extremal density.
  std::vector<double> full(ni * nj), surface(ni * nj), density(ni * nj), lengths(ni);
  detail::parallel_for(ni, options.threads, [&](std::size_t i) {
    double l = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
      const auto jac = node_jacobians(fam, outer[i].point, inner[j].point, threshold);
      full[i * nj + j] = jac.full;
      surface[i * nj + j] = jac.surface;
      l += inner[j].weight * std::pow(jac.surface / jac.full, q) * jac.full;
    }
    lengths[i] = checked_length(l, outer[i].point);
    for (std::size_t j = 0; j < nj; ++j)
      density[i * nj + j] = std::pow(surface[i * nj + j] / full[i * nj + j], q - 1.0) / lengths[i];
  });
  double modulus = 0.0;
  for (std::size_t i = 0; i < ni; ++i) modulus += outer[i].weight * std::pow(lengths[i], 1.0 - p);
  const double density_min = *std::min_element(density.begin(), density.end());

  // Parameter points mapped to the unit cube for the perturbation basis.
  const int dim = fam.n();
  Vector lower(dim), width(dim);
  lower << fam.u().lower(), fam.v().lower();
  width << fam.u().upper() - fam.u().lower(), fam.v().upper() - fam.v().lower();

  std::mt19937_64 rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> competitor(ni * nj);
  for (int trial = 0; trial < trials; ++trial) {
    TrigPerturbation phi(dim, options.harmonics, rng);
    double min_integral = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ni; ++i) {
      double integral = 0.0;
      for (std::size_t j = 0; j < nj; ++j) {
        Vector t(dim);
        t << outer[i].point, inner[j].point;
        t = (t - lower).cwiseQuotient(width);
        const double g = density[i * nj + j] + options.amplitude * density_min * phi(t);
        competitor[i * nj + j] = g;
        integral += inner[j].weight * g * surface[i * nj + j];
      }
      min_integral = std::min(min_integral, integral);
    }
    double energy = 0.0;
    for (std::size_t i = 0; i < ni; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < nj; ++j)
        row += inner[j].weight * std::pow(competitor[i * nj + j] / min_integral, p) * full[i * nj + j];
      energy += outer[i].weight * row;
    }
    worst = std::min(worst, energy - modulus);
  }
  return worst;
}

}  // namespace pmod
