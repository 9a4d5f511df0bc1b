#include "pmod/quadrature.hpp"

#include "pmod/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

namespace pmod {

BoxDomain::BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size())
    throw InvalidArgument("box bounds must be non-empty and of equal length");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
      throw InvalidArgument("box axis " + std::to_string(i) + " is empty or non-finite");
  }
}

BoxDomain BoxDomain::interval(double lo, double hi) {
  return BoxDomain(Vector::Constant(1, lo), Vector::Constant(1, hi));
}

BoxDomain BoxDomain::unit(int dim) { return BoxDomain(Vector::Zero(dim), Vector::Ones(dim)); }

double BoxDomain::volume() const { return (upper_ - lower_).prod(); }

bool BoxDomain::contains(const Vector& point) const {
  if (point.size() != lower_.size()) return false;
  return ((point.array() > lower_.array()) && (point.array() < upper_.array())).all();
}

Vector BoxDomain::from_unit(const Vector& t) const {
  return lower_.array() + t.array() * (upper_ - lower_).array();
}

void QuadratureScheme::validate() const {
  if (order < 1) throw InvalidArgument("quadrature order must be >= 1");
  if (subdivisions < 1) throw InvalidArgument("quadrature subdivisions must be >= 1");
}

namespace {

// (P_n(x), P_n'(x)) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double prev = 1.0, cur = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * x * cur - (k - 1.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  return {cur, n * (x * cur - prev) / (x * x - 1.0)};
}

Rule1D compute_gauss_legendre(int n) {
  Rule1D rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, dpn] = legendre(n, x);
      const double dx = pn / dpn;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dpn = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dpn * dpn);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

Rule1D gauss_legendre(int order) {
  if (order < 1) throw InvalidArgument("Gauss-Legendre order must be >= 1");
  static std::mutex mutex;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
  return it->second;
}

Rule1D composite_rule(double lo, double hi, const QuadratureScheme& scheme) {
  scheme.validate();
  Rule1D base;
  if (scheme.kind == QuadratureKind::GaussLegendre) {
    base = gauss_legendre(scheme.order);
  } else {
    for (int i = 0; i < scheme.order; ++i) {
      base.nodes.push_back(-1.0 + (2.0 * i + 1.0) / scheme.order);
      base.weights.push_back(2.0 / scheme.order);
    }
  }
  Rule1D out;
  const double h = (hi - lo) / scheme.subdivisions;
  for (int c = 0; c < scheme.subdivisions; ++c) {
    const double mid = lo + (c + 0.5) * h;
    for (std::size_t k = 0; k < base.nodes.size(); ++k) {
      out.nodes.push_back(mid + 0.5 * h * base.nodes[k]);
      out.weights.push_back(0.5 * h * base.weights[k]);
    }
  }
  return out;
}

std::vector<QuadratureNode> tensor_nodes(const BoxDomain& box, const QuadratureScheme& scheme) {
  const int d = box.dim();
  std::vector<Rule1D> axes;
  axes.reserve(d);
  for (int i = 0; i < d; ++i) axes.push_back(composite_rule(box.lower()[i], box.upper()[i], scheme));
  const std::size_t per_axis = axes.front().nodes.size();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;

  std::vector<QuadratureNode> nodes;
  nodes.reserve(total);
  std::vector<std::size_t> index(d, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vector point(d);
    double weight = 1.0;
    for (int i = 0; i < d; ++i) {
      point[i] = axes[i].nodes[index[i]];
      weight *= axes[i].weights[index[i]];
    }
    nodes.push_back({std::move(point), weight});
    for (int i = d - 1; i >= 0; --i) {
      if (++index[i] < per_axis) break;
      index[i] = 0;
    }
  }
  return nodes;
}

}  // namespace pmod
