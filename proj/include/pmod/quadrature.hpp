#pragma once

#include "pmod/linalg.hpp"

#include <vector>

namespace pmod {

/// Axis-aligned box lower < upper in every coordinate.
class BoxDomain {
 public:
  BoxDomain(Vector lower, Vector upper);
  /// One-dimensional interval (lo, hi).
  static BoxDomain interval(double lo, double hi);
  /// Unit cube (0,1)^dim.
  static BoxDomain unit(int dim);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  /// H^dim of the box.
  double volume() const;
  bool contains(const Vector& point) const;
  /// Maps a point of the unit cube onto the box.
  Vector from_unit(const Vector& t) const;

 private:
  Vector lower_;
  Vector upper_;
};

enum class QuadratureKind { GaussLegendre, Midpoint };

/// Composite tensor-product rule: each axis is split into `subdivisions`
/// equal cells carrying an `order`-point rule.
struct QuadratureScheme {
  int order = 10;
  int subdivisions = 2;
  QuadratureKind kind = QuadratureKind::GaussLegendre;

  void validate() const;
};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule1D gauss_legendre(int order);

struct QuadratureNode {
  Vector point;
  double weight;
};

/// Composite nodes along (lo, hi).
Rule1D composite_rule(double lo, double hi, const QuadratureScheme& scheme);

/// Tensor-product nodes over a box; weights are positive and sum to the box
/// volume.
std::vector<QuadratureNode> tensor_nodes(const BoxDomain& box, const QuadratureScheme& scheme);

/// Σ w f(x) over tensor_nodes(box, scheme).
template <typename F>
double integrate(const BoxDomain& box, const QuadratureScheme& scheme, F&& f) {
  double sum = 0.0;
  for (const auto& node : tensor_nodes(box, scheme)) sum += node.weight * f(node.point);
  return sum;
}

}  // namespace pmod
