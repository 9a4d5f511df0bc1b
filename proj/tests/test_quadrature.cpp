#include "helpers.hpp"
#include "pmod/errors.hpp"
#include "pmod/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace pmod;

TEST_SUITE("quadrature") {
  TEST_CASE("low-order Gauss-Legendre rules") {
    const auto two = gauss_legendre(2);
    CHECK(two.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(two.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(two.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

    const auto three = gauss_legendre(3);
    CHECK(three.nodes[1] == 0.0);
    CHECK(three.nodes[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-15));
    CHECK(three.weights[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
    CHECK(three.weights[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-15));

    const auto one = gauss_legendre(1);
    CHECK(one.nodes[0] == doctest::Approx(0.0));
    CHECK(one.weights[0] == doctest::Approx(2.0));
  }

  TEST_CASE("Gauss-Legendre integrates degree 2n-1 exactly") {
    for (int order = 1; order <= 30; ++order) {
      const auto rule = gauss_legendre(order);
      for (int degree = 0; degree <= 2 * order - 1; ++degree) {
        double sum = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * std::pow(rule.nodes[k], degree);
        const double exact = degree % 2 ? 0.0 : 2.0 / (degree + 1);
        CHECK(std::abs(sum - exact) <= 1e-13);
      }
    }
  }

  TEST_CASE("tensor weights sum to the box volume") {
    const BoxDomain box(testing::vec({0.0, -1.0, 2.0}), testing::vec({2.0, 0.5, 2.25}));
    for (auto kind : {QuadratureKind::GaussLegendre, QuadratureKind::Midpoint}) {
      const auto nodes = tensor_nodes(box, {3, 2, kind});
      CHECK(nodes.size() == 216);
      double total = 0.0;
      for (const auto& node : nodes) {
        CHECK(node.weight > 0.0);
        CHECK(box.contains(node.point));
        total += node.weight;
      }
      CHECK(total == doctest::Approx(box.volume()).epsilon(1e-14));
    }
  }

  TEST_CASE("tensor product of polynomials") {
    const BoxDomain box(testing::vec({0.0, 1.0}), testing::vec({2.0, 3.0}));
    // ∫_0^2 x^3 dx * ∫_1^3 y^4 dy = 4 * 242/5
    const double value = integrate(box, {3, 1, QuadratureKind::GaussLegendre},
                                   [](const Vector& p) { return std::pow(p[0], 3) * std::pow(p[1], 4); });
    CHECK(value == doctest::Approx(4.0 * 242.0 / 5.0).epsilon(1e-13));
  }

  TEST_CASE("box domain invariants and errors") {
    CHECK(BoxDomain::interval(0.0, 2.0).volume() == 2.0);
    CHECK(BoxDomain::unit(3).volume() == 1.0);
    CHECK_THROWS_AS(BoxDomain::interval(1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(BoxDomain::interval(2.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(BoxDomain(testing::vec({0.0}), testing::vec({1.0, 2.0})), InvalidArgument);
    CHECK_THROWS_AS(BoxDomain::interval(0.0, std::nan("")), InvalidArgument);
    CHECK_THROWS_AS(tensor_nodes(BoxDomain::unit(1), {0, 1}), InvalidArgument);
    CHECK_THROWS_AS(tensor_nodes(BoxDomain::unit(1), {2, 0}), InvalidArgument);
  }
}
