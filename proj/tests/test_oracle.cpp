#include "helpers.hpp"
#include "pmod/catalog.hpp"
#include "pmod/errors.hpp"
#include "pmod/oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace pmod;
using testing::rel;
using testing::vec;

namespace {

DiscreteModulusProblem random_problem(std::mt19937_64& rng, double p) {
  std::uniform_int_distribution<int> cell_count(3, 8), surface_count(1, 5);
  std::uniform_real_distribution<double> volume(0.2, 2.0), weight(0.1, 1.5), coin(0.0, 1.0);
  DiscreteModulusProblem problem;
  problem.p = p;
  const int cells = cell_count(rng);
  for (int c = 0; c < cells; ++c) problem.cells.push_back({vec({double(c), 0.0}), volume(rng)});
  const int surfaces = surface_count(rng);
  for (int s = 0; s < surfaces; ++s) {
    std::vector<CellWeight> row;
    for (int c = 0; c < cells; ++c)
      if (coin(rng) < 0.5) row.push_back({std::size_t(c), weight(rng)});
    if (row.empty()) row.push_back({std::size_t(s % cells), weight(rng)});
    problem.surfaces.push_back(row);
  }
  return problem;
}

double solve(const DiscreteModulusProblem& problem) { return solve_discrete(problem, 1e-10, 200000).objective; }

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("single cell, single surface") {
    for (double p : {1.5, 2.0, 3.0}) {
      const DiscreteModulusProblem problem{{{vec({0.0}), 0.7}}, {{{0, 2.5}}}, p};
      const auto solution = solve_discrete(problem, 1e-12);
      CHECK(rel(solution.objective, 0.7 / std::pow(2.5, p)) <= 1e-10);
      CHECK(solution.density[0] == doctest::Approx(1.0 / 2.5));
      CHECK(solution.max_constraint_violation <= 1e-12);
    }
  }

  TEST_CASE("disjoint surfaces add") {
    const DiscreteModulusProblem one{{{vec({0.0}), 0.7}, {vec({1.0}), 1.3}}, {{{0, 0.5}, {1, 1.0}}}, 2.0};
    DiscreteModulusProblem two = one;
    two.cells.push_back({vec({2.0}), 0.7});
    two.cells.push_back({vec({3.0}), 1.3});
    two.surfaces.push_back({{2, 0.5}, {3, 1.0}});
    const double single = solve(one);
    // Two cells on one surface: min v1 r1^2 + v2 r2^2 with w1 r1 + w2 r2 = 1.
    CHECK(rel(single, 1.0 / (0.5 * 0.5 / 0.7 + 1.0 / 1.3)) <= 1e-9);
    CHECK(rel(solve(two), 2 * single) <= 1e-9);
  }

  TEST_CASE("discretization of the parallel family") {
    const auto fam = make_parallel(BoxDomain::unit(1), BoxDomain::interval(0, 2)).family;
    const auto problem = discretize_family(fam, 2.0, 8, 4, 16);
    CHECK(problem.p == 2.0);
    CHECK(problem.surfaces.size() == 4);
    CHECK(problem.cells.size() <= 64);
    for (const auto& row : problem.surfaces) {
      double total = 0.0;
      for (const auto& [cell, weight] : row) {
        CHECK(cell < problem.cells.size());
        total += weight;
      }
      CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
    }
    // The box spans the sampled points: surfaces at x = 1/8..7/8, samples at y = 1/32..63/32.
    const double padded = 1.0 + 2 * kBoundingBoxPadding;
    const double cell_volume = (padded * 0.75 / 8) * (padded * 1.875 / 8);
    for (const auto& cell : problem.cells) CHECK(cell.volume == doctest::Approx(cell_volume));
    CHECK_THROWS_AS(discretize_family(fam, 2.0, 1, 4, 4), InvalidArgument);
  }

  TEST_CASE("vertical segments of the unit square") {
    const auto fam = make_parallel(BoxDomain::unit(1), BoxDomain::unit(1)).family;
    const auto counts = discretization_counts(fam, 64);
    const auto problem = discretize_family(fam, 2.0, 64, counts.surfaces_per_axis, counts.samples_per_axis);
    const double value = solve_discrete(problem, 1e-4).objective;
    CHECK(value >= 0.95);
    CHECK(value <= 1.05);
  }

  TEST_CASE("structural properties on random instances") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> scale(0.3, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
      const double p = trial % 3 == 0 ? 1.5 : trial % 3 == 1 ? 2.0 : 3.0;
      const auto a = random_problem(rng, p);
      const double base = solve(a);
      INFO("trial " << trial);

      // More curves never lower the modulus.
      DiscreteModulusProblem sub = a;
      if (sub.surfaces.size() > 1) {
        sub.surfaces.pop_back();
        CHECK(solve(sub) <= base * (1 + 1e-8));
      }

      // Union bound: mod(A ∪ B) <= mod(A) + mod(B).
      const auto b = random_problem(rng, p);
      DiscreteModulusProblem joined = a;
      if (b.cells.size() <= a.cells.size()) {
        joined.surfaces.insert(joined.surfaces.end(), b.surfaces.begin(), b.surfaces.end());
        DiscreteModulusProblem b_on_a = a;
        b_on_a.surfaces = b.surfaces;
        CHECK(solve(joined) <= (base + solve(b_on_a)) * (1 + 1e-8));
      }

      // Scaling all weights by λ scales the modulus by λ^-p.
      const double lambda = scale(rng);
      DiscreteModulusProblem scaled = a;
      for (auto& row : scaled.surfaces)
        for (auto& entry : row) entry.weight *= lambda;
      CHECK(rel(solve(scaled), base * std::pow(lambda, -p)) <= 1e-6);

      // Relabelling the cells changes nothing.
      std::vector<std::size_t> perm(a.cells.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      DiscreteModulusProblem permuted = a;
      for (std::size_t c = 0; c < perm.size(); ++c) permuted.cells[perm[c]] = a.cells[c];
      for (auto& row : permuted.surfaces)
        for (auto& entry : row) entry.cell = perm[entry.cell];
      CHECK(rel(solve(permuted), base) <= 1e-6);
    }
  }

  TEST_CASE("solution certificates") {
    std::mt19937_64 rng(5);
    const auto problem = random_problem(rng, 2.0);
    const auto solution = solve_discrete(problem, 1e-9);
    CHECK(solution.duality_gap <= 1e-9);
    CHECK(solution.max_constraint_violation <= 1e-9);
    CHECK(solution.iterations >= 1);
    double energy = 0.0;
    for (std::size_t c = 0; c < problem.cells.size(); ++c) {
      CHECK(solution.density[c] >= 0.0);
      energy += std::pow(solution.density[c], 2.0) * problem.cells[c].volume;
    }
    CHECK(rel(energy, solution.objective) <= 1e-12);
    for (const auto& row : problem.surfaces) {
      double total = 0.0;
      for (const auto& [cell, weight] : row) total += weight * solution.density[cell];
      CHECK(total >= 1.0 - 1e-12);
    }
  }

  TEST_CASE("text serialization round-trips") {
    const auto fam = make_polar_annulus(1.0, 2.0, PolarMode::Radial).family;
    const auto problem = discretize_family(fam, 1.7, 12, 10, 20);
    std::stringstream first;
    write_problem(first, problem);
    const auto restored = read_problem(first);
    std::stringstream second;
    write_problem(second, restored);
    CHECK(first.str() == second.str());
    REQUIRE(restored.cells.size() == problem.cells.size());
    REQUIRE(restored.surfaces.size() == problem.surfaces.size());
    CHECK(restored.p == problem.p);
    for (std::size_t c = 0; c < problem.cells.size(); ++c) {
      CHECK(restored.cells[c].volume == problem.cells[c].volume);
      CHECK(restored.cells[c].center == problem.cells[c].center);
    }
    for (std::size_t s = 0; s < problem.surfaces.size(); ++s)
      for (std::size_t i = 0; i < problem.surfaces[s].size(); ++i)
        CHECK(restored.surfaces[s][i].weight == problem.surfaces[s][i].weight);
    CHECK(solve_discrete(restored, 1e-3).objective == solve_discrete(problem, 1e-3).objective);
  }

  TEST_CASE("malformed problem files") {
    for (const char* text : {
             "",
             "pmod-discrete 2\n",
             "pmod-discrete 1\nq 2\n",
             "pmod-discrete 1\np 2\ncells 1 2\n0.5 1\n",
             "pmod-discrete 1\np 2\ncells 1 1\n0.5 1\nsurfaces 1\n0-1\n",
             "pmod-discrete 1\np 2\ncells 1 1\n0.5 1\nsurfaces 2\n0:1\n",
             "pmod-discrete 1\np 2\ncells 1 1\n0.5 1\nsurfaces 1\n0:x\n",
         }) {
      std::istringstream in(text);
      CHECK_THROWS_AS(read_problem(in), InvalidArgument);
    }
    std::istringstream good("pmod-discrete 1\np 2\ncells 1 1\n0.5 1\nsurfaces 1\n0:2\n");
    CHECK(solve_discrete(read_problem(good)).objective == doctest::Approx(0.25));
  }

  TEST_CASE("invalid problems") {
    const DiscreteModulusProblem empty_surface{{{vec({0.0}), 1.0}}, {{{0, 0.0}}}, 2.0};
    CHECK_THROWS_AS(empty_surface.validate(), InfeasibleSurface);
    CHECK_THROWS_AS(solve_discrete(empty_surface), InfeasibleSurface);
    const DiscreteModulusProblem bad_cell{{{vec({0.0}), 1.0}}, {{{3, 1.0}}}, 2.0};
    CHECK_THROWS_AS(bad_cell.validate(), InvalidArgument);
    const DiscreteModulusProblem bad_volume{{{vec({0.0}), 0.0}}, {{{0, 1.0}}}, 2.0};
    CHECK_THROWS_AS(bad_volume.validate(), InvalidArgument);
    const DiscreteModulusProblem bad_p{{{vec({0.0}), 1.0}}, {{{0, 1.0}}}, 1.0};
    CHECK_THROWS_AS(solve_discrete(bad_p), InvalidArgument);
    const DiscreteModulusProblem ok{{{vec({0.0}), 1.0}}, {{{0, 1.0}}}, 2.0};
    CHECK_THROWS_AS(solve_discrete(ok, 0.0), InvalidArgument);
  }

  TEST_CASE("iteration cap") {
    const auto fam = make_shear(BoxDomain::unit(1), BoxDomain::unit(1), Matrix::Constant(1, 1, 1.0)).family;
    const auto problem = discretize_family(fam, 2.0, 16, 32, 64);
    CHECK_THROWS_AS(solve_discrete(problem, 1e-10, 2), NoConvergence);
  }

  TEST_CASE("cross-validation against the analytic modulus") {
    const auto parallel = make_parallel(BoxDomain::unit(1), BoxDomain::unit(1)).family;
    const auto rows = cross_validate(parallel, 2.0, modulus_p(parallel, 2.0, {}), {16, 32, 64});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].cells_per_axis == 16);
    CHECK(rows.back().relative_gap <= 0.05);

    const auto radial = make_polar_annulus(1.0, 2.0, PolarMode::Radial).family;
    const auto annulus = cross_validate(radial, 2.0, modulus_p(radial, 2.0, {}), {16, 64});
    CHECK(annulus.back().relative_gap <= 0.05);
    CHECK(annulus.back().relative_gap < annulus.front().relative_gap);

    CHECK_THROWS_AS(cross_validate(parallel, 2.0, modulus_p(parallel, 2.0, {}), {}), InvalidArgument);
  }
}
