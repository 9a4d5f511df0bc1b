#pragma once

#include "pmod/family.hpp"
#include "pmod/modulus.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace pmod {

struct DiscreteCell {
  Vector center;
  double volume;
};

struct CellWeight {
  std::size_t cell;
  double weight;
};

/// min Σ ρ_c^p vol_c  subject to  Σ_c a_{s,c} ρ_c >= 1 for every surface s, ρ >= 0.
struct DiscreteModulusProblem {
  std::vector<DiscreteCell> cells;
  std::vector<std::vector<CellWeight>> surfaces;  // a_{s,c}, one list per surface
  double p = 2.0;

  /// Throws InvalidArgument for non-positive volumes, negative weights or
  /// out-of-range cell indices, and InfeasibleSurface for a zero-weight surface.
  void validate() const;
};

struct DiscreteSolution {
  std::vector<double> density;
  double objective = 0.0;
  /// max_s max(0, 1 - a_s . ρ) of the dual iterate before feasibility rescaling.
  double max_constraint_violation = 0.0;
  /// (primal - dual) / primal at termination.
  double duality_gap = 0.0;
  int iterations = 0;
};

/// Samples each surface σ_x at the midpoints of a uniform grid in V and bins
/// |J^y_f| * (parameter cell volume) into a uniform ambient grid over the
/// image bounding box (padded by 2% per side). Counts are per axis: U yields
/// surfaces_per_axis^(n-m) surfaces, each with samples_per_axis^m samples.
DiscreteModulusProblem discretize_family(const ParametrizedFamily& fam, double p, int cells_per_axis,
                                         int surfaces_per_axis, int samples_per_axis, unsigned threads = 0);

inline constexpr double kBoundingBoxPadding = 0.02;

/// Exact cyclic coordinate ascent on the concave dual; the primal iterate is
/// rescaled by its smallest constraint value to make it feasible. Stops when
/// the violation and the relative duality gap are both below tol.
DiscreteSolution solve_discrete(const DiscreteModulusProblem& problem, double tol = 1e-6, int max_iters = 20000);

/// Plain-text format:
///   pmod-discrete 1
///   p <p>
///   cells <count> <dim>
///   <center...> <volume>          (one line per cell)
///   surfaces <count>
///   <cell>:<weight> ...           (one line per surface)
void write_problem(std::ostream& out, const DiscreteModulusProblem& problem);
DiscreteModulusProblem read_problem(std::istream& in);

struct ConvergenceRow {
  int cells_per_axis;
  double discrete_modulus;
  double relative_gap;  // |discrete - analytic| / analytic
  int iterations;
};

struct CrossValidateOptions {
  /// Adjacent surfaces (and adjacent samples along a surface) are placed at
  /// most 1/density of the smallest cell width apart in the image.
  double surfaces_per_cell = 2.0;
  double samples_per_cell = 8.0;
  int max_count_per_axis = 4096;
  double tol = 1e-4;
  int max_iters = 20000;
  unsigned threads = 0;
};

struct DiscretizationCounts {
  int surfaces_per_axis;
  int samples_per_axis;
};

/// Surface and sample counts for a grid resolution, from the image bounding
/// box and the largest Jacobian column norms on a 16-per-axis probe grid.
DiscretizationCounts discretization_counts(const ParametrizedFamily& fam, int cells_per_axis,
                                           const CrossValidateOptions& options = {});

std::vector<ConvergenceRow> cross_validate(const ParametrizedFamily& fam, double p, const ModulusReport& analytic,
                                           const std::vector<int>& grid_ladder,
                                           const CrossValidateOptions& options = {});

}  // namespace pmod
