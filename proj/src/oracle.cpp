#include "pmod/oracle.hpp"

#include "detail.hpp"
#include "pmod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace pmod {

void DiscreteModulusProblem::validate() const {
  conjugate_exponent(p);
  if (cells.empty()) throw InvalidArgument("discrete problem has no cells");
  for (const auto& cell : cells)
    if (!(cell.volume > 0.0) || !std::isfinite(cell.volume))
      throw InvalidArgument("cell volumes must be positive and finite");
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    double total = 0.0;
    for (const auto& [cell, weight] : surfaces[s]) {
      if (cell >= cells.size()) throw InvalidArgument("surface refers to a cell out of range");
      if (!(weight >= 0.0) || !std::isfinite(weight)) throw InvalidArgument("surface weights must be >= 0");
      total += weight;
    }
    if (!(total > 0.0)) throw InfeasibleSurface("surface " + std::to_string(s) + " has zero total weight");
  }
}

namespace {

std::vector<Vector> midpoints(const BoxDomain& box, int per_axis) {
  std::vector<Vector> out;
  for (auto& node : tensor_nodes(box, {per_axis, 1, QuadratureKind::Midpoint})) out.push_back(std::move(node.point));
  return out;
}

}  // namespace

DiscreteModulusProblem discretize_family(const ParametrizedFamily& fam, double p, int cells_per_axis,
                                         int surfaces_per_axis, int samples_per_axis, unsigned threads) {
  conjugate_exponent(p);
  if (cells_per_axis < 2 || surfaces_per_axis < 2 || samples_per_axis < 2)
    throw InvalidArgument("discretization counts must be >= 2");
  const int n = fam.n();
  const auto xs = midpoints(fam.u(), surfaces_per_axis);
  const auto ys = midpoints(fam.v(), samples_per_axis);
  const double sample_volume = fam.v().volume() / static_cast<double>(ys.size());

  // Sample every surface once; bin after the bounding box is known.
  std::vector<std::vector<Vector>> points(xs.size());
  std::vector<std::vector<double>> weights(xs.size());
  detail::parallel_for(xs.size(), threads, [&](std::size_t s) {
    points[s].reserve(ys.size());
    weights[s].reserve(ys.size());
    for (const Vector& y : ys) {
      points[s].push_back(fam.evaluate(xs[s], y));
      weights[s].push_back(generalized_norm(fam.jacobian_partial_y(xs[s], y)) * sample_volume);
    }
  });

  Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (const auto& surface : points) {
    for (const Vector& z : surface) {
      lo = lo.cwiseMin(z);
      hi = hi.cwiseMax(z);
    }
  }
  const Vector pad = kBoundingBoxPadding * (hi - lo).cwiseMax(1e-12);
  lo -= pad;
  hi += pad;
  const Vector h = (hi - lo) / cells_per_axis;

  DiscreteModulusProblem problem;
  problem.p = p;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(cells_per_axis);
  problem.cells.reserve(total);
  const double volume = h.prod();
  std::vector<int> index(n, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vector center(n);
    for (int i = 0; i < n; ++i) center[i] = lo[i] + (index[i] + 0.5) * h[i];
    problem.cells.push_back({std::move(center), volume});
    for (int i = n - 1; i >= 0; --i) {
      if (++index[i] < cells_per_axis) break;
      index[i] = 0;
    }
  }

  problem.surfaces.resize(xs.size());
  detail::parallel_for(xs.size(), threads, [&](std::size_t s) {
    std::vector<CellWeight> binned;
    binned.reserve(points[s].size());
    for (std::size_t k = 0; k < points[s].size(); ++k) {
      std::size_t flat = 0;
      for (int i = 0; i < n; ++i) {
        const int c = std::clamp(static_cast<int>(std::floor((points[s][k][i] - lo[i]) / h[i])), 0,
                                 cells_per_axis - 1);
        flat = flat * cells_per_axis + static_cast<std::size_t>(c);
      }
      binned.push_back({flat, weights[s][k]});
    }
    std::sort(binned.begin(), binned.end(), [](const CellWeight& a, const CellWeight& b) { return a.cell < b.cell; });
    auto& merged = problem.surfaces[s];
    for (const auto& entry : binned) {
      if (!merged.empty() && merged.back().cell == entry.cell)
        merged.back().weight += entry.weight;
      else
        merged.push_back(entry);
    }
  });
  problem.validate();
  return problem;
}

namespace {

// Dual state: t_c = Σ_s λ_s a_{s,c} and ρ_c = (t_c / (p v_c))^{1/(p-1)}.
class DualState {
 public:
  explicit DualState(const DiscreteModulusProblem& problem)
      : problem_(problem),
        exponent_(1.0 / (problem.p - 1.0)),
        t_(problem.cells.size(), 0.0),
        lambda_(problem.surfaces.size(), 0.0) {}

  double rho(std::size_t c) const { return rho_at(c, t_[c]); }

  double constraint(std::size_t s) const {
    double sum = 0.0;
    for (const auto& [c, a] : problem_.surfaces[s]) sum += a * rho(c);
    return sum;
  }

  // Maximizes the dual along λ_s, then tries the over-relaxed step
  // relaxation * δ*, kept only when it still increases the dual.
  void update(std::size_t s, double relaxation) {
    const auto& row = problem_.surfaces[s];
    auto h = [&](double delta, double* slope) {
      double value = 0.0, deriv = 0.0;
      for (const auto& [c, a] : row) {
        const double t = std::max(t_[c] + delta * a, 0.0);
        const double r = rho_at(c, t);
        value += a * r;
        if (slope && t > 0.0) deriv += a * a * exponent_ * r / t;
      }
      if (slope) *slope = deriv;
      return value;
    };

    const double lower = -lambda_[s];
    double delta = lower;
    if (h(lower, nullptr) < 1.0) {
      double lo = lower;
      double hi = std::max(1.0, lambda_[s]);
      while (h(hi, nullptr) < 1.0) hi *= 2.0;
      delta = (lambda_[s] > 0.0) ? 0.0 : 0.5 * (lo + hi);
      for (int iter = 0; iter < 200; ++iter) {
        double slope = 0.0;
        const double value = h(delta, &slope) - 1.0;
        if (std::abs(value) <= 1e-15) break;
        if (value < 0.0)
          lo = delta;
        else
          hi = delta;
        double next = (slope > 0.0 && std::isfinite(slope)) ? delta - value / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-16 * std::max(std::abs(lo), std::abs(hi))) break;
        delta = next;
      }
    }
    if (relaxation != 1.0) {
      const double relaxed = std::max(relaxation * delta, lower);
      if (row_dual(s, relaxed) > row_dual(s, 0.0)) delta = relaxed;
    }
    apply(s, delta);
  }

  double dual_value() const {
    double sum = 0.0;
    for (double l : lambda_) sum += l;
    for (std::size_t c = 0; c < t_.size(); ++c)
      sum -= (problem_.p - 1.0) * problem_.cells[c].volume * std::pow(rho(c), problem_.p);
    return sum;
  }

 private:
  double rho_at(std::size_t c, double t) const {
    return t > 0.0 ? std::pow(t / (problem_.p * problem_.cells[c].volume), exponent_) : 0.0;
  }

  // Dual change along λ_s, up to a constant.
  double row_dual(std::size_t s, double delta) const {
    double value = delta;
    for (const auto& [c, a] : problem_.surfaces[s])
      value -= (problem_.p - 1.0) * problem_.cells[c].volume *
               std::pow(rho_at(c, std::max(t_[c] + delta * a, 0.0)), problem_.p);
    return value;
  }

  void apply(std::size_t s, double delta) {
    lambda_[s] = std::max(lambda_[s] + delta, 0.0);
    for (const auto& [c, a] : problem_.surfaces[s]) t_[c] = std::max(t_[c] + delta * a, 0.0);
  }

  const DiscreteModulusProblem& problem_;
  double exponent_;
  std::vector<double> t_;
  std::vector<double> lambda_;
};

constexpr double kOverRelaxation = 1.0;

}  // namespace

DiscreteSolution solve_discrete(const DiscreteModulusProblem& problem, double tol, int max_iters) {
  problem.validate();
  if (!(tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  if (max_iters < 1) throw InvalidArgument("solver iteration cap must be >= 1");

  DualState state(problem);
  const std::size_t surfaces = problem.surfaces.size();
  DiscreteSolution solution;
  solution.density.assign(problem.cells.size(), 0.0);
  if (surfaces == 0) return solution;

  for (int sweep = 1; sweep <= max_iters; ++sweep) {
    for (std::size_t s = 0; s < surfaces; ++s) state.update(s, kOverRelaxation);

    double min_constraint = std::numeric_limits<double>::infinity();
    double violation = 0.0;
    for (std::size_t s = 0; s < surfaces; ++s) {
      const double value = state.constraint(s);
      min_constraint = std::min(min_constraint, value);
      violation = std::max(violation, 1.0 - value);
    }
    double objective = 0.0;
    for (std::size_t c = 0; c < problem.cells.size(); ++c) {
      solution.density[c] = state.rho(c) / min_constraint;
      objective += std::pow(solution.density[c], problem.p) * problem.cells[c].volume;
    }
    const double gap = (objective - state.dual_value()) / objective;
    solution.objective = objective;
    solution.max_constraint_violation = std::max(violation, 0.0);
    solution.duality_gap = gap;
    solution.iterations = sweep;
    if (solution.max_constraint_violation <= tol && gap <= tol) return solution;
  }
  throw NoConvergence("discrete solver hit " + std::to_string(max_iters) +
                      " sweeps (violation=" + std::to_string(solution.max_constraint_violation) +
                      ", gap=" + std::to_string(solution.duality_gap) + ")");
}

void write_problem(std::ostream& out, const DiscreteModulusProblem& problem) {
  const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
  const std::size_t dim = problem.cells.empty() ? 0 : static_cast<std::size_t>(problem.cells.front().center.size());
  out << "pmod-discrete 1\n";
  out << "p " << problem.p << '\n';
  out << "cells " << problem.cells.size() << ' ' << dim << '\n';
  for (const auto& cell : problem.cells) {
    for (Eigen::Index i = 0; i < cell.center.size(); ++i) out << cell.center[i] << ' ';
    out << cell.volume << '\n';
  }
  out << "surfaces " << problem.surfaces.size() << '\n';
  for (const auto& surface : problem.surfaces) {
    for (std::size_t k = 0; k < surface.size(); ++k)
      out << (k ? " " : "") << surface[k].cell << ':' << surface[k].weight;
    out << '\n';
  }
  out.precision(precision);
}

DiscreteModulusProblem read_problem(std::istream& in) {
  auto fail = [](const std::string& what) { return InvalidArgument("malformed discrete problem: " + what); };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "pmod-discrete" || version != 1) throw fail("header");
  DiscreteModulusProblem problem;
  if (!(in >> tag >> problem.p) || tag != "p") throw fail("exponent line");
  std::size_t cells = 0, dim = 0;
  if (!(in >> tag >> cells >> dim) || tag != "cells") throw fail("cells line");
  problem.cells.reserve(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    DiscreteCell cell{Vector(static_cast<Eigen::Index>(dim)), 0.0};
    for (std::size_t i = 0; i < dim; ++i)
      if (!(in >> cell.center[static_cast<Eigen::Index>(i)])) throw fail("cell center");
    if (!(in >> cell.volume)) throw fail("cell volume");
    problem.cells.push_back(std::move(cell));
  }
  std::size_t surfaces = 0;
  if (!(in >> tag >> surfaces) || tag != "surfaces") throw fail("surfaces line");
  std::string line;
  std::getline(in, line);
  for (std::size_t s = 0; s < surfaces; ++s) {
    if (!std::getline(in, line)) throw fail("missing surface line");
    std::istringstream row(line);
    std::vector<CellWeight> surface;
    std::string item;
    while (row >> item) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw fail("surface entry '" + item + "'");
      try {
        surface.push_back({std::stoull(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
      } catch (const std::logic_error&) {
        throw fail("surface entry '" + item + "'");
      }
    }
    problem.surfaces.push_back(std::move(surface));
  }
  problem.validate();
  return problem;
}

DiscretizationCounts discretization_counts(const ParametrizedFamily& fam, int cells_per_axis,
                                           const CrossValidateOptions& options) {
  if (cells_per_axis < 2) throw InvalidArgument("cells_per_axis must be >= 2");
  const int n = fam.n();
  const int k = fam.u().dim();
  const QuadratureScheme probe{16, 1, QuadratureKind::Midpoint};
  const auto xs = tensor_nodes(fam.u(), probe);
  const auto ys = tensor_nodes(fam.v(), probe);
  Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  Vector stretch = Vector::Zero(n);  // max column norm of Df per parameter axis
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      const Vector z = fam.evaluate(x.point, y.point);
      lo = lo.cwiseMin(z);
      hi = hi.cwiseMax(z);
      stretch = stretch.cwiseMax(fam.jacobian_full(x.point, y.point).colwise().norm().transpose());
    }
  }
  const double cell = ((1.0 + 2.0 * kBoundingBoxPadding) * (hi - lo)).minCoeff() / cells_per_axis;
  auto count = [&](int axis, double width, double density) {
    const double needed = std::ceil(density * stretch[axis] * width / cell);
    return static_cast<int>(std::clamp(needed, 2.0, static_cast<double>(options.max_count_per_axis)));
  };
  int surfaces = 2, samples = 2;
  for (int i = 0; i < k; ++i)
    surfaces = std::max(surfaces, count(i, fam.u().upper()[i] - fam.u().lower()[i], options.surfaces_per_cell));
  for (int j = 0; j < fam.m(); ++j)
    samples = std::max(samples, count(k + j, fam.v().upper()[j] - fam.v().lower()[j], options.samples_per_cell));
  return {surfaces, samples};
}

std::vector<ConvergenceRow> cross_validate(const ParametrizedFamily& fam, double p, const ModulusReport& analytic,
                                           const std::vector<int>& grid_ladder, const CrossValidateOptions& options) {
  if (grid_ladder.empty()) throw InvalidArgument("grid ladder is empty");
  if (!(analytic.modulus > 0.0)) throw InvalidArgument("analytic modulus must be positive");
  std::vector<ConvergenceRow> table;
  for (int cells : grid_ladder) {
    const auto counts = discretization_counts(fam, cells, options);
    const auto problem =
        discretize_family(fam, p, cells, counts.surfaces_per_axis, counts.samples_per_axis, options.threads);
    const auto solution = solve_discrete(problem, options.tol, options.max_iters);
    table.push_back({cells, solution.objective,
                     std::abs(solution.objective - analytic.modulus) / analytic.modulus, solution.iterations});
  }
  return table;
}

}  // namespace pmod
