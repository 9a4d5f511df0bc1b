#pragma once

#include "pmod/family.hpp"
#include "pmod/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace pmod {

/// Smallest accepted exponent; p must exceed 1 strictly.
inline constexpr double kMinExponent = 1.0 + 1e-9;
/// |J_f| below this fraction of the probe-grid median is treated as degenerate.
inline constexpr double kDegenerateJacobianRatio = 1e-12;
/// Sampled l(x) below this value is treated as vanishing.
inline constexpr double kVanishingLength = 1e-300;

/// Conjugate exponent q = p / (p - 1). Throws InvalidArgument unless p > 1.
double conjugate_exponent(double p);

/// |J_f| threshold for a family: kDegenerateJacobianRatio times the median of
/// |J_f| over a 4-per-axis probe grid in U x V.
double degenerate_jacobian_threshold(const ParametrizedFamily& fam);

struct LengthSample {
  Vector x;
  double l;
};

struct ModulusReport {
  double p = 0.0;
  double q = 0.0;
  double modulus = 0.0;
  std::vector<LengthSample> l_samples;  // at the outer quadrature nodes of U
  double min_jacobian = 0.0;
  std::size_t node_count = 0;
  /// |mod(2 * subdivisions) - mod(subdivisions)| when requested.
  std::optional<double> quadrature_error;
};

struct ModulusOptions {
  unsigned threads = 0;  // 0: all hardware threads
  bool estimate_error = false;
};

/// l(x) = ∫_V (|J^y_f| / |J_f|)^q |J_f| dy.
double l_of_x(const ParametrizedFamily& fam, const Vector& x, double p, const QuadratureScheme& quad);

/// mod_p(Σ) = ∫_U l(x)^{1-p} dx with l evaluated exactly at the outer nodes.
ModulusReport modulus_p(const ParametrizedFamily& fam, double p, const QuadratureScheme& quad,
                        const ModulusOptions& options = {});

enum class LengthMode { Recompute, Tabulate };

/// The extremal density f_Σ = (1 / l(x)) (|J^y_f| / |J_f|)^{q-1}, z = f(x, y).
class ExtremalDensity {
 public:
  ExtremalDensity(ParametrizedFamily fam, double p, QuadratureScheme quad, LengthMode mode = LengthMode::Recompute,
                  int table_points = 33);

  const ParametrizedFamily& family() const { return fam_; }
  double p() const { return p_; }
  double q() const { return q_; }
  const QuadratureScheme& quadrature() const { return quad_; }

  /// l(x), recomputed or interpolated (multilinear on a uniform grid).
  double length(const Vector& x) const;
  /// (|J^y_f| / |J_f|)^{q-1} at (x, y).
  double shape(const Vector& x, const Vector& y) const;
  double evaluate_param(const Vector& x, const Vector& y) const;

  /// f^{-1}(z): the family's inverse when supplied, else damped Newton seeded
  /// from the nearest point of a coarse forward grid. Throws InversionFailure.
  std::pair<Vector, Vector> invert(const Vector& z) const;
  double evaluate_ambient(const Vector& z) const;

 private:
  double interpolate(const Vector& x) const;

  ParametrizedFamily fam_;
  double p_;
  double q_;
  QuadratureScheme quad_;
  LengthMode mode_;
  double threshold_;

  int table_points_ = 0;
  std::vector<double> table_;

  std::vector<std::pair<Vector, Vector>> seed_params_;
  std::vector<Vector> seed_images_;
  double diameter_ = 0.0;
};

inline constexpr int kNewtonMaxIterations = 50;
inline constexpr double kNewtonRelativeTolerance = 1e-10;

struct SurfaceIntegral {
  Vector x;
  double integral;
};

/// ∫_{σ_x} f_Σ dH^m for each sampled x, by pullback ∫_V f_Σ(x, y) |J^y_f| dy.
std::vector<SurfaceIntegral> admissibility_check(const ParametrizedFamily& fam, const ExtremalDensity& density,
                                                 const QuadratureScheme& quad, std::span<const Vector> x_samples);

struct CoareaCheck {
  double lhs;  // ∫_Ω g |J_F| dz through f
  double rhs;  // ∫_U ∫_{σ_x} g dH^m dx
};

using ScalarField = std::function<double(const Vector& z)>;

CoareaCheck coarea_check(const ParametrizedFamily& fam, const Submersion& submersion, const ScalarField& g,
                         const QuadratureScheme& quad, unsigned threads = 0);

/// Level-set tolerances used by submersion_modulus's consistency probe.
inline constexpr double kSubmersionResidualTolerance = 1e-5;
inline constexpr double kSubmersionLevelTolerance = 1e-6;

/// mod_p of the level sets of F: ∫_U ĥ(x)^{1-p} dx, ĥ(x) = ∫_{σ_x} |J_F|^{q-1} dH^m.
/// `levelset_param` must satisfy F(f(x, y)) = x; a 3-per-axis probe grid is
/// checked first and InconsistentSubmersion raised on failure.
ModulusReport submersion_modulus(const Submersion& submersion, const ParametrizedFamily& levelset_param, double p,
                                 const QuadratureScheme& quad, const ModulusOptions& options = {});

struct ExtremalityOptions {
  double amplitude = 0.3;  // perturbation amplitude relative to min density
  int harmonics = 2;       // trigonometric degree per axis
  unsigned threads = 0;
};

/// Smallest (energy - modulus) over `trials` random admissible competitors of
/// the form (f_Σ + smooth perturbation) / min surface integral.
double extremality_probe(const ParametrizedFamily& fam, double p, const QuadratureScheme& quad, int trials,
                         std::uint64_t seed, const ExtremalityOptions& options = {});

}  // namespace pmod
