#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sgdlab/distribution.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

/// mu = E ln|1 - lr x| and s2 = Var ln|1 - lr x| over the atoms.
struct LogContractionStats {
  double mu = 0.0;
  double s2 = 0.0;
  bool absorbing = false;  // some atom has lr * x == 1, so mu = -inf
};

LogContractionStats log_contraction(const TwoPointDistribution& dist, double lr);

/// Learning-rate window in which SGD on the quadratic collapses onto w = 0:
///   a/(a-1) < lr < (a - sqrt(a^2 - 8a + 8)) / (2(a-1)).
/// For a >= 0 the same algebraic bounds are returned and flagged
/// `minimum_instability`: there the origin is a minimum and the upper bound
/// marks where it stops being stable.
struct TrappedInterval {
  double lr_lo = 0.0;
  double lr_hi = 0.0;
  bool exists = false;
  bool minimum_instability = false;

  bool contains(double lr) const { return exists && lr > lr_lo && lr < lr_hi; }
};

TrappedInterval trapped_interval(double a);

/// gamma(lr) = 1/2 ln[(1 - lr)(1 - lr (a-1))]. Only defined for lr <= 1;
/// larger values throw ConfigError.
double escape_rate_curve(double a, double lr);

struct OptimalEscape {
  double lr_star = 0.0;
  double gamma_star = 0.0;
};

/// lr* = a / (2(a-1)), gamma* = ln[(2-a) / (2 sqrt(1-a))]. Requires a < 0.
OptimalEscape optimal_escape(double a);

/// Largest |a| for which gamma*(a) <= eps:
///   2 |-e^eps sqrt(e^{2 eps} - 1) - e^{2 eps} + 1|.
double epsilon_bound_a(double eps);

struct SharpFlatConstants {
  double b = 0.0;
  bool converges = false;
};

/// b = 1/lr - 6; the dynamics converge iff lr <= (1 + sqrt 6) / 20.
SharpFlatConstants sharpflat_constants(double lr);

double sharpflat_max_lr();

/// AMSGrad with a frozen preconditioner c behaves like SGD at lr' = lr/sqrt(c).
/// Trapped iff lr' lies in the closed trapped interval of a.
bool amsgrad_trapping(double a, double lr_prime);

// ---------------------------------------------------------------------------
// Continuous-time stationary densities

struct FPStationaryParams {
  double a = -1.0;
  double b = 0.0;
  double sigma = 0.0;  // additive-noise strength
  double lr = 0.1;
  double batch_size = 1.0;  // S

  void validate() const;
};

enum class FPKind { quadratic, quartic, additive };

std::string_view to_string(FPKind kind);
FPKind parse_fp_kind(std::string_view name);

struct FPDensity {
  std::vector<double> grid;
  std::vector<double> density;  // empty when delta_at_zero
  bool delta_at_zero = false;
  double exponent = 0.0;  // power of |w| (or of w^2 + S sigma^2 for the additive kind)
};

/// Uniform grid of n points on [-half_width, half_width].
std::vector<double> symmetric_grid(double half_width = 6.0, std::size_t n = 4001);

/// Stationary density on `grid`, normalized by the trapezoid rule.
///   quadratic: |w|^(-2 - S a / lr)
///   quartic:   |w|^(-2 - S a / lr) exp(-S b w^2 / lr)
///   additive:  (w^2 + S sigma^2)^(-1 - S a/(2 lr) + S^2 b sigma^2 / lr) exp(-S b w^2 / lr)
/// For the quadratic and quartic kinds (and the additive kind with sigma = 0)
/// the density concentrates on w = 0 when -S a / (2 lr) < 1. That case
/// returns delta_at_zero = true if `allow_delta_limit`, otherwise throws
/// ConfigError. Outside it the quadratic density has no integrable tail on
/// the real line and is normalized on the finite grid only.
FPDensity fp_stationary_density(const FPStationaryParams& params, FPKind kind, std::span<const double> grid,
                                bool allow_delta_limit = true);

/// Mode of the stationary density: {0} if a > -2 lr / S, else
/// {-w, +w} with w = sqrt(-lr/(S b) - a/(2b)). Requires b > 0.
std::vector<double> fp_mode(const FPStationaryParams& params);

/// Value of a below which the mode leaves the origin: -2 lr / S.
double fp_critical_a(double lr, double batch_size);

/// Escape requires lr < -S a / 2.
double continuous_escape_boundary(double a, double batch_size);

double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace sgdlab
