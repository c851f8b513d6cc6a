#include "sgdlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgdlab/types.hpp"

namespace sgdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite");
}

}  // namespace

LogContractionStats log_contraction(const TwoPointDistribution& dist, double lr) {
  require_finite(lr, "lr");
  LogContractionStats out;
  double m1 = 0.0;
  double m2 = 0.0;
  for (const Atom& atom : dist.atoms()) {
    if (atom.prob == 0.0) continue;
    const double factor = 1.0 - lr * atom.value;
    if (factor == 0.0) {
      out.absorbing = true;
      continue;
    }
    const double l = std::log(std::abs(factor));
    m1 += atom.prob * l;
    m2 += atom.prob * l * l;
  }
  if (out.absorbing) {
    out.mu = -kInf;
    out.s2 = kInf;
    return out;
  }
  out.mu = m1;
  out.s2 = std::max(0.0, m2 - m1 * m1);
  return out;
}

TrappedInterval trapped_interval(double a) {
  require_finite(a, "a");
  TrappedInterval out;
  out.minimum_instability = a >= 0.0;
  const double disc = a * a - 8.0 * a + 8.0;
  // (a - sqrt(D)) / (2(a-1)) rewritten as 4 / (a + sqrt(D)); no 0/0 at a = 1.
  out.lr_lo = a == 1.0 ? kInf : a / (a - 1.0);
  out.lr_hi = disc >= 0.0 ? 4.0 / (a + std::sqrt(disc)) : std::numeric_limits<double>::quiet_NaN();
  out.exists = disc >= 0.0 && out.lr_lo < out.lr_hi;
  return out;
}

double escape_rate_curve(double a, double lr) {
  require_finite(a, "a");
  require_finite(lr, "lr");
  if (lr > 1.0) throw ConfigError("escape_rate_curve: lr > 1 is outside the closed-form regime");
  if (lr < 0.0) throw ConfigError("escape_rate_curve: lr must be >= 0");
  return 0.5 * std::log(std::abs((1.0 - lr) * (1.0 - lr * (a - 1.0))));
}

OptimalEscape optimal_escape(double a) {
  require_finite(a, "a");
  if (!(a < 0.0)) throw ConfigError("optimal_escape requires a < 0");
  return {a / (2.0 * (a - 1.0)), std::log((2.0 - a) / (2.0 * std::sqrt(1.0 - a)))};
}

double epsilon_bound_a(double eps) {
  require_finite(eps, "eps");
  if (eps < 0.0) throw ConfigError("epsilon_bound_a requires eps >= 0");
  const double em1 = std::expm1(2.0 * eps);  // e^{2 eps} - 1
  return 2.0 * std::abs(-std::exp(eps) * std::sqrt(em1) - em1);
}

double sharpflat_max_lr() { return (1.0 + std::sqrt(6.0)) / 20.0; }

SharpFlatConstants sharpflat_constants(double lr) {
  require_finite(lr, "lr");
  if (!(lr > 0.0)) throw ConfigError("sharpflat_constants requires lr > 0");
  return {1.0 / lr - 6.0, lr <= sharpflat_max_lr()};
}

bool amsgrad_trapping(double a, double lr_prime) {
  require_finite(a, "a");
  require_finite(lr_prime, "lr_prime");
  if (!(a < 0.0)) throw ConfigError("amsgrad_trapping requires a < 0");
  if (!(lr_prime > 0.0)) throw ConfigError("amsgrad_trapping requires lr' > 0");
  const TrappedInterval iv = trapped_interval(a);
  return iv.exists && lr_prime >= iv.lr_lo && lr_prime <= iv.lr_hi;
}

// ---------------------------------------------------------------------------

void FPStationaryParams::validate() const {
  require_finite(a, "a");
  require_finite(b, "b");
  require_finite(sigma, "sigma");
  require_finite(lr, "lr");
  require_finite(batch_size, "S");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(batch_size >= 1.0)) throw ConfigError("S must be >= 1");
  if (b < 0.0) throw ConfigError("b must be >= 0");
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
}

std::string_view to_string(FPKind kind) {
  switch (kind) {
    case FPKind::quadratic: return "quadratic";
    case FPKind::quartic: return "quartic";
    case FPKind::additive: return "additive";
  }
  return "?";
}

FPKind parse_fp_kind(std::string_view name) {
  if (name == "quadratic") return FPKind::quadratic;
  if (name == "quartic") return FPKind::quartic;
  if (name == "additive") return FPKind::additive;
  throw ConfigError("unknown density kind '" + std::string(name) + "' (quadratic|quartic|additive)");
}

std::vector<double> symmetric_grid(double half_width, std::size_t n) {
  require_finite(half_width, "half_width");
  if (!(half_width > 0.0)) throw ConfigError("grid half-width must be > 0");
  if (n < 2) throw ConfigError("grid needs at least 2 points");
  std::vector<double> g(n);
  const double h = 2.0 * half_width / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = -half_width + h * static_cast<double>(i);
  if (n % 2 == 1) g[n / 2] = 0.0;
  return g;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

FPDensity fp_stationary_density(const FPStationaryParams& params, FPKind kind, std::span<const double> grid,
                                bool allow_delta_limit) {
  params.validate();
  if (grid.size() < 2) throw ConfigError("density grid needs at least 2 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require_finite(grid[i], "grid point");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("density grid must be strictly increasing");
  }

  const double S = params.batch_size;
  const double lr = params.lr;
  const double b = kind == FPKind::quadratic ? 0.0 : params.b;
  const bool additive = kind == FPKind::additive && params.sigma > 0.0;

  FPDensity out;
  out.grid.assign(grid.begin(), grid.end());

  double shift = 0.0;  // argument is w^2 + shift
  if (additive) {
    shift = S * params.sigma * params.sigma;
    out.exponent = -1.0 - S * params.a / (2.0 * lr) + S * S * b * params.sigma * params.sigma / lr;
  } else {
    const double snr = -S * params.a / (2.0 * lr);
    if (snr < 1.0) {
      if (!allow_delta_limit) {
        throw ConfigError("stationary density is not normalizable: escape needs -S a / (2 lr) > 1, got " +
                          std::to_string(snr));
      }
      out.delta_at_zero = true;
      out.exponent = -2.0 - S * params.a / lr;
      return out;
    }
    out.exponent = -2.0 - S * params.a / lr;
  }
  // |w|^p is evaluated as (w^2)^(p/2)
  const double log_power = additive ? out.exponent : 0.5 * out.exponent;

  std::vector<double> logp(grid.size());
  double max_log = -kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w2 = grid[i] * grid[i];
    const double base = w2 + shift;
    double lp = -S * b * w2 / lr;
    if (log_power != 0.0) lp += log_power * std::log(base);
    logp[i] = lp;
    if (lp > max_log) max_log = lp;
  }
  if (!std::isfinite(max_log)) throw NumericalError("stationary density has no finite values on the grid");
  out.density.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out.density[i] = std::exp(logp[i] - max_log);
  const double z = trapezoid(out.grid, out.density);
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("stationary density failed to normalize");
  for (double& d : out.density) d /= z;
  return out;
}

std::vector<double> fp_mode(const FPStationaryParams& params) {
  params.validate();
  if (!(params.b > 0.0)) throw ConfigError("fp_mode requires b > 0");
  if (params.a > fp_critical_a(params.lr, params.batch_size)) return {0.0};
  const double w2 = -params.lr / (params.batch_size * params.b) - params.a / (2.0 * params.b);
  if (!(w2 > 0.0)) return {0.0};
  const double w = std::sqrt(w2);
  return {-w, w};
}

double fp_critical_a(double lr, double batch_size) { return -2.0 * lr / batch_size; }

double continuous_escape_boundary(double a, double batch_size) {
  require_finite(a, "a");
  require_finite(batch_size, "S");
  if (!(a < 0.0)) throw ConfigError("continuous_escape_boundary requires a < 0");
  if (!(batch_size >= 1.0)) throw ConfigError("S must be >= 1");
  return -batch_size * a / 2.0;
}

}  // namespace sgdlab
