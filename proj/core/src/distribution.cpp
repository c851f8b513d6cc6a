#include "sgdlab/distribution.hpp"

#include <cmath>
#include <string>

#include "sgdlab/types.hpp"

namespace sgdlab {

TwoPointDistribution::TwoPointDistribution(double x_hi, double x_lo, double p_hi)
    : x_hi_(x_hi), x_lo_(x_lo), p_hi_(p_hi) {
  if (!(p_hi >= 0.0 && p_hi <= 1.0)) {
    throw ConfigError("two-point distribution: p_hi must lie in [0, 1], got " + std::to_string(p_hi));
  }
  if (!std::isfinite(x_hi) || !std::isfinite(x_lo)) {
    throw ConfigError("two-point distribution: atoms must be finite");
  }
}

double TwoPointDistribution::mean() const noexcept { return p_hi_ * x_hi_ + (1.0 - p_hi_) * x_lo_; }

double TwoPointDistribution::variance() const noexcept {
  // p(1-p)(x_hi - x_lo)^2 is exact and never negative.
  const double d = x_hi_ - x_lo_;
  return p_hi_ * (1.0 - p_hi_) * d * d;
}

}  // namespace sgdlab
