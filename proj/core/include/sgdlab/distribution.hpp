#pragma once

#include <array>

#include "sgdlab/rng.hpp"

namespace sgdlab {

struct Atom {
  double value;
  double prob;
};

/// Law of the sampled curvature x: x_hi with probability p_hi, else x_lo.
/// A point mass is the special case p_hi = 1 (or x_hi == x_lo).
class TwoPointDistribution {
 public:
  /// Throws ConfigError unless p_hi is in [0, 1] and both atoms are finite.
  TwoPointDistribution(double x_hi, double x_lo, double p_hi);

  /// Atoms {1, a - 1} with equal weight, so that E[x] = a / 2.
  static TwoPointDistribution curvature_family(double a) { return {1.0, a - 1.0, 0.5}; }
  /// Atoms {+1, -1} with equal weight.
  static TwoPointDistribution symmetric_sign() { return {1.0, -1.0, 0.5}; }
  static TwoPointDistribution point_mass(double x) { return {x, x, 1.0}; }

  double x_hi() const noexcept { return x_hi_; }
  double x_lo() const noexcept { return x_lo_; }
  double p_hi() const noexcept { return p_hi_; }

  double mean() const noexcept;
  double variance() const noexcept;

  std::array<Atom, 2> atoms() const noexcept { return {{{x_hi_, p_hi_}, {x_lo_, 1.0 - p_hi_}}}; }

  double sample(RngStream& rng) const { return rng.uniform() < p_hi_ ? x_hi_ : x_lo_; }

 private:
  double x_hi_;
  double x_lo_;
  double p_hi_;
};

inline double sample_noise(const TwoPointDistribution& dist, RngStream& rng) { return dist.sample(rng); }

}  // namespace sgdlab
