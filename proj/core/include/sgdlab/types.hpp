#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace sgdlab {

// Every landscape here is 1-D or 2-D, so vectors and matrices live on the
// stack with a fixed upper bound.
inline constexpr int kMaxDim = 2;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Invalid user-facing configuration (bad hyperparameters, bounds, grids...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical failure inside the dynamics (non-finite iterate, 0/0 update).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterate or gradient stops being finite. Carries the step
/// index of the offending update when it is known.
class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(const std::string& what, std::optional<std::int64_t> step = std::nullopt)
      : NumericalError(what), step_(step) {}

  std::optional<std::int64_t> step() const noexcept { return step_; }

 private:
  std::optional<std::int64_t> step_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace sgdlab
