#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sgdlab/landscapes.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

enum class UpdateRule { gd, sgd, adam, amsgrad };

std::string_view to_string(UpdateRule rule);
UpdateRule parse_update_rule(std::string_view name);

/// Learning rate and moment coefficients. beta1/beta2 are ignored by GD/SGD.
struct HyperParams {
  UpdateRule rule = UpdateRule::sgd;
  double lr = 0.1;
  double beta1 = 0.0;
  double beta2 = 0.999;

  /// Throws ConfigError: lr must be finite and >= 0 (0 is the degenerate
  /// frozen run); betas in [0, 1) for the adaptive rules.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Componentwise box [lo, hi]; a disabled box is a no-op.
struct BoxConstraint {
  Vector lo;
  Vector hi;
  bool enabled = false;

  static BoxConstraint none() { return {}; }
  /// Same interval [lo, hi] on every coordinate.
  static BoxConstraint uniform(int dim, double lo, double hi);

  void validate(int dim) const;
  nlohmann::json to_json() const;
};

/// Parameters plus adaptive accumulators. All accumulators start at zero.
struct OptimizerState {
  Vector w;
  Vector m;
  Vector v;
  Vector v_hat;
  std::int64_t t = 0;

  static OptimizerState initial(const Vector& w0);

  friend bool operator==(const OptimizerState& a, const OptimizerState& b) {
    return a.t == b.t && a.w == b.w && a.m == b.m && a.v == b.v && a.v_hat == b.v_hat;
  }
};

/// w' = w - lr * g_hat. Throws DivergenceError (with the step index) when the
/// result is not finite.
OptimizerState sgd_step(const OptimizerState& state, const Vector& g_hat, double lr);

/// sgd_step with the exact mean gradient.
OptimizerState gd_step(const OptimizerState& state, const StochasticObjective& obj, double lr);

/// AMSGrad without epsilon smoothing:
///   m' = b1 m + (1-b1) g,  v' = b2 v + (1-b2) g^2,  vh' = max(vh, v'),
///   w' = w - lr m' / sqrt(vh')                    (all componentwise).
/// A coordinate with vh' = 0 and m' = 0 does not move; vh' = 0 with m' != 0
/// throws NumericalError.
OptimizerState amsgrad_step(const OptimizerState& state, const Vector& g_hat, const HyperParams& hp);

/// "Adam" here is AMSGrad with vh' := v', no bias correction and no epsilon.
/// This is deliberately not the bias-corrected Adam of most libraries.
OptimizerState adam_step(const OptimizerState& state, const Vector& g_hat, const HyperParams& hp);

/// Clamp w into the box; accumulators untouched.
OptimizerState project(const OptimizerState& state, const BoxConstraint& box);

/// One full iteration: draw x (except for GD), compute the gradient at w,
/// apply the rule, then project.
OptimizerState step(const OptimizerState& state, const StochasticObjective& obj, const HyperParams& hp,
                    const BoxConstraint& box, RngStream& rng);

/// Same as step() but updates `state` directly. If it throws, `state` may
/// hold the partially applied update.
void step_in_place(OptimizerState& state, const StochasticObjective& obj, const HyperParams& hp,
                   const BoxConstraint& box, RngStream& rng);

}  // namespace sgdlab
