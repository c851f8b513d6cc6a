#include "sgdlab/optimizers.hpp"

#include <cmath>
#include <string>

namespace sgdlab {
namespace {

void check_result(const OptimizerState& s, const char* rule) {
  if (!all_finite(s.w)) {
    throw DivergenceError(std::string(rule) + " update produced a non-finite iterate at step " + std::to_string(s.t),
                          s.t);
  }
}

void check_gradient(const Vector& g, std::int64_t t) {
  if (!all_finite(g)) {
    throw DivergenceError("non-finite gradient at step " + std::to_string(t + 1), t + 1);
  }
}

void apply_sgd(OptimizerState& s, const Vector& g_hat, double lr) {
  check_gradient(g_hat, s.t);
  s.t += 1;
  s.w -= lr * g_hat;
  check_result(s, "sgd");
}

void apply_adaptive(OptimizerState& s, const Vector& g_hat, const HyperParams& hp, bool running_max) {
  check_gradient(g_hat, s.t);
  s.t += 1;
  s.m = hp.beta1 * s.m + (1.0 - hp.beta1) * g_hat;
  s.v = hp.beta2 * s.v + (1.0 - hp.beta2) * g_hat.cwiseProduct(g_hat);
  s.v_hat = running_max ? s.v_hat.cwiseMax(s.v) : s.v;
  for (Eigen::Index i = 0; i < s.w.size(); ++i) {
    const double denom = s.v_hat(i);
    if (denom == 0.0) {
      if (s.m(i) != 0.0) {
        throw NumericalError("adaptive update: zero preconditioner with non-zero first moment at step " +
                             std::to_string(s.t));
      }
      continue;
    }
    s.w(i) -= hp.lr * s.m(i) / std::sqrt(denom);
  }
  check_result(s, running_max ? "amsgrad" : "adam");
}

void apply_projection(OptimizerState& s, const BoxConstraint& box) {
  if (box.enabled) s.w = s.w.cwiseMax(box.lo).cwiseMin(box.hi);
}

}  // namespace

std::string_view to_string(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::gd:
      return "gd";
    case UpdateRule::sgd:
      return "sgd";
    case UpdateRule::adam:
      return "adam";
    case UpdateRule::amsgrad:
      return "amsgrad";
  }
  return "unknown";
}

UpdateRule parse_update_rule(std::string_view name) {
  if (name == "gd" || name == "GD") return UpdateRule::gd;
  if (name == "sgd" || name == "SGD") return UpdateRule::sgd;
  if (name == "adam" || name == "Adam") return UpdateRule::adam;
  if (name == "amsgrad" || name == "AMSGrad") return UpdateRule::amsgrad;
  throw ConfigError("unknown update rule '" + std::string(name) + "' (expected gd|sgd|adam|amsgrad)");
}

void HyperParams::validate() const {
  if (!std::isfinite(lr) || lr < 0.0) throw ConfigError("learning rate must be finite and non-negative");
  if (rule == UpdateRule::adam || rule == UpdateRule::amsgrad) {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  }
}

nlohmann::json HyperParams::to_json() const {
  return {{"rule", std::string(to_string(rule))}, {"lr", lr}, {"beta1", beta1}, {"beta2", beta2}};
}

BoxConstraint BoxConstraint::uniform(int dim, double lo, double hi) {
  BoxConstraint box;
  box.lo = Vector::Constant(dim, lo);
  box.hi = Vector::Constant(dim, hi);
  box.enabled = true;
  return box;
}

void BoxConstraint::validate(int dim) const {
  if (!enabled) return;
  if (lo.size() != dim || hi.size() != dim) throw ConfigError("box dimension does not match the landscape");
  if ((lo.array() > hi.array()).any()) throw ConfigError("box requires lo <= hi componentwise");
}

nlohmann::json BoxConstraint::to_json() const {
  if (!enabled) return nullptr;
  nlohmann::json j;
  j["lo"] = std::vector<double>(lo.data(), lo.data() + lo.size());
  j["hi"] = std::vector<double>(hi.data(), hi.data() + hi.size());
  return j;
}

OptimizerState OptimizerState::initial(const Vector& w0) {
  OptimizerState s;
  s.w = w0;
  s.m = Vector::Zero(w0.size());
  s.v = Vector::Zero(w0.size());
  s.v_hat = Vector::Zero(w0.size());
  return s;
}

OptimizerState sgd_step(const OptimizerState& state, const Vector& g_hat, double lr) {
  OptimizerState next = state;
  apply_sgd(next, g_hat, lr);
  return next;
}

OptimizerState gd_step(const OptimizerState& state, const StochasticObjective& obj, double lr) {
  return sgd_step(state, obj.mean_grad(state.w), lr);
}

OptimizerState amsgrad_step(const OptimizerState& state, const Vector& g_hat, const HyperParams& hp) {
  OptimizerState next = state;
  apply_adaptive(next, g_hat, hp, true);
  return next;
}

OptimizerState adam_step(const OptimizerState& state, const Vector& g_hat, const HyperParams& hp) {
  OptimizerState next = state;
  apply_adaptive(next, g_hat, hp, false);
  return next;
}

OptimizerState project(const OptimizerState& state, const BoxConstraint& box) {
  OptimizerState out = state;
  apply_projection(out, box);
  return out;
}

void step_in_place(OptimizerState& state, const StochasticObjective& obj, const HyperParams& hp,
                   const BoxConstraint& box, RngStream& rng) {
  switch (hp.rule) {
    case UpdateRule::gd:
      apply_sgd(state, obj.mean_grad(state.w), hp.lr);
      break;
    case UpdateRule::sgd:
      apply_sgd(state, obj.sample_grad(state.w, obj.noise().sample(rng)), hp.lr);
      break;
    case UpdateRule::adam:
      apply_adaptive(state, obj.sample_grad(state.w, obj.noise().sample(rng)), hp, false);
      break;
    case UpdateRule::amsgrad:
      apply_adaptive(state, obj.sample_grad(state.w, obj.noise().sample(rng)), hp, true);
      break;
  }
  apply_projection(state, box);
}

OptimizerState step(const OptimizerState& state, const StochasticObjective& obj, const HyperParams& hp,
                    const BoxConstraint& box, RngStream& rng) {
  OptimizerState next = state;
  step_in_place(next, obj, hp, box, rng);
  return next;
}

}  // namespace sgdlab
