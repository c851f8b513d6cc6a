#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlab/distribution.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

enum class CriticalKind { minimum, saddle_or_max, manifold };

std::string_view to_string(CriticalKind kind);

/// One entry of a landscape's closed-form critical-point catalog.
///
/// Isolated points carry their location; manifolds carry a parametric
/// description, five representative points and a distance function. The
/// `location` of a manifold entry is its first representative point.
struct CriticalPoint {
  std::string label;
  CriticalKind kind = CriticalKind::minimum;
  Vector location;
  double mean_loss = 0.0;
  double sharpness = 0.0;  // NaN for manifolds (sharpness varies along them)
  std::string description;
  std::vector<Vector> samples;
  std::function<double(const Vector&)> distance;  // Euclidean for isolated points

  double distance_to(const Vector& w) const;
};

/// A stochastic objective: sampled loss L(w; x) with x drawn from a finite
/// two-atom law, plus closed-form expectations, Hessian and catalog.
///
/// Objects are immutable after construction; every member is a pure function
/// of its inputs.
class StochasticObjective {
 public:
  virtual ~StochasticObjective() = default;

  virtual std::string_view name() const = 0;
  virtual int dim() const = 0;
  virtual const TwoPointDistribution& noise() const = 0;

  virtual double sample_loss(const Vector& w, double x) const = 0;

  /// Gradient of the sampled loss. Throws DivergenceError on non-finite w.
  Vector sample_grad(const Vector& w, double x) const;

  /// Closed-form E_x[L(w; x)] and its gradient. Throw on non-finite w.
  double mean_loss(const Vector& w) const;
  Vector mean_grad(const Vector& w) const;

  /// Second derivatives of mean_loss.
  virtual Matrix hessian(const Vector& w) const = 0;

  virtual std::vector<CriticalPoint> critical_point_catalog() const = 0;

  /// Construction parameters, echoed into provenance records.
  virtual nlohmann::json describe() const = 0;

  /// Gradient without the finiteness check; used in the inner loop of the
  /// ensemble, which validates the iterate itself.
  virtual Vector sample_grad_unchecked(const Vector& w, double x) const = 0;

 protected:
  virtual double mean_loss_impl(const Vector& w) const = 0;
  virtual Vector mean_grad_impl(const Vector& w) const = 0;
};

/// L(w; x) = x w^2 / 2, x ~ {1, a-1} with equal weight. Mean loss a w^2 / 4.
class QuadraticObjective final : public StochasticObjective {
 public:
  explicit QuadraticObjective(double a);

  double a() const noexcept { return a_; }

  std::string_view name() const override { return "quadratic"; }
  int dim() const override { return 1; }
  const TwoPointDistribution& noise() const override { return dist_; }
  double sample_loss(const Vector& w, double x) const override;
  Vector sample_grad_unchecked(const Vector& w, double x) const override;
  Matrix hessian(const Vector& w) const override;
  std::vector<CriticalPoint> critical_point_catalog() const override;
  nlohmann::json describe() const override;

 protected:
  double mean_loss_impl(const Vector& w) const override;
  Vector mean_grad_impl(const Vector& w) const override;

 private:
  double a_;
  TwoPointDistribution dist_;
};

/// L(w; x) = x w^2 / 2 + w^4 / 4 with the same curvature law as the quadratic.
class QuarticObjective final : public StochasticObjective {
 public:
  explicit QuarticObjective(double a);

  double a() const noexcept { return a_; }

  std::string_view name() const override { return "quartic"; }
  int dim() const override { return 1; }
  const TwoPointDistribution& noise() const override { return dist_; }
  double sample_loss(const Vector& w, double x) const override;
  Vector sample_grad_unchecked(const Vector& w, double x) const override;
  Matrix hessian(const Vector& w) const override;
  std::vector<CriticalPoint> critical_point_catalog() const override;
  nlohmann::json describe() const override;

 protected:
  double mean_loss_impl(const Vector& w) const override;
  Vector mean_grad_impl(const Vector& w) const override;

 private:
  double a_;
  TwoPointDistribution dist_;
};

/// Two flat minima (+-1/sqrt2, 0) and two sharp minima (0, +-sqrt((1+a)/2)).
/// The noise x in {+1, -1} only multiplies the b w1^2 term, so it vanishes in
/// the mean but makes w1 multiplicatively noisy.
///
///   L(w; x) = 1/2 [ -(w1-w2)^2 - (w1+w2)^2 + (w1-w2)^4 + (w1+w2)^4
///                   - 2 a w2^2 + x b w1^2 ]
class SharpFlatObjective final : public StochasticObjective {
 public:
  /// Requires a > 0 and b > 0.
  SharpFlatObjective(double a, double b);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  std::string_view name() const override { return "sharpflat"; }
  int dim() const override { return 2; }
  const TwoPointDistribution& noise() const override { return dist_; }
  double sample_loss(const Vector& w, double x) const override;
  Vector sample_grad_unchecked(const Vector& w, double x) const override;
  Matrix hessian(const Vector& w) const override;
  std::vector<CriticalPoint> critical_point_catalog() const override;
  nlohmann::json describe() const override;

 protected:
  double mean_loss_impl(const Vector& w) const override;
  Vector mean_grad_impl(const Vector& w) const override;

 private:
  double a_;
  double b_;
  TwoPointDistribution dist_;
};

/// Two-layer, one-neuron net f(w) = w2 * (w1 * 1)^2 fitted with squared error
/// to a label y in {-1, 2} (equal weight): L(w; y) = (w2 w1^2 - y)^2.
/// Mean loss 1/2 (f + 1)^2 + 1/2 (f - 2)^2; global minimum 2.25 on
/// {w2 w1^2 = 1/2}, saddle manifold {w1 = 0, w2 >= 0} at 2.5.
///
/// The Hessian is taken by central differences of the analytic mean gradient.
class ToyNetObjective final : public StochasticObjective {
 public:
  explicit ToyNetObjective(double hessian_step = 1e-4);

  static constexpr double kGlobalMinLoss = 2.25;
  static constexpr double kSaddleLoss = 2.5;

  std::string_view name() const override { return "toynet"; }
  int dim() const override { return 2; }
  const TwoPointDistribution& noise() const override { return dist_; }
  double sample_loss(const Vector& w, double y) const override;
  Vector sample_grad_unchecked(const Vector& w, double y) const override;
  Matrix hessian(const Vector& w) const override;
  std::vector<CriticalPoint> critical_point_catalog() const override;
  nlohmann::json describe() const override;

  /// Distance to {w2 w1^2 = 1/2} and to {w1 = 0, w2 >= 0}.
  static double distance_to_global_min_manifold(const Vector& w);
  static double distance_to_saddle_manifold(const Vector& w);

 protected:
  double mean_loss_impl(const Vector& w) const override;
  Vector mean_grad_impl(const Vector& w) const override;

 private:
  double hessian_step_;
  TwoPointDistribution dist_;
};

/// Central-difference Hessian of mean_grad with the given step; symmetrized.
Matrix numerical_hessian(const StochasticObjective& obj, const Vector& w, double step);

/// Central-difference gradient of mean_loss.
Vector numerical_gradient(const StochasticObjective& obj, const Vector& w, double step);

/// Trace of the Hessian at a catalog critical point. Throws ConfigError when
/// ||mean_grad(w_star)|| > 1e-8.
double sharpness(const StochasticObjective& obj, const Vector& w_star);

/// Atom-weighted average of sample_grad; equals mean_grad up to rounding.
Vector atom_average_grad(const StochasticObjective& obj, const Vector& w);
double atom_average_loss(const StochasticObjective& obj, const Vector& w);

/// Plain-text landscape configuration: landscape in {quadratic, quartic,
/// sharpflat, toynet}; a, b used where the landscape takes them.
struct LandscapeConfig {
  std::string landscape = "quadratic";
  double a = -1.0;
  double b = 14.0;
  double batch_size = 1.0;  // S; used only by continuous-time theory

  static LandscapeConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

std::unique_ptr<StochasticObjective> make_landscape(const LandscapeConfig& config);

Vector make_vector(std::initializer_list<double> values);

}  // namespace sgdlab
