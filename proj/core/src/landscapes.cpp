#include "sgdlab/landscapes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace sgdlab {
namespace {

void require_finite(const Vector& w, const char* where) {
  if (!all_finite(w)) {
    throw DivergenceError(std::string(where) + ": non-finite parameter (the trajectory has diverged)");
  }
}

Vector scalar(double v) {
  Vector out(1);
  out(0) = v;
  return out;
}

Matrix scalar_matrix(double v) {
  Matrix out(1, 1);
  out(0, 0) = v;
  return out;
}

// Kind of an isolated critical point from the Hessian spectrum.
CriticalKind kind_from_hessian(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() > 0.0 ? CriticalKind::minimum : CriticalKind::saddle_or_max;
}

CriticalPoint isolated(const StochasticObjective& obj, std::string label, Vector location) {
  CriticalPoint cp;
  cp.label = std::move(label);
  const Matrix h = obj.hessian(location);
  cp.kind = kind_from_hessian(h);
  cp.mean_loss = obj.mean_loss(location);
  cp.sharpness = h.trace();
  cp.location = location;
  cp.samples = {location};
  return cp;
}

}  // namespace

std::string_view to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::minimum:
      return "min";
    case CriticalKind::saddle_or_max:
      return "saddle/max";
    case CriticalKind::manifold:
      return "manifold";
  }
  return "unknown";
}

double CriticalPoint::distance_to(const Vector& w) const {
  if (distance) return distance(w);
  return (w - location).norm();
}

Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// ---------------------------------------------------------------------------
// StochasticObjective

Vector StochasticObjective::sample_grad(const Vector& w, double x) const {
  require_finite(w, "sample_grad");
  return sample_grad_unchecked(w, x);
}

double StochasticObjective::mean_loss(const Vector& w) const {
  require_finite(w, "mean_loss");
  return mean_loss_impl(w);
}

Vector StochasticObjective::mean_grad(const Vector& w) const {
  require_finite(w, "mean_grad");
  return mean_grad_impl(w);
}

Vector atom_average_grad(const StochasticObjective& obj, const Vector& w) {
  Vector acc = Vector::Zero(w.size());
  for (const Atom& atom : obj.noise().atoms()) {
    if (atom.prob > 0.0) acc += atom.prob * obj.sample_grad(w, atom.value);
  }
  return acc;
}

double atom_average_loss(const StochasticObjective& obj, const Vector& w) {
  double acc = 0.0;
  for (const Atom& atom : obj.noise().atoms()) {
    if (atom.prob > 0.0) acc += atom.prob * obj.sample_loss(w, atom.value);
  }
  return acc;
}

Matrix numerical_hessian(const StochasticObjective& obj, const Vector& w, double step) {
  const Eigen::Index n = w.size();
  Matrix h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector plus = w;
    Vector minus = w;
    plus(j) += step;
    minus(j) -= step;
    h.col(j) = (obj.mean_grad(plus) - obj.mean_grad(minus)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Vector numerical_gradient(const StochasticObjective& obj, const Vector& w, double step) {
  Vector g(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    Vector plus = w;
    Vector minus = w;
    plus(j) += step;
    minus(j) -= step;
    g(j) = (obj.mean_loss(plus) - obj.mean_loss(minus)) / (2.0 * step);
  }
  return g;
}

double sharpness(const StochasticObjective& obj, const Vector& w_star) {
  const double gnorm = obj.mean_grad(w_star).norm();
  if (gnorm > 1e-8) {
    throw ConfigError("sharpness: point is not a critical point of the mean loss (|grad| = " +
                      std::to_string(gnorm) + ")");
  }
  return obj.hessian(w_star).trace();
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticObjective::QuadraticObjective(double a) : a_(a), dist_(TwoPointDistribution::curvature_family(a)) {}

double QuadraticObjective::sample_loss(const Vector& w, double x) const { return 0.5 * x * w(0) * w(0); }

Vector QuadraticObjective::sample_grad_unchecked(const Vector& w, double x) const { return scalar(x * w(0)); }

double QuadraticObjective::mean_loss_impl(const Vector& w) const { return 0.25 * a_ * w(0) * w(0); }

Vector QuadraticObjective::mean_grad_impl(const Vector& w) const { return scalar(0.5 * a_ * w(0)); }

Matrix QuadraticObjective::hessian(const Vector&) const { return scalar_matrix(0.5 * a_); }

std::vector<CriticalPoint> QuadraticObjective::critical_point_catalog() const {
  CriticalPoint origin;
  origin.label = "origin";
  // a == 0 makes the whole line flat; report it as a (degenerate) minimum.
  origin.kind = a_ < 0.0 ? CriticalKind::saddle_or_max : CriticalKind::minimum;
  origin.location = scalar(0.0);
  origin.mean_loss = 0.0;
  origin.sharpness = 0.5 * a_;
  origin.samples = {origin.location};
  return {origin};
}

nlohmann::json QuadraticObjective::describe() const { return {{"landscape", "quadratic"}, {"a", a_}}; }

// ---------------------------------------------------------------------------
// Quartic

QuarticObjective::QuarticObjective(double a) : a_(a), dist_(TwoPointDistribution::curvature_family(a)) {}

double QuarticObjective::sample_loss(const Vector& w, double x) const {
  const double w2 = w(0) * w(0);
  return 0.5 * x * w2 + 0.25 * w2 * w2;
}

Vector QuarticObjective::sample_grad_unchecked(const Vector& w, double x) const {
  const double v = w(0);
  return scalar(x * v + v * v * v);
}

double QuarticObjective::mean_loss_impl(const Vector& w) const {
  const double w2 = w(0) * w(0);
  return 0.25 * a_ * w2 + 0.25 * w2 * w2;
}

Vector QuarticObjective::mean_grad_impl(const Vector& w) const {
  const double v = w(0);
  return scalar(0.5 * a_ * v + v * v * v);
}

Matrix QuarticObjective::hessian(const Vector& w) const { return scalar_matrix(0.5 * a_ + 3.0 * w(0) * w(0)); }

std::vector<CriticalPoint> QuarticObjective::critical_point_catalog() const {
  std::vector<CriticalPoint> out;
  CriticalPoint origin = isolated(*this, "origin", scalar(0.0));
  if (a_ == 0.0) origin.kind = CriticalKind::minimum;  // quartic-flat minimum
  out.push_back(std::move(origin));
  if (a_ < 0.0) {
    const double r = std::sqrt(-0.5 * a_);
    out.push_back(isolated(*this, "min+", scalar(r)));
    out.push_back(isolated(*this, "min-", scalar(-r)));
  }
  return out;
}

nlohmann::json QuarticObjective::describe() const { return {{"landscape", "quartic"}, {"a", a_}}; }

// ---------------------------------------------------------------------------
// Sharp/flat

SharpFlatObjective::SharpFlatObjective(double a, double b)
    : a_(a), b_(b), dist_(TwoPointDistribution::symmetric_sign()) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ConfigError("sharpflat landscape requires a > 0 and b > 0");
  }
}

double SharpFlatObjective::sample_loss(const Vector& w, double x) const {
  const double d = w(0) - w(1);
  const double s = w(0) + w(1);
  return 0.5 * (-d * d - s * s + d * d * d * d + s * s * s * s - 2.0 * a_ * w(1) * w(1) + x * b_ * w(0) * w(0));
}

Vector SharpFlatObjective::sample_grad_unchecked(const Vector& w, double x) const {
  const double w1 = w(0);
  const double w2 = w(1);
  Vector g(2);
  g(0) = -2.0 * w1 + 4.0 * w1 * w1 * w1 + 12.0 * w1 * w2 * w2 + x * b_ * w1;
  g(1) = -2.0 * w2 + 4.0 * w2 * w2 * w2 + 12.0 * w1 * w1 * w2 - 2.0 * a_ * w2;
  return g;
}

double SharpFlatObjective::mean_loss_impl(const Vector& w) const {
  const double p = w(0) * w(0);
  const double q = w(1) * w(1);
  return -p - q + p * p + 6.0 * p * q + q * q - a_ * q;
}

Vector SharpFlatObjective::mean_grad_impl(const Vector& w) const {
  const double w1 = w(0);
  const double w2 = w(1);
  Vector g(2);
  g(0) = -2.0 * w1 + 4.0 * w1 * w1 * w1 + 12.0 * w1 * w2 * w2;
  g(1) = -2.0 * w2 + 4.0 * w2 * w2 * w2 + 12.0 * w1 * w1 * w2 - 2.0 * a_ * w2;
  return g;
}

Matrix SharpFlatObjective::hessian(const Vector& w) const {
  const double w1 = w(0);
  const double w2 = w(1);
  Matrix h(2, 2);
  h(0, 0) = -2.0 + 12.0 * w1 * w1 + 12.0 * w2 * w2;
  h(1, 1) = -2.0 - 2.0 * a_ + 12.0 * w1 * w1 + 12.0 * w2 * w2;
  h(0, 1) = h(1, 0) = 24.0 * w1 * w2;
  return h;
}

std::vector<CriticalPoint> SharpFlatObjective::critical_point_catalog() const {
  std::vector<CriticalPoint> out;
  const double flat = 1.0 / std::numbers::sqrt2;
  const double sharp = std::sqrt(0.5 * (1.0 + a_));
  out.push_back(isolated(*this, "flat+", make_vector({flat, 0.0})));
  out.push_back(isolated(*this, "flat-", make_vector({-flat, 0.0})));
  out.push_back(isolated(*this, "sharp+", make_vector({0.0, sharp})));
  out.push_back(isolated(*this, "sharp-", make_vector({0.0, -sharp})));
  out.push_back(isolated(*this, "origin", make_vector({0.0, 0.0})));
  // Off-axis saddles exist while both squared coordinates are positive.
  if (a_ < 2.0) {
    const double u = std::sqrt((2.0 + 3.0 * a_) / 16.0);
    const double v = std::sqrt((2.0 - a_) / 16.0);
    out.push_back(isolated(*this, "saddle++", make_vector({u, v})));
    out.push_back(isolated(*this, "saddle+-", make_vector({u, -v})));
    out.push_back(isolated(*this, "saddle-+", make_vector({-u, v})));
    out.push_back(isolated(*this, "saddle--", make_vector({-u, -v})));
  }
  return out;
}

nlohmann::json SharpFlatObjective::describe() const {
  return {{"landscape", "sharpflat"}, {"a", a_}, {"b", b_}};
}

// ---------------------------------------------------------------------------
// Toy net

ToyNetObjective::ToyNetObjective(double hessian_step)
    : hessian_step_(hessian_step), dist_(-1.0, 2.0, 0.5) {
  if (!(hessian_step > 0.0)) throw ConfigError("toynet: Hessian step must be positive");
}

double ToyNetObjective::sample_loss(const Vector& w, double y) const {
  const double r = w(1) * w(0) * w(0) - y;
  return r * r;
}

Vector ToyNetObjective::sample_grad_unchecked(const Vector& w, double y) const {
  const double w1 = w(0);
  const double w2 = w(1);
  const double r2 = 2.0 * (w2 * w1 * w1 - y);
  Vector g(2);
  g(0) = r2 * 2.0 * w1 * w2;
  g(1) = r2 * w1 * w1;
  return g;
}

double ToyNetObjective::mean_loss_impl(const Vector& w) const {
  const double f = w(1) * w(0) * w(0);
  return 0.5 * (f + 1.0) * (f + 1.0) + 0.5 * (f - 2.0) * (f - 2.0);
}

Vector ToyNetObjective::mean_grad_impl(const Vector& w) const {
  const double w1 = w(0);
  const double w2 = w(1);
  const double c = 2.0 * w2 * w1 * w1 - 1.0;
  Vector g(2);
  g(0) = c * 2.0 * w1 * w2;
  g(1) = c * w1 * w1;
  return g;
}

Matrix ToyNetObjective::hessian(const Vector& w) const { return numerical_hessian(*this, w, hessian_step_); }

double ToyNetObjective::distance_to_saddle_manifold(const Vector& w) {
  return std::hypot(w(0), std::min(w(1), 0.0));
}

double ToyNetObjective::distance_to_global_min_manifold(const Vector& w) {
  // The manifold is {(s, 1/(2 s^2)) : s != 0}; by symmetry in w1 search s > 0.
  const double p = std::abs(w(0));
  const double q = w(1);
  auto d2 = [p, q](double s) {
    const double dy = 0.5 / (s * s) - q;
    return (s - p) * (s - p) + dy * dy;
  };
  const double s_max = std::max(10.0, 2.0 * p + 2.0);
  constexpr int kScan = 600;
  const double log_lo = std::log(1e-3);
  const double log_hi = std::log(s_max);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double s = std::exp(log_lo + (log_hi - log_lo) * i / kScan);
    const double v = d2(s);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = std::exp(log_lo + (log_hi - log_lo) * std::max(best - 1, 0) / kScan);
  double hi = std::exp(log_lo + (log_hi - log_lo) * std::min(best + 1, kScan) / kScan);
  // Golden-section refinement on the bracketing cell pair.
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = d2(x1);
  double f2 = d2(x2);
  for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = d2(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = d2(x2);
    }
  }
  return std::sqrt(std::min({best_val, f1, f2}));
}

std::vector<CriticalPoint> ToyNetObjective::critical_point_catalog() const {
  std::vector<CriticalPoint> out;

  CriticalPoint global;
  global.label = "global_min_manifold";
  global.kind = CriticalKind::manifold;
  global.mean_loss = kGlobalMinLoss;
  global.sharpness = std::numeric_limits<double>::quiet_NaN();
  global.description = "{(w1, w2) : w2 * w1^2 = 1/2}, parametrized by w1 = s != 0, w2 = 1/(2 s^2)";
  for (double s : {1.0 / std::numbers::sqrt2, 1.0, 2.0, -1.0, -0.5}) {
    global.samples.push_back(make_vector({s, 0.5 / (s * s)}));
  }
  global.location = global.samples.front();
  global.distance = &ToyNetObjective::distance_to_global_min_manifold;
  out.push_back(std::move(global));

  CriticalPoint saddle;
  saddle.label = "saddle_manifold";
  saddle.kind = CriticalKind::manifold;
  saddle.mean_loss = kSaddleLoss;
  saddle.sharpness = std::numeric_limits<double>::quiet_NaN();
  saddle.description = "{(0, w2) : w2 >= 0}";
  for (double w2 : {0.0, 0.25, 0.5, 1.0, 2.0}) saddle.samples.push_back(make_vector({0.0, w2}));
  saddle.location = saddle.samples.front();
  saddle.distance = &ToyNetObjective::distance_to_saddle_manifold;
  out.push_back(std::move(saddle));

  // For w2 < 0 the axis w1 = 0 is a (non-strict) local-minimum valley at the
  // same loss; listed so that terminal classification can tell it apart.
  CriticalPoint valley;
  valley.label = "negative_w2_manifold";
  valley.kind = CriticalKind::manifold;
  valley.mean_loss = kSaddleLoss;
  valley.sharpness = std::numeric_limits<double>::quiet_NaN();
  valley.description = "{(0, w2) : w2 < 0}";
  for (double w2 : {-0.1, -0.25, -0.5, -1.0, -2.0}) valley.samples.push_back(make_vector({0.0, w2}));
  valley.location = valley.samples.front();
  valley.distance = [](const Vector& w) { return std::hypot(w(0), std::max(w(1), 0.0)); };
  out.push_back(std::move(valley));
  return out;
}

nlohmann::json ToyNetObjective::describe() const {
  return {{"landscape", "toynet"}, {"hessian_step", hessian_step_}};
}

// ---------------------------------------------------------------------------
// Config

LandscapeConfig LandscapeConfig::from_json(const nlohmann::json& j) {
  LandscapeConfig c;
  if (!j.is_object()) throw ConfigError("landscape config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "landscape") {
      c.landscape = value.get<std::string>();
    } else if (key == "a") {
      c.a = value.get<double>();
    } else if (key == "b") {
      c.b = value.get<double>();
    } else if (key == "S") {
      c.batch_size = value.get<double>();
    } else {
      throw ConfigError("unknown landscape config key '" + key + "'");
    }
  }
  return c;
}

nlohmann::json LandscapeConfig::to_json() const {
  return {{"landscape", landscape}, {"a", a}, {"b", b}, {"S", batch_size}};
}

std::unique_ptr<StochasticObjective> make_landscape(const LandscapeConfig& config) {
  if (!std::isfinite(config.a) || !std::isfinite(config.b)) throw ConfigError("landscape parameters must be finite");
  if (config.landscape == "quadratic") return std::make_unique<QuadraticObjective>(config.a);
  if (config.landscape == "quartic") return std::make_unique<QuarticObjective>(config.a);
  if (config.landscape == "sharpflat") return std::make_unique<SharpFlatObjective>(config.a, config.b);
  if (config.landscape == "toynet") return std::make_unique<ToyNetObjective>();
  throw ConfigError("unknown landscape '" + config.landscape + "' (expected quadratic|quartic|sharpflat|toynet)");
}

}  // namespace sgdlab
