#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlab/landscapes.hpp"

namespace sgdlab {

enum class Verdict { violated, not_violated_here };

std::string_view to_string(Verdict v);

struct Witness {
  Vector point;
  std::vector<std::pair<std::string, double>> measured;
  std::string note;

  double value(std::string_view name) const;
};

struct AuditReport {
  std::string assumption;
  Verdict verdict = Verdict::not_violated_here;
  std::vector<Witness> witnesses;
  std::string summary;
  std::optional<double> growth_exponent;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Default step for the numerical Hessians and gradients used by the audits.
inline constexpr double kAuditFdStep = 1e-4;

/// Ratio |H(w1+1, 0) - H(w1, 0)|_2 / 1 for each w1 (spectral norm, numerical
/// Hessians). Violated when the ratios increase strictly, start above a 1e-6
/// noise floor and grow at least 10x across the sweep. Reports the log-log
/// slope of the ratio against w1 as the growth exponent.
AuditReport audit_hessian_lipschitz(const StochasticObjective& obj, std::span<const double> w1_values,
                                    double fd_step = kAuditFdStep);

/// Polyak-Lojasiewicz check at (0,0), (0,-1) and (1/sqrt 2, 1): reports
/// |grad L|^2 and L - L*, with L* the lowest catalog loss. Violated when some
/// witness has a vanishing gradient but positive suboptimality. 2-D only.
AuditReport audit_pl(const StochasticObjective& obj, double fd_step = kAuditFdStep);

/// Correlated-negative-curvature check at (0,0) and (0.5,0.5): E_x <v, grad L(w;x)>^2
/// along the minimum-eigenvalue direction v of the numerical Hessian.
/// Violated when the value is zero at some witness. 2-D only.
AuditReport audit_cnc(const StochasticObjective& obj, double fd_step = kAuditFdStep);

/// Places each w2 <= 0 in the last coordinate (other coordinates 0) and
/// counts points where every sampled gradient vanishes. Two or more distinct
/// stationary points rule out one-point strong convexity.
AuditReport audit_one_point_convexity(const StochasticObjective& obj, std::span<const double> w2_values,
                                      double fd_step = kAuditFdStep);

struct SymmetricEigen2 {
  double lambda_min;
  double lambda_max;
  Vector v_min;  // unit norm
};

/// Closed-form eigendecomposition of a symmetric 2x2 matrix.
SymmetricEigen2 symmetric_eigen2(const Matrix& h);

}  // namespace sgdlab
