#include "sgdlab/audit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sgdlab/io.hpp"

namespace sgdlab {

namespace {

constexpr double kHessianNoiseFloor = 1e-6;
constexpr double kZeroGradSq = 1e-20;
constexpr double kPositiveGap = 1e-9;

double spectral_norm(const Matrix& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  const SymmetricEigen2 e = symmetric_eigen2(0.5 * (m + m.transpose()));
  return std::max(std::abs(e.lambda_min), std::abs(e.lambda_max));
}

Vector axis_point(int dim, double first, double last) {
  Vector w = Vector::Zero(dim);
  w(0) = first;
  w(dim - 1) = last;
  return w;
}

void require_2d(const StochasticObjective& obj, const char* audit) {
  if (obj.dim() != 2) throw ConfigError(std::string(audit) + " needs a 2-D landscape");
}

void require_step(double fd_step) {
  if (!(fd_step > 0.0) || !std::isfinite(fd_step)) throw ConfigError("finite-difference step must be > 0");
}

std::string point_text(const Vector& w) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (i > 0) s += ", ";
    s += format_double(w(i));
  }
  return s + ")";
}

}  // namespace

std::string_view to_string(Verdict v) { return v == Verdict::violated ? "violated" : "not-violated-here"; }

double Witness::value(std::string_view name) const {
  for (const auto& [k, v] : measured) {
    if (k == name) return v;
  }
  throw ConfigError("witness has no measurement '" + std::string(name) + "'");
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j;
  j["assumption"] = assumption;
  j["verdict"] = std::string(to_string(verdict));
  j["summary"] = summary;
  if (growth_exponent) j["growth_exponent"] = *growth_exponent;
  j["witnesses"] = nlohmann::json::array();
  for (const Witness& w : witnesses) {
    nlohmann::json wj;
    wj["point"] = std::vector<double>(w.point.data(), w.point.data() + w.point.size());
    for (const auto& [k, v] : w.measured) wj["measured"][k] = v;
    if (!w.note.empty()) wj["note"] = w.note;
    j["witnesses"].push_back(wj);
  }
  return j;
}

std::string AuditReport::to_text() const {
  std::ostringstream os;
  os << assumption << ": " << to_string(verdict) << '\n';
  if (!summary.empty()) os << "  " << summary << '\n';
  if (growth_exponent) os << "  growth exponent " << format_double(*growth_exponent) << '\n';
  for (const Witness& w : witnesses) {
    os << "  at " << point_text(w.point);
    for (const auto& [k, v] : w.measured) os << "  " << k << '=' << format_double(v);
    if (!w.note.empty()) os << "  [" << w.note << ']';
    os << '\n';
  }
  return os.str();
}

SymmetricEigen2 symmetric_eigen2(const Matrix& h) {
  if (h.rows() != 2 || h.cols() != 2) throw ConfigError("symmetric_eigen2 needs a 2x2 matrix");
  const double p = h(0, 0);
  const double q = 0.5 * (h(0, 1) + h(1, 0));
  const double r = h(1, 1);
  const double mid = 0.5 * (p + r);
  const double rad = std::hypot(0.5 * (p - r), q);
  SymmetricEigen2 e{mid - rad, mid + rad, Vector(2)};
  if (q == 0.0) {
    e.v_min = p <= r ? make_vector({1.0, 0.0}) : make_vector({0.0, 1.0});
    return e;
  }
  // Two equivalent forms of the eigenvector; take the better conditioned one.
  const Vector a = make_vector({q, e.lambda_min - p});
  const Vector b = make_vector({e.lambda_min - r, q});
  e.v_min = a.norm() >= b.norm() ? a.normalized() : b.normalized();
  return e;
}

AuditReport audit_hessian_lipschitz(const StochasticObjective& obj, std::span<const double> w1_values,
                                    double fd_step) {
  require_step(fd_step);
  if (w1_values.size() < 2) throw ConfigError("Hessian-Lipschitz sweep needs at least two w1 values");
  for (std::size_t i = 0; i < w1_values.size(); ++i) {
    if (!(w1_values[i] > 0.0) || (i > 0 && !(w1_values[i] > w1_values[i - 1]))) {
      throw ConfigError("w1 values must be positive and increasing");
    }
  }
  AuditReport rep;
  rep.assumption = "hessian-lipschitz";
  std::vector<double> ratios;
  const int dim = obj.dim();
  for (double w1 : w1_values) {
    Vector p = Vector::Zero(dim);
    p(0) = w1;
    Vector q = p;
    q(0) = w1 + 1.0;
    const Matrix diff = numerical_hessian(obj, q, fd_step) - numerical_hessian(obj, p, fd_step);
    const double ratio = spectral_norm(diff) / (q - p).norm();
    ratios.push_back(ratio);
    rep.witnesses.push_back({p, {{"ratio", ratio}}, "paired with w1 + 1"});
  }
  bool increasing = ratios.front() > kHessianNoiseFloor;
  for (std::size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i] > ratios[i - 1];
  const bool grows = ratios.back() >= 10.0 * ratios.front();
  rep.verdict = increasing && grows ? Verdict::violated : Verdict::not_violated_here;
  if (ratios.front() > kHessianNoiseFloor && ratios.back() > kHessianNoiseFloor) {
    rep.growth_exponent = std::log(ratios.back() / ratios.front()) / std::log(w1_values.back() / w1_values.front());
  }
  rep.summary = rep.verdict == Verdict::violated
                    ? "Hessian difference quotient grows without bound over the sweep"
                    : "Hessian difference quotient stays bounded over the sweep";
  return rep;
}

AuditReport audit_pl(const StochasticObjective& obj, double fd_step) {
  require_2d(obj, "PL audit");
  require_step(fd_step);
  double l_star = std::numeric_limits<double>::infinity();
  for (const CriticalPoint& cp : obj.critical_point_catalog()) l_star = std::min(l_star, cp.mean_loss);

  AuditReport rep;
  rep.assumption = "polyak-lojasiewicz";
  bool violated = false;
  const Vector points[] = {make_vector({0.0, 0.0}), make_vector({0.0, -1.0}),
                           make_vector({1.0 / std::sqrt(2.0), 1.0})};
  for (const Vector& w : points) {
    const double g2 = numerical_gradient(obj, w, fd_step).squaredNorm();
    const double gap = obj.mean_loss(w) - l_star;
    const bool bad = g2 <= kZeroGradSq && gap > kPositiveGap;
    violated = violated || bad;
    rep.witnesses.push_back({w, {{"grad_norm_sq", g2}, {"loss_gap", gap}}, bad ? "zero gradient, positive gap" : ""});
  }
  rep.verdict = violated ? Verdict::violated : Verdict::not_violated_here;
  rep.summary = "L* = " + format_double(l_star);
  return rep;
}

AuditReport audit_cnc(const StochasticObjective& obj, double fd_step) {
  require_2d(obj, "CNC audit");
  require_step(fd_step);
  AuditReport rep;
  rep.assumption = "correlated-negative-curvature";
  bool violated = false;
  for (const Vector& w : {make_vector({0.0, 0.0}), make_vector({0.5, 0.5})}) {
    const Matrix h = numerical_hessian(obj, w, fd_step);
    const SymmetricEigen2 e = symmetric_eigen2(h);
    double corr = 0.0;
    for (const Atom& atom : obj.noise().atoms()) {
      if (atom.prob == 0.0) continue;
      const double d = e.v_min.dot(obj.sample_grad(w, atom.value));
      corr += atom.prob * d * d;
    }
    const double rayleigh = e.v_min.dot(h * e.v_min);
    const bool bad = corr == 0.0;
    violated = violated || bad;
    rep.witnesses.push_back({w,
                             {{"lambda_min", e.lambda_min}, {"rayleigh", rayleigh}, {"correlation", corr}},
                             bad ? "no gradient component along v_min" : ""});
  }
  rep.verdict = violated ? Verdict::violated : Verdict::not_violated_here;
  rep.summary = "E_x <v_min, grad>^2 must stay above some gamma > 0";
  return rep;
}

AuditReport audit_one_point_convexity(const StochasticObjective& obj, std::span<const double> w2_values,
                                      double fd_step) {
  require_step(fd_step);
  if (w2_values.empty()) throw ConfigError("one-point audit needs at least one w2 value");
  AuditReport rep;
  rep.assumption = "one-point-strong-convexity";
  std::vector<Vector> stationary;
  for (double w2 : w2_values) {
    if (!(w2 <= 0.0)) throw ConfigError("one-point audit expects w2 <= 0");
    const Vector w = axis_point(obj.dim(), 0.0, w2);
    double max_sample = 0.0;
    for (const Atom& atom : obj.noise().atoms()) {
      if (atom.prob == 0.0) continue;
      max_sample = std::max(max_sample, obj.sample_grad(w, atom.value).norm());
    }
    const double fd_norm = numerical_gradient(obj, w, fd_step).norm();
    const bool zero = max_sample == 0.0;
    if (zero && std::none_of(stationary.begin(), stationary.end(), [&](const Vector& s) { return s == w; })) {
      stationary.push_back(w);
    }
    rep.witnesses.push_back(
        {w, {{"max_sample_grad_norm", max_sample}, {"fd_grad_norm", fd_norm}}, zero ? "stationary" : ""});
  }
  rep.verdict = stationary.size() >= 2 ? Verdict::violated : Verdict::not_violated_here;
  rep.summary = std::to_string(stationary.size()) + " distinct stationary point(s) among the witnesses";
  return rep;
}

}  // namespace sgdlab
