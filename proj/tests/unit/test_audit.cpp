#include <doctest.h>

#include <cmath>
#include <vector>

#include "sgdlab/audit.hpp"

using namespace sgdlab;
using doctest::Approx;

namespace {
const std::vector<double> kW1 = {1.0, 2.0, 4.0, 8.0, 16.0};
const std::vector<double> kW2 = {0.0, -1.0};
}  // namespace

TEST_SUITE("audit") {
  TEST_CASE("toy net violates every assumption") {
    const ToyNetObjective net;
    const auto hl = audit_hessian_lipschitz(net, kW1);
    CHECK(hl.verdict == Verdict::violated);
    REQUIRE(hl.growth_exponent.has_value());
    CHECK(*hl.growth_exponent > 2.0);
    CHECK(hl.witnesses.size() == kW1.size());
    const auto pl = audit_pl(net);
    CHECK(pl.verdict == Verdict::violated);
    REQUIRE(pl.witnesses.size() == 3);
    CHECK(pl.witnesses[0].value("grad_norm_sq") == Approx(0.0).scale(1e-12));
    CHECK(pl.witnesses[0].value("loss_gap") == Approx(0.25));
    CHECK(audit_cnc(net).verdict == Verdict::violated);
    const auto op = audit_one_point_convexity(net, kW2);
    CHECK(op.verdict == Verdict::violated);
    for (const auto& w : op.witnesses) CHECK(w.value("max_sample_grad_norm") == 0.0);
  }

  TEST_CASE("controls on a convex quadratic") {
    const QuadraticObjective q(1.0);
    CHECK(audit_hessian_lipschitz(q, kW1).verdict == Verdict::not_violated_here);
    CHECK(audit_one_point_convexity(q, kW2).verdict == Verdict::not_violated_here);
  }

  TEST_CASE("verdicts are stable under the finite-difference step") {
    const ToyNetObjective net;
    for (double h : {1e-3, 1e-5}) {
      CHECK(audit_hessian_lipschitz(net, kW1, h).verdict == Verdict::violated);
      CHECK(audit_pl(net, h).verdict == Verdict::violated);
      CHECK(audit_cnc(net, h).verdict == Verdict::violated);
      CHECK(audit_one_point_convexity(net, kW2, h).verdict == Verdict::violated);
    }
    const QuadraticObjective q(1.0);
    for (double h : {1e-3, 1e-5}) CHECK(audit_hessian_lipschitz(q, kW1, h).verdict == Verdict::not_violated_here);
  }

  TEST_CASE("Hessian-Lipschitz ratio grows at least tenfold") {
    const ToyNetObjective net;
    const auto hl = audit_hessian_lipschitz(net, kW1);
    CHECK(hl.witnesses.back().value("ratio") >= 10.0 * hl.witnesses.front().value("ratio"));
  }

  TEST_CASE("reports serialize") {
    const ToyNetObjective net;
    const auto rep = audit_cnc(net);
    const auto j = rep.to_json();
    CHECK(j.at("verdict") == "violated");
    CHECK(j.at("assumption") == "correlated-negative-curvature");
    CHECK(rep.to_text().find("violated") != std::string::npos);
    CHECK(to_string(Verdict::not_violated_here) == "not-violated-here");
  }

  TEST_CASE("closed-form 2x2 eigen decomposition") {
    Matrix h(2, 2);
    h << 2.0, 1.0, 1.0, 2.0;
    const auto e = symmetric_eigen2(h);
    CHECK(e.lambda_min == Approx(1.0));
    CHECK(e.lambda_max == Approx(3.0));
    CHECK(std::abs(e.v_min(0) + e.v_min(1)) < 1e-12);
    CHECK(e.v_min.norm() == Approx(1.0));
    h << -1.0, 0.0, 0.0, 4.0;
    const auto d = symmetric_eigen2(h);
    CHECK(d.lambda_min == -1.0);
    CHECK(std::abs(d.v_min(0)) == Approx(1.0));
  }
}
