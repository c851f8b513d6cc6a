#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sgdlab/theory.hpp"

using namespace sgdlab;
using doctest::Approx;

// Reference values below were computed with mpmath at 50 digits.
namespace oracle {
constexpr double mu_m1_08 = -0.326963233703332;
constexpr double s2_m1_08 = 1.6447413015855875;
constexpr double gamma_star_m1 = 0.0588915178281917;
constexpr double hi_m1 = 1.2807764064044151;  // (1 + sqrt 17) / 4
constexpr double hi_m01 = 1.3946201890596209;
constexpr double hi_m2 = 1.2152504370215302;
constexpr double gamma_star_m001 = 1.2376084455e-5;
constexpr double eb_001 = 0.32752240536427752;
constexpr double eb_01 = 1.4828477067743625;
constexpr double lr_star_eb_01 = 0.29861833706684159;
constexpr double lr_star_eb_001 = 0.12335852262862714;
constexpr double sharpflat_max = 0.17247448713915890;
}  // namespace oracle

TEST_SUITE("theory") {
  TEST_CASE("log-contraction statistics") {
    const auto st = log_contraction(TwoPointDistribution::curvature_family(-1.0), 0.8);
    CHECK(st.mu == Approx(oracle::mu_m1_08).epsilon(1e-13));
    CHECK(st.s2 == Approx(oracle::s2_m1_08).epsilon(1e-13));
    CHECK_FALSE(st.absorbing);
    CHECK(log_contraction(TwoPointDistribution::curvature_family(-1.0), 0.25).mu ==
          Approx(oracle::gamma_star_m1).epsilon(1e-13));
    const auto abs = log_contraction(TwoPointDistribution::curvature_family(-1.0), 1.0);
    CHECK(abs.absorbing);
    CHECK(std::isinf(abs.mu));
    CHECK(abs.mu < 0);
  }

  TEST_CASE("trapped interval examples") {
    auto t = trapped_interval(-1.0);
    CHECK(t.exists);
    CHECK(t.lr_lo == Approx(0.5));
    CHECK(t.lr_hi == Approx(oracle::hi_m1).epsilon(1e-14));
    t = trapped_interval(-0.5);
    CHECK(t.lr_lo == Approx(1.0 / 3.0));
    CHECK(t.lr_hi == Approx(4.0 / 3.0));
    t = trapped_interval(-2.0);
    CHECK(t.lr_lo == Approx(2.0 / 3.0));
    CHECK(t.lr_hi == Approx(oracle::hi_m2).epsilon(1e-14));
    t = trapped_interval(-0.1);
    CHECK(t.lr_lo == Approx(1.0 / 11.0));
    CHECK(t.lr_hi == Approx(oracle::hi_m01).epsilon(1e-14));
    t = trapped_interval(-1e-9);
    CHECK(std::abs(t.lr_lo) < 1e-8);
    CHECK(t.lr_hi == Approx(std::sqrt(2.0)).epsilon(1e-8));
    t = trapped_interval(0.5);
    CHECK(t.minimum_instability);
    CHECK_FALSE(trapped_interval(-1.0).minimum_instability);
    const auto one = trapped_interval(1.0);
    CHECK(std::isfinite(one.lr_hi));
    CHECK(one.lr_hi == Approx(4.0 / (1.0 + std::sqrt(1.0))));
    CHECK(t.contains(0.1));
  }

  TEST_CASE("escape rate curve and its optimum") {
    CHECK(escape_rate_curve(-1.0, 0.25) == Approx(oracle::gamma_star_m1).epsilon(1e-13));
    CHECK(escape_rate_curve(-1.0, 0.0) == 0.0);
    CHECK_THROWS_AS((void)escape_rate_curve(-1.0, 1.01), ConfigError);
    const auto opt = optimal_escape(-1.0);
    CHECK(opt.lr_star == Approx(0.25));
    CHECK(opt.gamma_star == Approx(oracle::gamma_star_m1).epsilon(1e-13));
    CHECK(optimal_escape(-0.01).gamma_star == Approx(oracle::gamma_star_m001).epsilon(1e-8));
    CHECK_THROWS_AS((void)optimal_escape(0.0), ConfigError);
    for (double lr = 0.01; lr < 1.0; lr += 0.01) CHECK(escape_rate_curve(-1.0, lr) <= opt.gamma_star + 1e-15);
  }

  TEST_CASE("epsilon bound") {
    CHECK(epsilon_bound_a(0.1) == Approx(oracle::eb_01).epsilon(1e-13));
    CHECK(epsilon_bound_a(0.01) == Approx(oracle::eb_001).epsilon(1e-13));
    CHECK(epsilon_bound_a(0.0) == 0.0);
    CHECK(optimal_escape(-0.2868).gamma_star <= 0.01);
    CHECK(optimal_escape(-epsilon_bound_a(0.1)).lr_star == Approx(oracle::lr_star_eb_01).epsilon(1e-13));
    CHECK(optimal_escape(-epsilon_bound_a(0.01)).lr_star == Approx(oracle::lr_star_eb_001).epsilon(1e-13));
    CHECK_THROWS_AS((void)epsilon_bound_a(-0.1), ConfigError);
  }

  TEST_CASE("sharp/flat constants") {
    CHECK(sharpflat_max_lr() == Approx(oracle::sharpflat_max).epsilon(1e-15));
    const auto c = sharpflat_constants(0.05);
    CHECK(c.b == Approx(14.0));
    CHECK(c.converges);
    CHECK_FALSE(sharpflat_constants(0.18).converges);
    CHECK_THROWS_AS((void)sharpflat_constants(0.0), ConfigError);
  }

  TEST_CASE("AMSGrad trapping window") {
    const double lr = 0.2;
    const double c_lo = std::pow(lr / oracle::hi_m01, 2), c_hi = std::pow(lr * 11.0, 2);
    CHECK(c_lo == Approx(0.0205659).epsilon(1e-5));
    CHECK(c_hi == Approx(4.84));
    for (double c : {0.021, 0.1, 1.0, 4.8}) CHECK(amsgrad_trapping(-0.1, lr / std::sqrt(c)));
    CHECK_FALSE(amsgrad_trapping(-0.1, lr / std::sqrt(0.02)));
    CHECK_FALSE(amsgrad_trapping(-0.1, lr / std::sqrt(5.0)));
    CHECK(amsgrad_trapping(-0.1, 1.0 / 11.0));
  }

  TEST_CASE("stationary density kinds") {
    const auto grid = symmetric_grid();
    REQUIRE(grid.size() == 4001);
    CHECK(grid[2000] == 0.0);
    CHECK(grid.front() == -6.0);

    FPStationaryParams p{-1.0, 1.0, 0.1, 0.1, 1.0};
    const auto add = fp_stationary_density(p, FPKind::additive, grid);
    CHECK_FALSE(add.delta_at_zero);
    CHECK(trapezoid(grid, add.density) == Approx(1.0).epsilon(1e-6));

    // -S a / (2 lr) = 0.25 < 1: concentrated at zero
    p = {-0.05, 1.0, 0.0, 0.1, 1.0};
    CHECK(fp_stationary_density(p, FPKind::quartic, grid).delta_at_zero);
    CHECK(fp_stationary_density(p, FPKind::quadratic, grid).delta_at_zero);
    CHECK_THROWS_AS(fp_stationary_density(p, FPKind::quartic, grid, false), ConfigError);

    p = {-1.0, 1.0, 0.0, 0.1, 1.0};
    const auto quartic = fp_stationary_density(p, FPKind::quartic, grid);
    CHECK(quartic.exponent == Approx(-2.0 + 10.0));
    CHECK(quartic.density[2000] == 0.0);

    CHECK(parse_fp_kind("additive") == FPKind::additive);
    CHECK_THROWS_AS(parse_fp_kind("gaussian"), ConfigError);
    p.lr = 0.0;
    CHECK_THROWS_AS(fp_stationary_density(p, FPKind::quartic, grid), ConfigError);
  }

  TEST_CASE("stationary modes and boundaries") {
    FPStationaryParams p{-1.0, 1.0, 0.1, 0.1, 1.0};
    const auto m = fp_mode(p);
    REQUIRE(m.size() == 2);
    CHECK(m[1] == Approx(std::sqrt(-0.1 + 0.5)));
    CHECK(m[0] == -m[1]);
    CHECK(fp_critical_a(0.1, 2.0) == Approx(-0.1));
    p.a = -0.1;
    CHECK(fp_mode(p) == std::vector<double>{0.0});
    CHECK(continuous_escape_boundary(-1.0, 4.0) == Approx(2.0));
    CHECK_THROWS_AS((void)continuous_escape_boundary(1.0, 1.0), ConfigError);
    p.b = 0.0;
    CHECK_THROWS_AS((void)fp_mode(p), ConfigError);
  }
}

TEST_SUITE("theory-properties") {
  TEST_CASE("trapped interval agrees with the sign of mu on a 50x50 grid") {
    int checked = 0;
    for (int i = 0; i < 50; ++i) {
      const double a = -3.0 + 3.9 * i / 49.0;
      const auto t = trapped_interval(a);
      for (int j = 0; j < 50; ++j) {
        const double lr = 0.013 + 1.98 * j / 49.0;
        if (std::abs(lr - t.lr_lo) < 1e-9 || std::abs(lr - t.lr_hi) < 1e-9) continue;
        const double mu = log_contraction(TwoPointDistribution::curvature_family(a), lr).mu;
        CHECK_MESSAGE(t.contains(lr) == (mu < 0.0), "a=" << a << " lr=" << lr);
        ++checked;
      }
    }
    CHECK(checked > 2400);
  }

  TEST_CASE("epsilon bound inverts the optimal escape rate") {
    for (double eps = 1e-4; eps < 3.0; eps *= 1.7) {
      const double a = -epsilon_bound_a(eps);
      CHECK(std::abs(optimal_escape(a).gamma_star - eps) <= 1e-10);
    }
    for (double a = -5.0; a < -1e-3; a *= 0.8) CHECK(std::abs(-epsilon_bound_a(optimal_escape(a).gamma_star) - a) <= 1e-10 * std::max(1.0, -a));
  }

  TEST_CASE("optimal escape rate equals the curve at lr*") {
    for (double a = -4.0; a < -0.01; a += 0.13) {
      const auto o = optimal_escape(a);
      CHECK(escape_rate_curve(a, o.lr_star) == Approx(o.gamma_star).epsilon(1e-12));
      CHECK(log_contraction(TwoPointDistribution::curvature_family(a), o.lr_star).mu == Approx(o.gamma_star).epsilon(1e-12));
    }
  }

  TEST_CASE("densities normalize and their argmax matches the mode") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> ua(-3.0, -0.5), ub(0.5, 3.0), ul(0.01, 0.2), us(0.05, 0.5);
    const std::vector<double> batch = {1.0, 2.0, 4.0};
    const auto grid = symmetric_grid();
    const double cell = grid[1] - grid[0];
    int sets = 0;
    while (sets < 50) {
      FPStationaryParams p{ua(gen), ub(gen), us(gen), ul(gen), batch[gen() % 3]};
      const FPKind kind = sets % 2 == 0 ? FPKind::additive : FPKind::quartic;
      if (kind == FPKind::quartic) p.sigma = 0.0;
      const auto d = fp_stationary_density(p, kind, grid);
      if (d.delta_at_zero) continue;
      ++sets;
      CHECK(trapezoid(grid, d.density) == Approx(1.0).epsilon(1e-6));
      const auto it = std::max_element(d.density.begin() + 2000, d.density.end());
      const double argmax = grid[static_cast<std::size_t>(it - d.density.begin())];
      const auto modes = fp_mode(p);
      CHECK_MESSAGE(std::abs(argmax - modes.back()) <= cell, "a=" << p.a << " b=" << p.b << " lr=" << p.lr);
    }
  }
}
