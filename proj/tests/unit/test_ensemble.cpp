#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sgdlab/ensemble.hpp"

using namespace sgdlab;
using doctest::Approx;

namespace {

EnsembleConfig small_cfg(std::int64_t runs, std::int64_t steps, std::vector<std::int64_t> snaps, std::uint64_t seed = 1) {
  EnsembleConfig cfg;
  cfg.n_runs = runs;
  cfg.n_steps = steps;
  cfg.snapshot_steps = std::move(snaps);
  cfg.master_seed = seed;
  return cfg;
}

HyperParams sgd(double lr) { return {UpdateRule::sgd, lr, 0.0, 0.999}; }

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("lr = 1 absorbs every run on the quadratic") {
    const QuadraticObjective q(-1.0);
    const auto res = run_ensemble(q, sgd(1.0), BoxConstraint::none(), small_cfg(300, 60, {0, 60}));
    CHECK(res.count(RunStatus::absorbed_zero) + res.count(RunStatus::diverged) == 300);
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      if (res.runs[r].status == RunStatus::absorbed_zero) {
        CHECK(res.snapshot(r, 1)(0) == 0.0);
        REQUIRE(res.runs[r].absorbed_step.has_value());
      }
    }
  }

  TEST_CASE("lr = 0 keeps every run at its initial point") {
    const QuarticObjective q(-1.0);
    const auto res = run_ensemble(q, sgd(0.0), BoxConstraint::none(), small_cfg(50, 30, {0, 30}));
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      CHECK(res.runs[r].status == RunStatus::completed);
      CHECK(res.snapshot(r, 1)(0) == res.runs[r].initial(0));
    }
  }

  TEST_CASE("results do not depend on the thread count") {
    const SharpFlatObjective sf(1.0, 14.0);
    EnsembleConfig c1 = small_cfg(64, 200, {0, 50, 200}, 77);
    EnsembleConfig c4 = c1;
    c1.threads = 1;
    c4.threads = 4;
    const auto r1 = run_ensemble(sf, sgd(0.05), BoxConstraint::uniform(2, -1, 1), c1);
    const auto r4 = run_ensemble(sf, sgd(0.05), BoxConstraint::uniform(2, -1, 1), c4);
    CHECK(r1.snapshot_data == r4.snapshot_data);
    for (std::size_t i = 0; i < r1.runs.size(); ++i) CHECK(r1.runs[i].terminal == r4.runs[i].terminal);
  }

  TEST_CASE("different seeds give different ensembles") {
    const QuadraticObjective q(-1.0);
    const auto r1 = run_ensemble(q, sgd(0.3), BoxConstraint::none(), small_cfg(20, 10, {10}, 1));
    const auto r2 = run_ensemble(q, sgd(0.3), BoxConstraint::none(), small_cfg(20, 10, {10}, 2));
    CHECK(r1.snapshot_data != r2.snapshot_data);
  }

  TEST_CASE("divergence is detected and frozen at the cap") {
    const QuadraticObjective q(-1.0);
    EnsembleConfig cfg = small_cfg(20, 2000, {0, 2000});
    cfg.divergence_cap = 1e6;
    const auto res = run_ensemble(q, sgd(1.5), BoxConstraint::none(), cfg);
    CHECK(res.count(RunStatus::diverged) == 20);
    CHECK(res.warnings.size() == 1);
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      CHECK(std::abs(res.snapshot(r, 1)(0)) == 1e6);
      CHECK(res.runs[r].first_divergence_step.has_value());
    }
    CHECK(escape_probability(res, 10.0) == 1.0);
  }

  TEST_CASE("init interval and projection") {
    const QuadraticObjective q(1.0);
    EnsembleConfig cfg = small_cfg(10, 1, {0});
    cfg.init = {{3.0, 3.0}};
    const auto res = run_ensemble(q, sgd(0.1), BoxConstraint::uniform(1, -1, 1), cfg);
    for (std::size_t r = 0; r < 10; ++r) CHECK(res.snapshot(r, 0)(0) == 1.0);
  }

  TEST_CASE("config validation and snapshot lookup") {
    const QuadraticObjective q(-1.0);
    CHECK_THROWS_AS(run_ensemble(q, sgd(0.1), BoxConstraint::none(), small_cfg(0, 10, {0})), ConfigError);
    CHECK_THROWS_AS(run_ensemble(q, sgd(0.1), BoxConstraint::none(), small_cfg(5, 10, {11})), ConfigError);
    CHECK_THROWS_AS(run_ensemble(q, sgd(0.1), BoxConstraint::none(), small_cfg(5, 10, {5, 2})), ConfigError);
    const auto res = run_ensemble(q, sgd(0.1), BoxConstraint::none(), small_cfg(5, 10, {0, 5}));
    CHECK(res.snapshot_index(5) == 1);
    CHECK_THROWS_AS((void)res.snapshot_index(7), ConfigError);
    CHECK_THROWS_AS((void)escape_rate_estimate(res, 0), ConfigError);
  }

  TEST_CASE("escape rate on a deterministic contraction") {
    // a = 2 makes both atoms equal to 1, so w_t = (1 - lr)^t w_0 exactly.
    const QuadraticObjective q(2.0);
    const auto res = run_ensemble(q, sgd(0.5), BoxConstraint::none(), small_cfg(100, 40, {0, 40}));
    const auto est = escape_rate_estimate(res, 40);
    CHECK(est.gamma == Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(est.stderr_ == Approx(0.0).scale(1e-12));
    CHECK(est.n_used == 100);
  }

  TEST_CASE("escape rate with all iterates at zero") {
    const QuadraticObjective q(-1.0);
    const auto res = run_ensemble(q, sgd(1.0), BoxConstraint::none(), small_cfg(20, 80, {0, 80}));
    const auto est = escape_rate_estimate(res, 80);
    CHECK(est.n_zero == 20);
    CHECK(std::isinf(est.gamma));
    CHECK(est.gamma < 0);
    CHECK(std::isnan(est.stderr_));
  }

  TEST_CASE("histograms conserve mass") {
    const QuadraticObjective q(-1.0);
    const auto res = run_ensemble(q, sgd(0.8), BoxConstraint::none(), small_cfg(400, 1000, {0, 10, 1000}));
    for (std::size_t s = 0; s < 3; ++s) {
      const Histogram h = histogram(res, s, 41, -2.0, 2.0);
      CHECK(h.total() == 400);
      CHECK(h.counts.size() == 41);
    }
    // trapped ensemble: almost all mass ends in the central bin
    const Histogram h = histogram(res, 2, 41, -2.0, 2.0);
    CHECK(h.counts[20] >= 396);
    const Histogram2D h2 = histogram2d(run_ensemble(SharpFlatObjective(1, 14), sgd(0.05), BoxConstraint::none(),
                                                    small_cfg(100, 5, {5})),
                                       0, 10, -0.5, 0.5, 10, -0.5, 0.5);
    CHECK(std::accumulate(h2.counts.begin(), h2.counts.end(), std::int64_t{0}) + h2.outside == 100);
  }

  TEST_CASE("histogram edges") {
    EnsembleResult res;
    res.dim = 1;
    res.config.snapshot_steps = {0};
    res.runs.resize(4);
    res.snapshot_data = {-1.0, 1.0, 1.5, NAN};
    const Histogram h = histogram(res, 0, 2, -1.0, 1.0);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[1] == 1);
    CHECK(h.overflow == 2);
    CHECK(h.bin_center(0) == Approx(-0.5));
  }

  TEST_CASE("classification picks the nearest catalog entry") {
    const SharpFlatObjective sf(1.0, 14.0);
    EnsembleResult res;
    res.dim = 2;
    res.runs.resize(3);
    res.runs[0].terminal = make_vector({0.01, 0.99});
    res.runs[1].terminal = make_vector({0.7, 0.0});
    res.runs[2].terminal = make_vector({0.3, 0.3});
    for (auto& r : res.runs) r.status = RunStatus::completed;
    const auto cat = sf.critical_point_catalog();
    const auto c = classify_terminal(res, cat, 0.05);
    CHECK(c.count("sharp+") == 1);
    CHECK(c.count("flat+") == 1);
    CHECK(c.unclassified == 1);
  }
}

TEST_SUITE("ensemble-properties") {
  TEST_CASE("escape probability is non-increasing in tau") {
    const QuadraticObjective q(-1.0);
    const auto res = run_ensemble(q, sgd(0.25), BoxConstraint::none(), small_cfg(500, 50, {50}));
    double prev = 1.0;
    for (double tau : {1e-12, 0.1, 1.0, 10.0, 100.0, 1e4, 1e8}) {
      const double p = escape_probability(res, tau);
      CHECK(p <= prev);
      CHECK(p >= 0.0);
      prev = p;
    }
  }

  TEST_CASE("ensemble mean tracks the GD iterate for a deterministic start") {
    // E[w_t] = (1 - lr a / 2)^t w_0 for SGD on the quadratic.
    const double a = -1.0, lr = 0.1;
    const QuadraticObjective q(a);
    EnsembleConfig cfg = small_cfg(20000, 10, {10});
    cfg.init = {{1.0, 1.0}};
    const auto res = run_ensemble(q, sgd(lr), BoxConstraint::none(), cfg);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
      const double w = res.snapshot(r, 0)(0);
      sum += w;
      sum2 += w * w;
    }
    const double n = static_cast<double>(res.runs.size());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - std::pow(1.0 - lr * a / 2.0, 10)) < 4.0 * se);
  }

  TEST_CASE("level crossings") {
    const std::vector<double> xs = {0.0, 1.0, 2.0, 3.0, 4.0};
    const std::vector<double> ys = {1.0, 0.0, 0.0, 1.0, 1.0};
    const auto c = level_crossings(xs, ys, 0.5);
    REQUIRE(c.size() == 2);
    CHECK(c[0].lr == Approx(0.5));
    CHECK_FALSE(c[0].rising);
    CHECK(c[1].lr == Approx(2.5));
    CHECK(c[1].rising);
  }
}
