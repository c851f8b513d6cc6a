#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sgdlab/landscapes.hpp"
#include "sgdlab/rng.hpp"

using namespace sgdlab;
using doctest::Approx;

TEST_SUITE("distribution") {
  TEST_CASE("degenerate law always returns x_hi") {
    const TwoPointDistribution d(3.0, -7.0, 1.0);
    RngStream rng(5);
    for (int i = 0; i < 1000; ++i) CHECK(sample_noise(d, rng) == 3.0);
  }

  TEST_CASE("empirical mean of atoms {1, -2} matches a/2 at a = -1") {
    const auto d = TwoPointDistribution::curvature_family(-1.0);
    RngStream rng(11);
    const int n = 1000000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_noise(d, rng);
    const double sigma = std::sqrt(d.variance() / n);
    CHECK(std::abs(sum / n - (-0.5)) < 3.0 * sigma);
  }

  TEST_CASE("variance of the a = -1 family") {
    CHECK(TwoPointDistribution::curvature_family(-1.0).variance() == Approx(2.25).epsilon(1e-15));
  }

  TEST_CASE("mean is a/2 for random a") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
      const double a = u(gen);
      CHECK(std::abs(TwoPointDistribution::curvature_family(a).mean() - a / 2.0) <= 1e-15);
    }
  }

  TEST_CASE("invalid probability is rejected") {
    CHECK_THROWS_AS(TwoPointDistribution(1.0, 0.0, 1.5), ConfigError);
    CHECK_THROWS_AS(TwoPointDistribution(1.0, 0.0, -0.1), ConfigError);
    CHECK_THROWS_AS(TwoPointDistribution(NAN, 0.0, 0.5), ConfigError);
  }

  TEST_CASE("streams are reproducible and distinct") {
    RngStream a = RngStream::for_run(42, 7), b = RngStream::for_run(42, 7), c = RngStream::for_run(42, 8);
    bool differs = false;
    for (int i = 0; i < 16; ++i) {
      const auto x = a.next();
      CHECK(x == b.next());
      differs = differs || x != c.next();
    }
    CHECK(differs);
  }
}

TEST_SUITE("landscapes") {
  TEST_CASE("sample gradients") {
    CHECK(QuadraticObjective(-1.0).sample_grad(make_vector({3.0}), 1.0)(0) == 3.0);

    const SharpFlatObjective sf(1.0, 14.0);
    const Vector g = sf.sample_grad(make_vector({1.0, 0.0}), 1.0);
    CHECK(g(0) == 16.0);
    CHECK(g(1) == 0.0);

    const ToyNetObjective net;
    for (double w2 : {-1.0, 0.0, 0.5, 3.0}) {
      for (double y : {-1.0, 2.0}) CHECK(net.sample_grad(make_vector({0.0, w2}), y).isZero(0.0));
    }
  }

  TEST_CASE("non-finite parameters signal divergence") {
    const QuadraticObjective q(-1.0);
    CHECK_THROWS_AS(q.sample_grad(make_vector({INFINITY}), 1.0), DivergenceError);
    CHECK_THROWS_AS(q.mean_grad(make_vector({NAN})), DivergenceError);
    CHECK_THROWS_AS(q.mean_loss(make_vector({NAN})), DivergenceError);
  }

  TEST_CASE("mean gradient and loss examples") {
    CHECK(QuadraticObjective(-1.0).mean_grad(make_vector({1.0}))(0) == Approx(-0.5));
    const ToyNetObjective net;
    CHECK(net.mean_loss(make_vector({0.0, 0.5})) == Approx(2.5));
    CHECK(net.mean_loss(make_vector({1.0 / std::sqrt(2.0), 1.0})) == Approx(2.25));
  }

  TEST_CASE("Hessian examples") {
    const SharpFlatObjective sf(1.0, 14.0);
    const Matrix h = sf.hessian(make_vector({1.0 / std::sqrt(2.0), 0.0}));
    CHECK(h(0, 0) == Approx(4.0));
    CHECK(h(1, 1) == Approx(-2.0 - 2.0 * 1.0 + 6.0));
    CHECK(QuadraticObjective(-3.0).hessian(make_vector({0.7}))(0, 0) == -1.5);
  }

  TEST_CASE("toy-net numerical Hessian against an independent second-difference oracle") {
    const ToyNetObjective net;
    for (double w1 : {0.5, 1.0, 2.0, 4.0}) {
      const Vector w = make_vector({w1, 0.0});
      const Matrix h = net.hessian(w);
      // second differences of the loss itself, not of the gradient
      const double k = 1e-3;
      Matrix oracle(2, 2);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          Vector pp = w, pm = w, mp = w, mm = w;
          pp(i) += k, pp(j) += k;
          pm(i) += k, pm(j) -= k;
          mp(i) -= k, mp(j) += k;
          mm(i) -= k, mm(j) -= k;
          oracle(i, j) = (net.mean_loss(pp) - net.mean_loss(pm) - net.mean_loss(mp) + net.mean_loss(mm)) / (4 * k * k);
        }
      }
      // closed form from differentiating the mean loss by hand
      CHECK(h(0, 1) == Approx(-2.0 * w1).epsilon(1e-6));
      CHECK(h(1, 1) == Approx(2.0 * std::pow(w1, 4)).epsilon(1e-6));
      CHECK(std::abs(h(0, 0)) < 1e-6);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(testing::rel_close(h(i, j), oracle(i, j), 1e-5, 1e-5));
      }
    }
  }

  TEST_CASE("sharpness") {
    const SharpFlatObjective sf(1.0, 14.0);
    CHECK(sharpness(sf, make_vector({1.0 / std::sqrt(2.0), 0.0})) == Approx(6.0));
    CHECK(sharpness(sf, make_vector({-1.0 / std::sqrt(2.0), 0.0})) == Approx(6.0));
    CHECK(sharpness(sf, make_vector({0.0, 1.0})) == Approx(18.0));
    CHECK(sharpness(sf, make_vector({0.0, -1.0})) == Approx(18.0));
    CHECK(sharpness(QuadraticObjective(2.0), make_vector({0.0})) == 1.0);
    CHECK_THROWS_AS(sharpness(sf, make_vector({0.3, 0.3})), ConfigError);
  }

  TEST_CASE("sharp minus flat sharpness is 12a") {
    for (double a : {0.1, 0.5, 1.0, 1.7}) {
      const SharpFlatObjective sf(a, 3.0);
      const double s_sharp = sharpness(sf, make_vector({0.0, std::sqrt((1.0 + a) / 2.0)}));
      const double s_flat = sharpness(sf, make_vector({1.0 / std::sqrt(2.0), 0.0}));
      CHECK(s_sharp - s_flat == Approx(12.0 * a));
      CHECK(s_flat == Approx(8.0 - 2.0 * a));
      CHECK(s_sharp == Approx(8.0 + 10.0 * a));
    }
  }

  TEST_CASE("catalogs") {
    const auto q = QuadraticObjective(-0.5).critical_point_catalog();
    REQUIRE(q.size() == 1);
    CHECK(q[0].kind == CriticalKind::saddle_or_max);
    CHECK(q[0].mean_loss == 0.0);
    CHECK(q[0].sharpness == -0.25);

    const auto quart = QuarticObjective(-1.0).critical_point_catalog();
    REQUIRE(quart.size() == 3);
    CHECK(quart[0].kind == CriticalKind::saddle_or_max);
    CHECK(quart[1].location(0) == Approx(std::sqrt(0.5)));
    CHECK(quart[2].location(0) == Approx(-std::sqrt(0.5)));
    CHECK(quart[1].kind == CriticalKind::minimum);

    const auto sf = SharpFlatObjective(1.0, 14.0).critical_point_catalog();
    int minima = 0;
    for (const auto& cp : sf) minima += cp.kind == CriticalKind::minimum ? 1 : 0;
    CHECK(minima == 4);

    const auto net = ToyNetObjective().critical_point_catalog();
    REQUIRE(net.size() == 3);
    for (const auto& cp : net) {
      CHECK(cp.kind == CriticalKind::manifold);
      CHECK(cp.samples.size() == 5);
    }
    CHECK(net[0].mean_loss == 2.25);
    CHECK(net[1].mean_loss == 2.5);
  }

  TEST_CASE("catalog entries are stationary") {
    std::vector<std::unique_ptr<StochasticObjective>> objs;
    objs.push_back(std::make_unique<QuadraticObjective>(-1.0));
    objs.push_back(std::make_unique<QuadraticObjective>(2.0));
    objs.push_back(std::make_unique<QuarticObjective>(-1.0));
    objs.push_back(std::make_unique<QuarticObjective>(0.5));
    objs.push_back(std::make_unique<SharpFlatObjective>(1.0, 14.0));
    objs.push_back(std::make_unique<SharpFlatObjective>(0.3, 2.0));
    objs.push_back(std::make_unique<ToyNetObjective>());
    for (const auto& obj : objs) {
      for (const auto& cp : obj->critical_point_catalog()) {
        for (const Vector& s : cp.samples) {
          INFO(obj->name() << " " << cp.label);
          CHECK(obj->mean_grad(s).norm() <= 1e-10);
          CHECK(cp.distance_to(s) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("manifold distances") {
    CHECK(ToyNetObjective::distance_to_saddle_manifold(make_vector({0.3, 0.5})) == Approx(0.3));
    CHECK(ToyNetObjective::distance_to_saddle_manifold(make_vector({0.0, -0.4})) == Approx(0.4));
    CHECK(ToyNetObjective::distance_to_global_min_manifold(make_vector({1.0, 0.5})) < 1e-12);
    // brute-force oracle along the parametrization s -> (s, 1/(2 s^2))
    for (const Vector& w : {make_vector({0.4, 0.2}), make_vector({-1.2, 1.5}), make_vector({0.05, 0.05})}) {
      double best = INFINITY;
      for (int k = 1; k <= 400000; ++k) {
        const double s = 0.005 * k / 100.0 + 0.01;
        for (double sign : {1.0, -1.0}) {
          best = std::min(best, std::hypot(w(0) - sign * s, w(1) - 0.5 / (s * s)));
        }
      }
      CHECK(ToyNetObjective::distance_to_global_min_manifold(w) == Approx(best).epsilon(1e-4));
    }
  }
}

TEST_SUITE("landscape-properties") {
  TEST_CASE("mean_grad matches central differences of mean_loss at 100 random points") {
    std::vector<std::unique_ptr<StochasticObjective>> objs;
    objs.push_back(std::make_unique<QuadraticObjective>(-1.0));
    objs.push_back(std::make_unique<QuarticObjective>(-0.7));
    objs.push_back(std::make_unique<SharpFlatObjective>(1.0, 14.0));
    objs.push_back(std::make_unique<ToyNetObjective>());
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& obj : objs) {
      for (int k = 0; k < 100; ++k) {
        Vector w(obj->dim());
        for (int i = 0; i < obj->dim(); ++i) w(i) = u(gen);
        const Vector g = obj->mean_grad(w);
        const Vector fd = testing::fd_gradient(*obj, w, 1e-5);
        for (int i = 0; i < obj->dim(); ++i) {
          INFO(obj->name() << " coord " << i);
          CHECK(testing::rel_close(g(i), fd(i), 1e-6, 1e-9));
        }
      }
    }
  }

  TEST_CASE("atom-averaged sample gradient equals mean gradient") {
    std::vector<std::unique_ptr<StochasticObjective>> objs;
    objs.push_back(std::make_unique<QuadraticObjective>(-1.3));
    objs.push_back(std::make_unique<QuarticObjective>(0.4));
    objs.push_back(std::make_unique<SharpFlatObjective>(0.8, 5.0));
    objs.push_back(std::make_unique<ToyNetObjective>());
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& obj : objs) {
      for (int k = 0; k < 100; ++k) {
        Vector w(obj->dim());
        for (int i = 0; i < obj->dim(); ++i) w(i) = u(gen);
        const Vector avg = atom_average_grad(*obj, w);
        const Vector mg = obj->mean_grad(w);
        CHECK((avg - mg).norm() <= 1e-13 * (1.0 + mg.norm()));
        CHECK(std::abs(atom_average_loss(*obj, w) - obj->mean_loss(w)) <= 1e-13 * (1.0 + std::abs(obj->mean_loss(w))));
      }
    }
  }

  TEST_CASE("quartic minima at +-sqrt(-a/2)") {
    for (double a : {-0.1, -1.0, -2.5}) {
      const QuarticObjective q(a);
      CHECK(q.mean_grad(make_vector({std::sqrt(-a / 2.0)})).norm() < 1e-14);
    }
  }

  TEST_CASE("landscape config round trip") {
    const auto cfg = LandscapeConfig::from_json({{"landscape", "sharpflat"}, {"a", 0.5}, {"b", 3.0}});
    const auto obj = make_landscape(cfg);
    CHECK(obj->name() == "sharpflat");
    CHECK(LandscapeConfig::from_json(cfg.to_json()).b == 3.0);
    CHECK_THROWS_AS(make_landscape(LandscapeConfig::from_json({{"landscape", "ring"}})), ConfigError);
    CHECK_THROWS_AS(SharpFlatObjective(-1.0, 2.0), ConfigError);
  }
}
