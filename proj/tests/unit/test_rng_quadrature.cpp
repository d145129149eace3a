#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracheat/mc.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/rng.hpp"

using namespace fracheat;

TEST_SUITE("rng") {
  TEST_CASE("splitmix64 reference output") {
    // first output of the reference generator seeded with 0
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  }

  TEST_CASE("derived streams are reproducible and distinct") {
    RandomStream a = derive_stream(42, 7, 3), b = derive_stream(42, 7, 3);
    RandomStream c = derive_stream(42, 8, 3), d = derive_stream(42, 7, 4);
    for (int i = 0; i < 100; ++i) {
      const double x = a.uniform();
      CHECK(x == b.uniform());
      CHECK(x != c.uniform());
      CHECK(x != d.uniform());
    }
  }

  TEST_CASE("variate ranges and moments") {
    RandomStream r = derive_stream(1, 0);
    RunningStats u, n, e;
    for (int i = 0; i < 200000; ++i) {
      const double x = r.uniform();
      REQUIRE(x >= 0.0);
      REQUIRE(x < 1.0);
      const double y = r.uniform_open();
      REQUIRE(y > 0.0);
      REQUIRE(y < 1.0);
      u.push(x);
      n.push(r.normal());
      e.push(r.exponential());
    }
    CHECK(u.mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(n.mean) < 0.01);
    CHECK(n.variance() == doctest::Approx(1.0).epsilon(0.01));
    CHECK(e.mean == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("running stats merge equals sequential push") {
    RunningStats all, left, right;
    for (int i = 0; i < 1000; ++i) {
      const double x = std::sin(i * 0.37) * i;
      all.push(x);
      (i < 400 ? left : right).push(x);
    }
    left.merge(right);
    CHECK(left.count == all.count);
    CHECK(left.mean == doctest::Approx(all.mean).epsilon(1e-12));
    CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  }

  TEST_CASE("ensemble result independent of worker count") {
    auto run = [](unsigned workers) {
      return run_ensemble(3000, 2, 9, 1, workers, [](RandomStream& rng, std::size_t i, std::span<double> out) {
        out[0] = rng.normal();
        out[1] = rng.uniform();
        return i % 17 != 0;
      });
    };
    const auto a = run(1), b = run(3);
    CHECK(a.rejected == b.rejected);
    CHECK(a.stats[0].mean == b.stats[0].mean);
    CHECK(a.stats[0].m2 == b.stats[0].m2);
    CHECK(a.stats[1].mean == b.stats[1].mean);
  }
}

TEST_SUITE("quadrature") {
  TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    const double v = integrate_gl([](double x) { return std::pow(x, 9) - 3 * x * x + 1; }, -1.0, 2.0, 5);
    CHECK(v == doctest::Approx((std::pow(2.0, 10) - 1.0) / 10.0 - (8.0 + 1.0) + 3.0).epsilon(1e-13));
  }

  TEST_CASE("Gauss-Hermite moments") {
    const auto r = gauss_hermite(20);
    double m0 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      m0 += r.weights[i];
      m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
      m4 += r.weights[i] * std::pow(r.nodes[i], 4);
    }
    const double sp = std::sqrt(std::numbers::pi);
    CHECK(m0 == doctest::Approx(sp).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(sp / 2).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(3 * sp / 4).epsilon(1e-13));
  }

  TEST_CASE("graded rule handles endpoint singularities") {
    CHECK(integrate_graded([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, -1) ==
          doctest::Approx(2.0).epsilon(1e-8));
    CHECK(integrate_graded([](double x) { return std::pow(1.0 - x, -0.7); }, 0.0, 1.0, 1) ==
          doctest::Approx(1.0 / 0.3).epsilon(1e-8));
    // Beta(0.5, 0.5) = pi
    CHECK(integrate_graded([](double x) { return 1.0 / std::sqrt(x * (1 - x)); }, 0.0, 1.0, 0) ==
          doctest::Approx(std::numbers::pi).epsilon(1e-8));
  }

  TEST_CASE("power pair integral against nested quadrature") {
    const double e = -0.5;
    auto brute = [&](double a1, double b1, double a2, double b2) {
      return integrate_gl(
          [&](double u) {
            std::vector<double> br{a2, b2};
            std::vector<double> sing;
            if (u > a2 && u < b2) { br.push_back(u); sing.push_back(u); }
            if (u == a2 || u == b2) sing.push_back(u);
            return integrate_pieces([&](double v) { return std::pow(std::abs(u - v), e); }, a2, b2, br, sing);
          },
          a1, b1, 40);
    };
    CHECK(power_pair_integral(0, 1, 3, 4, e) == doctest::Approx(brute(0, 1, 3, 4)).epsilon(1e-10));
    // same interval: 2 / ((e+1)(e+2))
    CHECK(power_pair_integral(0, 1, 0, 1, e) == doctest::Approx(2.0 / (0.5 * 1.5)).epsilon(1e-12));
    CHECK(power_pair_integral(0, 1, 0.5, 2, e) == doctest::Approx(brute(0, 1, 0.5, 2)).epsilon(1e-5));
  }

  TEST_CASE("second difference series matches direct form") {
    for (double q : {1.5, 0.3, 1.9}) {
      const double r = 25.0;
      const double direct = std::pow(r + 1, q) - 2 * std::pow(r, q) + std::pow(r - 1, q);
      CHECK(power_second_difference(r, q) == doctest::Approx(direct).epsilon(1e-9));
      CHECK(power_second_difference(0.0, q) == doctest::Approx(2.0));
    }
  }

  TEST_CASE("Gaussian absolute moments") {
    for (double b : {-0.5, -0.2, -0.8}) {
      const double exact = std::pow(2.0, b / 2) * std::tgamma((b + 1) / 2) / std::sqrt(std::numbers::pi);
      CHECK(gaussian_abs_moment(0.0, 1.0, b) == doctest::Approx(exact).epsilon(1e-9));
      CHECK(gaussian_abs_moment(0.0, 2.0, b) == doctest::Approx(exact * std::pow(2.0, b)).epsilon(1e-9));
      // far from the origin the moment approaches |mu|^b
      CHECK(gaussian_abs_moment(1e4, 1.0, b) == doctest::Approx(std::pow(1e4, b)).epsilon(1e-6));
      const auto& table = abs_moment_table(b);
      for (double z : {0.0, 0.3, 2.7, 15.0, 40.0})
        CHECK(table.standard(z) == doctest::Approx(abs_moment_quadrature(z, b)).epsilon(1e-7));
    }
  }
}
