#include <cmath>

#include "doctest.h"
#include "fracheat/params.hpp"

using namespace fracheat;

TEST_SUITE("params") {
  TEST_CASE("default configuration constants") {
    const Model m(ModelParams{});
    CHECK(m.kappa() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m.gamma() == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(m.alpha_H() == doctest::Approx(0.140625).epsilon(1e-15));
    CHECK(m.time_exponent() == doctest::Approx(-0.5));
    REQUIRE(m.space_exponents().size() == 1);
    CHECK(m.space_exponents()[0] == doctest::Approx(-0.5));
    CHECK(m.space_scaling() == doctest::Approx(-0.25));
    CHECK(m.kappa() - 1.0 == doctest::Approx(m.time_exponent() + m.space_scaling()));
  }

  TEST_CASE("kappa for other parameter sets") {
    ModelParams p;
    p.hurst = {0.75, 0.8};
    CHECK(validate(p).kappa == doctest::Approx(0.3));
    p.alpha = 1.0;
    p.hurst = {0.9, 0.9};
    CHECK(validate(p).kappa == doctest::Approx(0.6));
    p.alpha = 1.5;
    p.dim = 2;
    p.hurst = {0.8, 0.9, 0.95};
    p.base_point = {0.0, 0.0};
    // 1.6 + (-0.2 - 0.1) / 1.5 - 1
    CHECK(validate(p).kappa == doctest::Approx(0.4));
    CHECK(validate(p).alpha_H == doctest::Approx(0.8 * 0.6 * 0.9 * 0.8 * 0.95 * 0.9));
  }

  TEST_CASE("inadmissible parameters carry kappa") {
    ModelParams p;
    p.alpha = 1.2;
    p.hurst = {0.6, 0.6};
    try {
      validate(p);
      FAIL("expected InadmissibleParameters");
    } catch (const InadmissibleParameters& e) {
      CHECK(e.kappa() == doctest::Approx(-0.466666666667));
    }
    CHECK_THROWS_AS(Model{p}, InadmissibleParameters);
  }

  TEST_CASE("range errors") {
    auto bad = [](auto edit) {
      ModelParams p;
      edit(p);
      CHECK_THROWS_AS(validate(p), ConfigError);
    };
    bad([](ModelParams& p) { p.alpha = 2.5; });
    bad([](ModelParams& p) { p.alpha = 0.0; });
    bad([](ModelParams& p) { p.hurst = {0.5, 0.75}; });
    bad([](ModelParams& p) { p.hurst = {0.75, 1.0}; });
    bad([](ModelParams& p) { p.hurst = {0.75}; });
    bad([](ModelParams& p) { p.horizon = 0.0; });
    bad([](ModelParams& p) { p.base_point = {0.0, 1.0}; });
    bad([](ModelParams& p) { p.base_point = {NAN}; });
    bad([](ModelParams& p) { p.dim = 0; });
  }

  TEST_CASE("copies re-validate") {
    const Model m(ModelParams{});
    CHECK(m.with_horizon(2.0).horizon() == 2.0);
    CHECK_THROWS_AS(m.with_horizon(-1.0), ConfigError);
    CHECK(m.with_base_point({3.0}).base_point()[0] == 3.0);
    CHECK_THROWS_AS(m.with_base_point({1.0, 2.0}), ConfigError);
  }
}
