#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fracheat/mc.hpp"
#include "fracheat/energy.hpp"
#include "fracheat/noise_field.hpp"

using namespace fracheat;

TEST_SUITE("noise_field") {
  TEST_CASE("covariance kernel") {
    CHECK(covariance_R(0.7, 2.0, 2.0) == doctest::Approx(std::pow(2.0, 1.4)));
    CHECK(covariance_R(0.7, 0.5, 2.0) == covariance_R(0.7, 2.0, 0.5));
    CHECK(covariance_R(0.7, 0.0, 2.0) == 0.0);
  }

  TEST_CASE("H norm of a rectangle is the sheet variance") {
    const std::vector<double> hurst{0.75, 0.6};
    const double s = 0.7, x = 1.3;
    TabulatedFunction f{{{0.0, s}, {0.0, x}}, {1.0}};
    CHECK(inner_product_H(f, f, hurst) == doctest::Approx(std::pow(s, 1.5) * std::pow(x, 1.2)).epsilon(1e-12));
    // disjoint cells: symmetric and bit-identical under exchange
    TabulatedFunction g{{{0.0, 0.5, 1.0}, {0.0, 1.0, 2.0}}, {1.0, -2.0, 0.5, 3.0}};
    TabulatedFunction h{{{0.0, 0.5, 1.0}, {0.0, 1.0, 2.0}}, {0.3, 0.1, -1.0, 2.0}};
    CHECK(inner_product_H(g, h, hurst) == inner_product_H(h, g, hurst));
  }

  TEST_CASE("sampled sheet covariance") {
    SheetGrid grid{{{0.0, 0.5, 1.0}, {-1.0, 0.0, 1.0}}};
    const std::vector<double> hurst{0.75, 0.75};
    const SheetSampler sampler(grid, hurst);
    RunningStats v8, v3, c86;
    const int n = 8000;
    for (int i = 0; i < n; ++i) {
      RandomStream r = derive_stream(21, static_cast<std::uint64_t>(i));
      const NoiseSheet sh = sampler.sample(r);
      const auto v = sh.values();
      CHECK(v[4] == 0.0);  // x = 0 row vanishes
      v8.push(v[8] * v[8]);
      v3.push(v[3] * v[3]);
      c86.push(v[8] * v[6]);
    }
    CHECK(v8.mean == doctest::Approx(1.0).epsilon(0.05));
    CHECK(v3.mean == doctest::Approx(std::pow(0.5, 1.5)).epsilon(0.05));
    CHECK(c86.mean == doctest::Approx(covariance_R(0.75, 1.0, -1.0)).epsilon(0.1));
  }

  TEST_CASE("increments by inclusion-exclusion") {
    SheetGrid grid{{{0.0, 0.5, 1.0}, {0.0, 1.0, 2.0}}};
    RandomStream r = derive_stream(2, 0);
    const NoiseSheet sh = sample_sheet(grid, std::vector<double>{0.75, 0.75}, r);
    const auto v = sh.values();
    const auto d = sh.increments();
    REQUIRE(d.size() == 4);
    CHECK(d[3] == doctest::Approx(v[8] - v[7] - v[5] + v[4]));
  }

  TEST_CASE("binary round trip") {
    const Model m(ModelParams{});
    const SheetGrid grid = make_sheet_grid(m, 1.0, 8, 10);
    RandomStream r = derive_stream(3, 0);
    const NoiseSheet sh = sample_sheet(grid, m.hurst(), r);
    std::stringstream buf;
    sh.save(buf);
    const NoiseSheet back = NoiseSheet::load(buf);
    CHECK(back.grid().axes == sh.grid().axes);
    CHECK(std::equal(back.values().begin(), back.values().end(), sh.values().begin()));
    CHECK(back.seed() == sh.seed());
    std::stringstream junk("not a sheet");
    CHECK_THROWS(NoiseSheet::load(junk));
  }

  TEST_CASE("grid errors") {
    SheetGrid dup{{{0.0, 0.5, 0.5}, {0.0, 1.0}}};
    CHECK_THROWS_AS(SheetSampler(dup, {0.75, 0.75}), NonPositiveDefiniteError);
    const Model m(ModelParams{});
    CHECK_THROWS(SheetSampler(make_sheet_grid(m, 1.0, 100, 100), {0.75, 0.75}));  // node budget
    CHECK_THROWS_AS(Mollifier(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(Mollifier(0.1, -1.0), std::invalid_argument);
  }

  TEST_CASE("conditional variance: quadrature against the H inner product") {
    const Model m(ModelParams{});
    RandomStream r = derive_stream(4, 0);
    const LevyPath path = sample_path(m, 64, r);
    const SheetGrid grid = make_sheet_grid(m, 1.0, 32, 120);
    const Mollifier mo(0.25, 0.25);
    const TabulatedFunction a = approx_functional_A(path, mo, 1.0, grid);
    const double ip = inner_product_H(a, a, m.hurst());
    const double quad = conditional_variance_V(path, mo, m);
    CHECK(ip == doctest::Approx(quad).epsilon(0.02));
  }

  TEST_CASE("variance tends to alpha_H times the self energy") {
    const Model m(ModelParams{});
    RandomStream r = derive_stream(3, 0, 61);
    const LevyPath path = sample_path(m, 256, r);
    const double v = conditional_variance_V(path, Mollifier(1e-12, 1e-12), m);
    CHECK(v == doctest::Approx(m.alpha_H() * self_energy(path, m).value).epsilon(0.01));
  }

  TEST_CASE("coverage error outside the window") {
    const Model m(ModelParams{});
    const SheetGrid grid = make_sheet_grid(m, 1.0, 8, 10);
    RandomStream r = derive_stream(5, 0);
    const NoiseSheet sh = sample_sheet(grid, m.hurst(), r);
    const LevyPath far({0.0, 0.5, 1.0}, 1, {0.0, 50.0, 60.0});
    const std::vector<double> x{0.0};
    CHECK_THROWS_AS(sample_V_smoothed(sh, far, Mollifier(0.1, 0.1), 1.0, x), CoverageError);
  }
}
