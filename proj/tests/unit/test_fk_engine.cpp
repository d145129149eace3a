#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracheat/fk_engine.hpp"
#include "fracheat/quadrature.hpp"

using namespace fracheat;

namespace {

const Model& defaults() {
  static const Model m{ModelParams{}};
  return m;
}

McOptions seeded(std::uint64_t seed, unsigned workers = 1) {
  McOptions o;
  o.seed = seed;
  o.workers = workers;
  o.config_hash = 0xabc;
  return o;
}

}  // namespace

TEST_SUITE("fk_engine") {
  TEST_CASE("initial data evaluation and semigroup smoothing") {
    const std::vector<double> y{0.4};
    const auto c = InitialData::constant(2.5);
    CHECK(c(y) == 2.5);
    CHECK(c.smoothed(1.3, 0.7, y) == 2.5);

    const auto bump = InitialData::gaussian_bump(2.0, {0.1}, 0.5);
    const double s = 0.3, v = 0.25 + 2 * s;
    CHECK(bump(y) == doctest::Approx(2.0 * std::exp(-0.09 / 0.5)));
    CHECK(bump.smoothed(2.0, s, y) == doctest::Approx(2.0 * std::sqrt(0.25 / v) * std::exp(-0.09 / (2 * v))).epsilon(1e-12));
    // alpha = 1.5: against direct convolution with the density
    double direct = 0.0;
    for (int k = 0; k < 80; ++k)
      direct += integrate_gl(
          [&](double z) {
            const std::vector<double> p{y[0] + z};
            return bump(p) * transition_density_1d(1.5, s, z);
          },
          -8.0 + 0.2 * k, -7.8 + 0.2 * k, 20);
    CHECK(bump.smoothed(1.5, s, y) == doctest::Approx(direct).epsilon(1e-6));

    const auto box = InitialData::indicator_box({-0.5}, {1.0}, 3.0);
    CHECK(box(y) == 3.0);
    const std::vector<double> out{2.0};
    CHECK(box(out) == 0.0);
    const double sd = std::sqrt(2 * s);
    auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    CHECK(box.smoothed(2.0, s, y) == doctest::Approx(3.0 * (phi(0.6 / sd) - phi(-0.9 / sd))).epsilon(1e-12));
    CHECK(box.smoothed(1.0, s, y) ==
          doctest::Approx(3.0 * (std::atan(0.6 / s) - std::atan(-0.9 / s)) / std::numbers::pi).epsilon(1e-12));
  }

  TEST_CASE("Skorohod first moment of f = 1 is exactly one") {
    const std::vector<double> x{0.0};
    const auto f = InitialData::constant(1.0);
    const MCEstimate e = moment_skorohod(1, 1.0, x, f, defaults(), 500, seeded(1));
    CHECK(e.mean == 1.0);
    CHECK(e.std_error == 0.0);
    CHECK(e.n_samples == 500);
    CHECK(e.config_hash == 0xabc);
  }

  TEST_CASE("bridge identity per replicate") {
    const std::vector<double> x{0.0};
    const auto f = InitialData::gaussian_bump(1.0, {0.0}, 1.0);
    for (int p : {1, 2}) {
      const auto reps = moment_bridge(p, 1.0, x, f, defaults(), 200, seeded(2), 64);
      const double ah = defaults().alpha_H();
      for (const auto& r : reps) {
        REQUIRE_FALSE(r.rejected);
        CHECK(r.stratonovich == r.skorohod * std::exp(0.5 * ah * r.self_sum));
      }
      // replicate means agree with the estimators on the same streams
      RunningStats st;
      for (const auto& r : reps) st.push(r.stratonovich);
      CHECK(st.mean == doctest::Approx(moment_stratonovich(p, 1.0, x, f, defaults(), 200, seeded(2), 64).mean).epsilon(1e-12));
    }
  }

  TEST_CASE("Jensen ordering and worker independence") {
    const std::vector<double> x{0.0};
    const auto f = InitialData::constant(1.0);
    const MCEstimate m1 = moment_stratonovich(1, 1.0, x, f, defaults(), 1000, seeded(3), 64);
    const MCEstimate m2 = moment_stratonovich(2, 1.0, x, f, defaults(), 1000, seeded(3), 64);
    const MCEstimate m2w = moment_stratonovich(2, 1.0, x, f, defaults(), 1000, seeded(3, 4), 64);
    CHECK(m1.mean > 1.0);
    CHECK(m2.mean >= m1.mean * m1.mean - 3 * std::hypot(m2.std_error, 2 * m1.mean * m1.std_error));
    CHECK(m2.mean == m2w.mean);
    CHECK(m2.std_error == m2w.std_error);
  }

  TEST_CASE("nested horizons") {
    const std::vector<double> times{0.25, 0.5, 1.0};
    const MomentLadder l = moment_t_ladder(defaults(), times, 1.0 / 64, 300, seeded(4));
    REQUIRE(l.estimates.size() == 3);
    CHECK(l.ordering_violations == 0);
    CHECK(l.estimates[0].mean < l.estimates[1].mean);
    CHECK(l.estimates[1].mean < l.estimates[2].mean);
    const std::vector<double> bad{0.3};
    CHECK_THROWS_AS(moment_t_ladder(defaults(), bad, 0.25, 10, seeded(4)), std::invalid_argument);
  }

  TEST_CASE("chaos kernels") {
    const std::vector<double> x{0.0};
    const auto f = InitialData::constant(1.0);
    const std::vector<double> s1{0.5}, y1{0.0};
    const double f1 = chaos_kernel_f_n(1, s1, y1, 1.0, x, f, defaults());
    CHECK(f1 == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));
    const std::vector<double> s2{0.5, 0.25}, y2{0.0, 0.0};
    CHECK(chaos_kernel_f_n(2, s2, y2, 1.0, x, f, defaults()) ==
          doctest::Approx(0.5 * f1 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
    const std::vector<double> same{0.5, 0.5};
    CHECK_THROWS_AS(chaos_kernel_f_n(2, same, y2, 1.0, x, f, defaults()), CoincidentTimesError);

    // the mollified kernel tends to n! f_n
    CHECK(chaos_kernel_h_n_smoothed(1, s1, y1, 1.0, x, f, defaults(), 1e-6) == doctest::Approx(f1).epsilon(1e-4));
    const double h = chaos_kernel_h_n_smoothed(1, s1, y1, 1.0, x, f, defaults(), 0.01);
    const MCEstimate mc = chaos_kernel_h_n_mc(1, s1, y1, 1.0, x, f, defaults(), 0.01, 200000, seeded(5));
    CHECK(std::abs(mc.mean - h) < 4 * mc.std_error);
  }

  TEST_CASE("first chaos norm") {
    const std::vector<double> x{0.0};
    const auto f = InitialData::constant(1.0);
    const double norm = first_chaos_norm(1.0, x, f, defaults());
    const MCEstimate mc = first_chaos_mc(1.0, x, f, defaults(), 4000, seeded(6), 64);
    CHECK(std::abs(mc.mean - norm) < 4 * mc.std_error + 0.01 * norm);
    // t^gamma scaling for constant data
    CHECK(first_chaos_norm(2.0, x, f, defaults()) == doctest::Approx(norm * std::pow(2.0, 1.25)).epsilon(1e-8));
  }

  TEST_CASE("smoothed solution on sheets is reproducible") {
    const std::vector<double> x{0.0};
    const auto f = InitialData::constant(1.0);
    SmoothedGrid g{8, 40, 16};
    const MCEstimate a = smoothed_solution_mean(Mollifier(0.25, 0.25), 1.0, x, f, defaults(), 8, 8, seeded(7), g);
    const MCEstimate b = smoothed_solution_mean(Mollifier(0.25, 0.25), 1.0, x, f, defaults(), 8, 8, seeded(7, 3), g);
    CHECK(a.mean == b.mean);
    CHECK(a.mean > 0.0);
    CHECK(a.n_samples == 8);
  }
}
