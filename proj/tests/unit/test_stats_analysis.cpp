#include <cmath>

#include "doctest.h"
#include "fracheat/analysis.hpp"
#include "fracheat/stable.hpp"
#include "fracheat/stats.hpp"

using namespace fracheat;

TEST_SUITE("stats") {
  TEST_CASE("exact line") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5}, y{1, 3, 5, 7, 9, 11};
    const SlopeFit f = fit_slope(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.stderr_slope == doctest::Approx(0.0));
  }

  TEST_CASE("power law through the log-log fit") {
    std::vector<double> x, y;
    for (int i = 1; i <= 7; ++i) {
      x.push_back(std::pow(2.0, i));
      y.push_back(3.0 * std::pow(x.back(), 0.25));
    }
    const SlopeFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(0.25));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
    y[2] = -1.0;
    CHECK_THROWS_AS(fit_loglog(x, y), RegressionError);
  }

  TEST_CASE("regression preconditions") {
    const std::vector<double> four{1, 2, 3, 4};
    CHECK_THROWS_AS(fit_slope(four, four), RegressionError);
    const std::vector<double> flat{1, 1, 1, 1, 1}, any{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(fit_slope(flat, any), RegressionError);
  }

  TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
    CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0494).epsilon(0.01));
    CHECK(kolmogorov_survival(0.1) == 1.0);
  }

  TEST_CASE("two-sample KS") {
    std::vector<double> a, b, c;
    RandomStream r = derive_stream(1, 0);
    for (int i = 0; i < 2000; ++i) {
      a.push_back(r.normal());
      b.push_back(r.normal());
      c.push_back(r.normal() + 0.3);
    }
    const KsResult same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK(ks_two_sample(a, b).p_value > 0.001);
    CHECK(ks_two_sample(a, c).p_value < 1e-6);
  }
}

TEST_SUITE("analysis") {
  TEST_CASE("factorisation integral against the Beta closed form") {
    for (double H0 : {0.6, 0.75, 0.9}) {
      const double e = (2 * H0 - 3) / 2;
      for (double h : {0.1, 0.8}) {
        const double exact = std::pow(h, 2 * e + 1) * (std::beta(e + 1, e + 1) + 2 * std::beta(e + 1, -2 * e - 1));
        CHECK(factorization_integral(H0, h) == doctest::Approx(exact).epsilon(1e-8));
      }
    }
    const std::vector<double> lags{0.1, 0.2, 0.4, 0.8};
    const FactorizationCheck fc = kernel_factorization_check(0.75, lags);
    CHECK(fc.pass);
    CHECK(fc.spread < 0.01);
    CHECK(fc.homogeneity_error < 0.01);
  }

  TEST_CASE("geometric grid") {
    const auto g = geometric_grid(1e-2, 1e2, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(1e-2));
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(g.back() == doctest::Approx(1e2));
  }

  TEST_CASE("bound checks on the default grids") {
    const auto g = geometric_grid(1e-2, 1e2, 5);
    const std::vector<double> betas{0.3, 0.5, 0.7};
    const BoundCheck l72 = lemma_72_check(betas, g, g);
    CHECK(l72.pass);
    CHECK(std::isfinite(l72.max_ratio));
    const Lemma73Result l73 = lemma_73_check(1.5, 0.4, g, g);
    CHECK(l73.pass);
    CHECK(l73.max_route_gap < kRouteTolerance);
    const Lemma76Result l76 = lemma_76_check(1.5, 0.4, g);
    CHECK(l76.pass);
    CHECK(l76.limit_error < 0.01);
  }

  TEST_CASE("lemma 7.6 limit for alpha = 2") {
    // g(y) / y^2 -> (K/2) Gamma((beta + 2)/alpha) / alpha
    const double beta = 0.4, y = 1e-3;
    const double k = fourier_power_constant(beta);
    CHECK(lemma_76_g(2.0, beta, y) / (y * y) == doctest::Approx(0.5 * k * std::tgamma(1.2) / 2.0).epsilon(1e-3));
  }

  TEST_CASE("singular time integral scales like t^kappa") {
    const Model m(ModelParams{});
    RandomStream r = derive_stream(2, 0);
    const LevyPath path = sample_path(m, 64, r);
    const auto x = path.coordinate(0);
    const double a = singular_time_integral(m, x, 64, 1.0);
    // (4 s, 2 X_s) on [0, 4]
    std::vector<double> scaled(x.begin(), x.end());
    for (double& v : scaled) v *= 2.0;
    const double b = singular_time_integral(m, scaled, 64, 4.0);
    CHECK(b / a == doctest::Approx(std::pow(4.0, m.kappa())).epsilon(1e-10));
  }
}
