#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracheat/mc.hpp"
#include "fracheat/stable.hpp"

using namespace fracheat;

namespace {

// E|X|^p for X ~ S(alpha, 1), -1 < p < alpha.
double stable_abs_moment(double alpha, double p) {
  return std::pow(2.0, p) * std::tgamma((1 + p) / 2) * std::tgamma(1 - p / alpha) /
         (std::sqrt(std::numbers::pi) * std::tgamma(1 - p / 2));
}

}  // namespace

TEST_SUITE("stable") {
  TEST_CASE("Gaussian and Cauchy draws") {
    RandomStream r = derive_stream(5, 0);
    RunningStats g;
    int inside = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      g.push(sample_stable(2.0, 1.5, r));
      if (std::abs(sample_stable(1.0, 1.0, r)) < 1.0) ++inside;
    }
    CHECK(g.variance() == doctest::Approx(2.0 * 1.5 * 1.5).epsilon(0.02));
    CHECK(static_cast<double>(inside) / n == doctest::Approx(0.5).epsilon(0.02));
  }

  TEST_CASE("empirical cdf matches the density table") {
    for (double alpha : {0.8, 1.5}) {
      RandomStream r = derive_stream(6, 0);
      const int n = 50000;
      int below = 0;
      for (int i = 0; i < n; ++i) below += sample_stable(alpha, 1.0, r) <= 1.0;
      CHECK(static_cast<double>(below) / n == doctest::Approx(density_table(alpha).cdf(1.0)).epsilon(0.01));
    }
  }

  TEST_CASE("closed-form densities") {
    const double t = 0.7, x = 0.9;
    CHECK(transition_density_1d(2.0, t, x) ==
          doctest::Approx(std::exp(-x * x / (4 * t)) / std::sqrt(4 * std::numbers::pi * t)).epsilon(1e-14));
    CHECK(transition_density_1d(1.0, t, x) == doctest::Approx(t / (std::numbers::pi * (t * t + x * x))).epsilon(1e-14));
    const std::vector<double> v{0.3, -0.4};
    CHECK(transition_density(2.0, t, v) ==
          doctest::Approx(transition_density_1d(2.0, t, 0.3) * transition_density_1d(2.0, t, -0.4)));
  }

  TEST_CASE("self-similarity and normalisation of the Fourier density") {
    const double alpha = 1.5, t = 2.0;
    for (double x : {0.0, 0.5, 3.0}) {
      const double s = std::pow(t, 1 / alpha);
      CHECK(transition_density_1d(alpha, t, x) ==
            doctest::Approx(transition_density_1d(alpha, 1.0, x / s) / s).epsilon(1e-8));
    }
    CHECK(density_table(1.5).normalization() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(density_table(0.7).normalization() == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(density_table(1.5).cdf(0.0) == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("negative moments") {
    for (double beta : {0.2, 0.4, 0.7}) {
      CHECK(negative_moment(2.0, beta) ==
            doctest::Approx(std::pow(2.0, -beta) * std::tgamma((1 - beta) / 2) / std::sqrt(std::numbers::pi))
                .epsilon(1e-9));
      CHECK(negative_moment(1.0, beta) == doctest::Approx(1.0 / std::cos(std::numbers::pi * beta / 2)).epsilon(1e-8));
      CHECK(negative_moment(1.5, beta) == doctest::Approx(stable_abs_moment(1.5, -beta)).epsilon(1e-7));
    }
  }

  TEST_CASE("shifted negative moment: two routes") {
    for (double z : {0.0, 0.7, 4.0}) {
      const double a = shifted_negative_moment_fourier(1.5, 0.4, z);
      const double b = shifted_negative_moment_density(1.5, 0.4, z);
      CHECK(a == doctest::Approx(b).epsilon(1e-3));
    }
    CHECK(shifted_negative_moment_fourier(1.5, 0.4, 0.0) == doctest::Approx(negative_moment(1.5, 0.4)).epsilon(1e-6));
  }

  TEST_CASE("path structure") {
    ModelParams p;
    p.alpha = 1.5;
    p.dim = 2;
    p.hurst = {0.8, 0.9, 0.9};
    p.base_point = {1.0, -2.0};
    const Model m(p);
    RandomStream r = derive_stream(2, 0);
    LevyPath path = sample_path(m, 16, r);
    CHECK(path.n_steps() == 16);
    CHECK(path.uniform());
    CHECK(path.position(0, 0) == 1.0);
    CHECK(path.position(1, 0) == -2.0);
    CHECK(path.horizon() == doctest::Approx(1.0));

    const LevyPath pre = path.prefix(4);
    CHECK(pre.n_steps() == 4);
    CHECK(pre.position(1, 4) == path.position(1, 4));
    const LevyPath sub = path.subsampled(4);
    CHECK(sub.n_steps() == 4);
    CHECK(sub.position(0, 2) == path.position(0, 8));

    const LevyPath big = path.rescaled(4.0, 1.5);
    CHECK(big.horizon() == doctest::Approx(4.0));
    const double s = std::pow(4.0, 1 / 1.5);
    CHECK(big.position(0, 5) == doctest::Approx(1.0 + s * (path.position(0, 5) - 1.0)));

    path.extend(8, 1.5, r);
    CHECK(path.n_steps() == 24);
    CHECK(path.horizon() == doctest::Approx(1.5));
    CHECK(path.uniform());
  }

  TEST_CASE("increments have the stable scale") {
    ModelParams p;
    const Model m(p);
    RunningStats st;
    for (std::size_t i = 0; i < 20000; ++i) {
      RandomStream r = derive_stream(3, i);
      const LevyPath path = sample_path(m, 4, r);
      st.push(path.position(0, 4));
    }
    // alpha = 2: X_1 ~ N(0, 2)
    CHECK(st.variance() == doctest::Approx(2.0).epsilon(0.03));
  }
}
