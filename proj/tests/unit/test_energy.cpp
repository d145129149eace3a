#include <cmath>

#include "doctest.h"
#include "fracheat/energy.hpp"

using namespace fracheat;

namespace {

Model model_with(std::vector<double> hurst, double alpha = 2.0) {
  ModelParams p;
  p.alpha = alpha;
  p.hurst = std::move(hurst);
  p.dim = static_cast<int>(p.hurst.size()) - 1;
  p.base_point.assign(p.dim, 0.0);
  return Model(p);
}

}  // namespace

TEST_SUITE("energy") {
  TEST_CASE("diagonal weight closed form") {
    const Model m = model_with({0.75, 0.75});
    for (double h : {1.0, 0.25}) {
      const EnergyGrid g(m, 8, h);
      // 2 int_0^h (h - tau) tau^(kappa - 1) d tau, scaled so the path factor is per-cell
      const double k = m.kappa();
      CHECK(g.weight(0) * std::pow(h, m.space_scaling()) ==
            doctest::Approx(2 * std::pow(h, k + 1) / (k * (k + 1))).epsilon(1e-10));
    }
  }

  TEST_CASE("path scaling is exact on the image grid") {
    for (auto hurst : {std::vector<double>{0.75, 0.75}, std::vector<double>{0.75, 0.8}}) {
      for (double alpha : {2.0, 1.5}) {
        const Model m = model_with(hurst, alpha);
        RandomStream r = derive_stream(8, 0);
        const LevyPath path = sample_path(m, 64, r);
        for (double lambda : {2.0, 4.0}) {
          const auto [base, image] = path_scaling_check(path, m, lambda);
          CHECK(image.value / base.value == doctest::Approx(std::pow(lambda, m.gamma())).epsilon(1e-10));
          CHECK(base.grid_size == 64);
          CHECK(base.diagonal_rule == kDiagonalRule);
        }
      }
    }
  }

  TEST_CASE("cross energy of a path with itself is its self energy") {
    const Model m = model_with({0.75, 0.75});
    RandomStream r = derive_stream(9, 0);
    const LevyPath path = sample_path(m, 32, r);
    const std::vector<double> zero{0.0};
    CHECK(cross_energy(path, path, zero, m).value == self_energy(path, m).value);
  }

  TEST_CASE("prefix energies") {
    const Model m = model_with({0.75, 0.75});
    RandomStream r = derive_stream(10, 0);
    const LevyPath path = sample_path(m, 32, r);
    const EnergyGrid g(m, 32, 1.0 / 32);
    const auto pre = g.self_prefixes(path);
    REQUIRE(pre.size() == 32);
    for (std::size_t k : {0u, 7u, 31u}) CHECK(pre[k] == doctest::Approx(g.self(path, k + 1)).epsilon(1e-12));
    for (std::size_t k = 1; k < pre.size(); ++k) CHECK(pre[k] >= pre[k - 1]);
  }

  TEST_CASE("expected self energy") {
    // E int int |s - r|^(2H0-2) |X_s - X_r|^b = 2 E|xi|^b / (kappa (kappa + 1)) on [0, 1]
    const Model m = model_with({0.75, 0.8});
    const EnergyGrid g(m, 128, 1.0 / 128);
    const auto res = run_ensemble(2000, 1, 12, 0, 1, [&](RandomStream& rng, std::size_t, std::span<double> out) {
      out[0] = g.self(sample_path(m, 128, rng), 128);
      return true;
    });
    const double oracle = 2 * negative_moment(2.0, 0.4) / (m.kappa() * m.gamma());
    CHECK(std::abs(res.stats[0].mean - oracle) < 4 * res.stats[0].standard_error());
  }

  TEST_CASE("degenerate paths are rejected") {
    const Model m = model_with({0.75, 0.75});
    const LevyPath uneven({0.0, 0.1, 0.5, 1.0}, 1, {0.0, 0.1, 0.2, 0.3});
    CHECK_THROWS_AS(self_energy(uneven, m), DegeneratePathError);
    const LevyPath bad({0.0, 0.5, 1.0}, 1, {0.0, NAN, 0.3});
    CHECK_THROWS_AS(self_energy(bad, m), DegeneratePathError);
  }

  TEST_CASE("Hoelder constant vanishes on the diagonal") {
    const Model m = model_with({0.75, 0.75});
    McOptions opt;
    opt.seed = 4;
    const std::vector<double> x{0.0};
    const MCEstimate c = holder_C(1.0, 1.0, x, x, m, 64, opt, 32);
    CHECK(std::abs(c.mean) < 1e-9);
  }
}
