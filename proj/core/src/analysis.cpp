#include "fracheat/analysis.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "fracheat/energy.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/stable.hpp"

namespace fracheat {

namespace {

constexpr std::uint64_t kZtDomain = 21;
constexpr std::uint64_t kZ1Domain = 22;
constexpr std::uint64_t kSubDomain = 31;  // four consecutive domains
constexpr std::uint64_t kTailDomain = 41;
constexpr std::uint64_t kLemma75Domain = 51;  // two consecutive domains

std::vector<double> refine(const std::vector<double>& axis) {
  if (axis.size() < 2) return axis;
  std::vector<double> out;
  for (std::size_t k = 0; k < axis.size(); ++k) {
    if (k > 0) {
      const double a = axis[k - 1], b = axis[k];
      out.push_back(a > 0.0 && b > 0.0 ? std::sqrt(a * b) : 0.5 * (a + b));
    }
    out.push_back(axis[k]);
  }
  return out;
}

void cartesian(const std::vector<std::vector<double>>& axes, std::size_t k, std::vector<double>& cur,
               std::vector<std::vector<double>>& out) {
  if (k == axes.size()) {
    out.push_back(cur);
    return;
  }
  for (double v : axes[k]) {
    cur.push_back(v);
    cartesian(axes, k + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<double>> product_grid(const std::vector<std::vector<double>>& axes) {
  std::vector<std::vector<double>> out;
  std::vector<double> cur;
  cartesian(axes, 0, cur, out);
  return out;
}

double max_finite(const std::vector<double>& v) {
  double m = 0.0;
  for (double r : v) {
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    m = std::max(m, r);
  }
  return m;
}

// Axes flagged in `refined` get geometric midpoints in the refined pass.
BoundCheck bound_over(std::string name, const std::vector<std::vector<double>>& axes,
                      const std::vector<bool>& refined,
                      const std::function<double(const std::vector<double>&)>& ratio) {
  BoundCheck b;
  b.name = std::move(name);
  b.points = product_grid(axes);
  for (const auto& p : b.points) b.ratios.push_back(ratio(p));
  b.max_ratio = max_finite(b.ratios);
  auto fine_axes = axes;
  for (std::size_t a = 0; a < axes.size(); ++a)
    if (refined[a]) fine_axes[a] = refine(axes[a]);
  double fine_max = 0.0;
  for (const auto& p : product_grid(fine_axes)) {
    const double r = ratio(p);
    if (!std::isfinite(r)) {
      fine_max = std::numeric_limits<double>::infinity();
      break;
    }
    fine_max = std::max(fine_max, r);
  }
  b.refined_max_ratio = fine_max;
  b.pass = std::isfinite(b.max_ratio) && std::isfinite(fine_max) && b.max_ratio > 0.0 &&
           std::abs(fine_max - b.max_ratio) <= kRefinementTolerance * b.max_ratio;
  return b;
}

HolderFit finish_fit(std::vector<double> abscissae, std::vector<MCEstimate> est, double target) {
  HolderFit h;
  h.abscissae = std::move(abscissae);
  h.estimates = std::move(est);
  h.target = target;
  std::vector<double> lx, ly, lx2;
  for (std::size_t k = 0; k < h.abscissae.size(); ++k) {
    const double c = h.estimates[k].mean;
    if (!(c > 0.0)) throw RegressionError("nonpositive Hoelder constant estimate");
    lx.push_back(std::log(h.abscissae[k]));
    lx2.push_back(2.0 * std::log(h.abscissae[k]));
    ly.push_back(std::log(c));
  }
  h.fit = fit_slope(lx, ly);
  h.control = fit_slope(lx2, ly);
  auto judge = [&](const SlopeFit& f) {
    return f.r_squared >= kMinRSquared && std::abs(f.slope - target) <= h.tolerance;
  };
  h.pass = judge(h.fit);
  h.control_pass = judge(h.control);
  return h;
}

MCEstimate mean_of(const std::vector<double>& v, const McOptions& opt) {
  RunningStats s;
  for (double x : v) s.push(x);
  return make_estimate(s, opt);
}

}  // namespace

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("geometric grid needs 0 < lo < hi, n >= 2");
  std::vector<double> g(n);
  const double r = std::log(hi / lo);
  for (std::size_t k = 0; k < n; ++k)
    g[k] = lo * std::exp(r * static_cast<double>(k) / static_cast<double>(n - 1));
  g.back() = hi;
  return g;
}

HolderFit spatial_holder_slope(const Model& model, double t, int axis,
                               std::span<const double> offsets, std::size_t n_paths,
                               const McOptions& opt, std::size_t n_steps) {
  auto est = holder_C_spatial(model, t, axis, offsets, n_paths, opt, n_steps);
  return finish_fit({offsets.begin(), offsets.end()}, std::move(est), model.alpha() * model.kappa());
}

HolderFit temporal_holder_slope(const Model& model, double t, std::span<const long> lag_steps,
                                std::size_t n_paths, const McOptions& opt, std::size_t n_steps) {
  auto est = holder_C_temporal(model, t, lag_steps, n_paths, opt, n_steps);
  std::vector<double> lags;
  for (long l : lag_steps) lags.push_back(static_cast<double>(l) * t / static_cast<double>(n_steps));
  return finish_fit(std::move(lags), std::move(est), model.kappa());
}

std::vector<double> sample_Z(const Model& model, double t, std::size_t n_paths, std::uint64_t seed,
                             std::uint64_t domain, unsigned workers, std::size_t n_steps) {
  const Model m = model.with_horizon(t);
  const EnergyGrid grid(m, n_steps, t / static_cast<double>(n_steps));
  return collect_samples(n_paths, seed, domain, workers, [&](RandomStream& rng, std::size_t) {
    const auto path = sample_path(m, n_steps, rng);
    return std::sqrt(grid.self(path, n_steps));
  });
}

ScalingCheck scaling_ks_check(const Model& model, double t, std::size_t n_paths,
                              const McOptions& opt, double exponent_shift, std::size_t n_steps) {
  const auto zt = sample_Z(model, t, n_paths, opt.seed, kZtDomain, opt.workers, n_steps);
  auto z1 = sample_Z(model, 1.0, n_paths, opt.seed, kZ1Domain, opt.workers, n_steps);
  ScalingCheck c;
  c.exponent = 0.5 * model.gamma() + exponent_shift;
  const double f = std::pow(t, c.exponent);
  for (double& z : z1) z *= f;
  c.ks = ks_two_sample(zt, std::move(z1));
  c.pass = c.ks.p_value > 0.01;
  return c;
}

SubadditivityCheck subadditivity_check(const Model& model, double t1, double t2,
                                       std::size_t n_paths, const McOptions& opt,
                                       std::size_t n_steps) {
  if (!(t1 > 0.0) || !(t2 > 0.0)) throw std::invalid_argument("subadditivity needs t1, t2 > 0");
  SubadditivityCheck c;
  c.z1 = mean_of(sample_Z(model, t1, n_paths, opt.seed, kSubDomain, opt.workers, n_steps), opt);
  c.z2 = mean_of(sample_Z(model, t2, n_paths, opt.seed, kSubDomain + 1, opt.workers, n_steps), opt);
  c.z12 = mean_of(sample_Z(model, t1 + t2, n_paths, opt.seed, kSubDomain + 2, opt.workers, n_steps), opt);
  c.unit = mean_of(sample_Z(model, 1.0, n_paths, opt.seed, kSubDomain + 3, opt.workers, n_steps), opt);
  const double se = std::sqrt(c.z1.std_error * c.z1.std_error + c.z2.std_error * c.z2.std_error +
                              c.z12.std_error * c.z12.std_error);
  c.pass = c.z12.mean <= c.z1.mean + c.z2.mean + 3.0 * se;
  const double f = std::pow(t1 + t2, 0.5 * model.gamma());
  c.scaling_gap = (c.z12.mean - f * c.unit.mean) / pooled_se(c.z12.std_error, f * c.unit.std_error);
  return c;
}

double factorization_integral(double H0, double h) {
  if (!(H0 > 0.5 && H0 < 1.0)) throw std::invalid_argument("factorization needs H0 in (1/2, 1)");
  h = std::abs(h);
  if (h == 0.0) return std::numeric_limits<double>::infinity();
  const double e = (2.0 * H0 - 3.0) / 2.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  // (0, h) is symmetric about h/2; the singular end is kept at 0
  const double middle =
      2.0 * ts.integrate([&](double u) { return std::pow(u, e) * std::pow(h - u, e); }, 0.0, 0.5 * h);
  // each outer half-line: int_0^inf v^e (v + h)^e dv
  const double near = ts.integrate([&](double v) { return std::pow(v, e) * std::pow(v + h, e); }, 0.0, h);
  const double far = es.integrate([&](double v) { return std::pow(v + h, e) * std::pow(v + 2.0 * h, e); });
  return middle + 2.0 * (near + far);
}

FactorizationCheck kernel_factorization_check(double H0, std::span<const double> lags) {
  FactorizationCheck c;
  c.H0 = H0;
  c.lags.assign(lags.begin(), lags.end());
  if (c.lags.size() < 2) throw std::invalid_argument("factorization check needs two lags");
  const double a0 = 2.0 * H0 - 2.0;
  for (double h : c.lags) {
    const double v = factorization_integral(H0, h);
    c.integrals.push_back(v);
    c.ratios.push_back(v / std::pow(std::abs(h), a0));
  }
  const auto [lo, hi] = std::minmax_element(c.ratios.begin(), c.ratios.end());
  const double mean = std::accumulate(c.ratios.begin(), c.ratios.end(), 0.0) / static_cast<double>(c.ratios.size());
  c.spread = (*hi - *lo) / mean;
  c.c0 = 1.0 / mean;
  const double target = std::pow(2.0, a0);
  for (double h : c.lags) {
    const double r = factorization_integral(H0, 2.0 * h) / factorization_integral(H0, h);
    c.homogeneity_error = std::max(c.homogeneity_error, std::abs(r / target - 1.0));
  }
  c.pass = c.spread < 0.01 && c.homogeneity_error < 0.01;
  return c;
}

TailReport tail_diagnostic(const Model& model, std::size_t n_paths, const McOptions& opt,
                           std::span<const double> lambdas, std::size_t n_steps) {
  TailReport r;
  r.n_paths = n_paths;
  r.exponent = 2.0 / (2.0 - model.gamma());
  auto z = sample_Z(model, 1.0, n_paths, opt.seed, kTailDomain, opt.workers, n_steps);
  r.lambdas.assign(lambdas.begin(), lambdas.end());
  const std::size_t sub = std::max<std::size_t>(1, n_paths / 10);
  for (double lam : r.lambdas) {
    RunningStats full, part;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double v = std::exp(lam * z[i] * z[i]);
      full.push(v);
      if (i < sub) part.push(v);
    }
    r.mgf.push_back(full.mean);
    r.mgf_subsample.push_back(part.mean);
    r.mgf_delta.push_back(std::abs(part.mean - full.mean) / full.mean);
  }
  std::sort(z.begin(), z.end(), std::greater<>());
  const double n = static_cast<double>(z.size());
  for (double p : {0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001}) {
    const auto k = static_cast<std::size_t>(std::ceil(p * n));
    if (k < 20 || k > z.size()) continue;
    const double zk = z[k - 1];
    const auto count = static_cast<double>(std::upper_bound(z.begin(), z.end(), zk, std::greater<>()) - z.begin());
    r.z.push_back(zk);
    r.log_survival.push_back(std::log(count / n));
  }
  r.decreasing = true;
  for (std::size_t k = 1; k < r.z.size(); ++k)
    if (!(r.z[k] > r.z[k - 1]) || !(r.log_survival[k] < r.log_survival[k - 1])) r.decreasing = false;
  // log P = a - C z^exponent
  if (r.z.size() >= 5) {
    std::vector<double> zp;
    for (double v : r.z) zp.push_back(std::pow(v, r.exponent));
    const auto fit = fit_slope(zp, r.log_survival);
    r.fitted_c = -fit.slope;
    r.fit_r_squared = fit.r_squared;
  }
  return r;
}

BoundCheck lemma_72_check(std::span<const double> betas, std::span<const double> eps_grid,
                          std::span<const double> x_grid) {
  return bound_over("lemma_72", {{betas.begin(), betas.end()}, {eps_grid.begin(), eps_grid.end()},
                                 {x_grid.begin(), x_grid.end()}},
                    {false, true, true}, [](const std::vector<double>& p) {
                      const double beta = p[0], eps = p[1], x = p[2];
                      const double value = gaussian_abs_moment(x, eps, -beta);
                      return value / std::min(std::pow(eps, -beta), std::pow(std::abs(x), -beta));
                    });
}

Lemma73Result lemma_73_check(double alpha, double beta, std::span<const double> eps_grid,
                             std::span<const double> x_grid) {
  Lemma73Result r;
  double gap = 0.0;
  r.bound = bound_over("lemma_73", {{eps_grid.begin(), eps_grid.end()}, {x_grid.begin(), x_grid.end()}},
                       {true, true}, [&](const std::vector<double>& p) {
                         const double z = p[1] / p[0];
                         const double dens = shifted_negative_moment_density(alpha, beta, z);
                         const double four = shifted_negative_moment_fourier(alpha, beta, z);
                         gap = std::max(gap, std::abs(four - dens) / std::abs(dens));
                         // E|x + eps Y|^{-beta} / eps^{-beta} = E|x/eps + Y|^{-beta}
                         return dens;
                       });
  r.max_route_gap = gap;
  if (gap > kRouteTolerance)
    throw RouteDisagreementError("lemma_73: Fourier and density routes differ by " + std::to_string(gap));
  r.pair_bound = bound_over("lemma_74", {{eps_grid.begin(), eps_grid.end()}, {eps_grid.begin(), eps_grid.end()},
                                         {x_grid.begin(), x_grid.end()}},
                            {true, true, true}, [&](const std::vector<double>& p) {
                              const double sd = std::hypot(p[0], p[1]);
                              return gaussian_abs_moment(p[2], sd, -beta) * std::pow(std::abs(p[2]), beta);
                            });
  r.pass = r.bound.pass && r.pair_bound.pass && gap <= kRouteTolerance;
  return r;
}

double singular_time_integral(const Model& model, std::span<const double> pos, std::size_t n_steps,
                              double t) {
  const int d = model.dim();
  const std::size_t nodes = n_steps + 1;
  if (pos.size() != nodes * static_cast<std::size_t>(d))
    throw std::invalid_argument("singular_time_integral: position count mismatch");
  const double a0 = model.time_exponent();
  const double sb = model.space_scaling();
  const auto b = model.space_exponents();
  const double q = a0 + sb + 1.0;
  const double h = t / static_cast<double>(n_steps);
  double total = 0.0;
  for (std::size_t j = 0; j < n_steps; ++j) {
    const double lo = static_cast<double>(j) * h, hi = static_cast<double>(j + 1) * h;
    // int_lo^hi s^a0 (s / hi)^sb ds
    const double w = std::pow(hi, -sb) * (std::pow(hi, q) - std::pow(lo, q)) / q;
    double sp = 1.0;
    for (int i = 0; i < d; ++i)
      sp *= std::pow(std::max(std::abs(pos[static_cast<std::size_t>(i) * nodes + j + 1]), kSeparationFloor),
                     b[static_cast<std::size_t>(i)]);
    total += w * sp;
  }
  return total;
}

Lemma75Result lemma_75_check(const Model& model, std::size_t n_small, std::size_t n_large,
                             const McOptions& opt, std::size_t n_steps) {
  const double t = model.horizon();
  const Model m = model.with_base_point(std::vector<double>(static_cast<std::size_t>(model.dim()), 0.0));
  auto run = [&](std::size_t n, std::uint64_t domain) {
    auto res = run_ensemble(n, 1, opt.seed, domain, opt.workers,
                            [&](RandomStream& rng, std::size_t, std::span<double> out) {
                              const auto path = sample_path(m, n_steps, rng);
                              const double v = singular_time_integral(m, path.raw_positions(), n_steps, t);
                              out[0] = v * v;
                              return std::isfinite(out[0]);
                            });
    return make_estimate(res.stats[0], opt, res.rejected);
  };
  Lemma75Result r;
  r.small = run(n_small, kLemma75Domain);
  r.large = run(n_large, kLemma75Domain + 1);
  r.relative_gap = std::abs(r.small.mean - r.large.mean) / r.large.mean;
  // expected cell contributions are proportional to (t_{j+1}^q - t_j^q)
  const double q = m.kappa();
  const double h = t / static_cast<double>(n_steps);
  r.cells_decrease = true;
  double prev = std::pow(h, q);
  for (std::size_t j = 1; j < n_steps; ++j) {
    const double c = std::pow(static_cast<double>(j + 1) * h, q) - std::pow(static_cast<double>(j) * h, q);
    if (!(c < prev)) r.cells_decrease = false;
    prev = c;
  }
  r.pass = std::isfinite(r.small.mean) && std::isfinite(r.large.mean) && r.relative_gap < 0.2;
  return r;
}

double lemma_76_g(double alpha, double beta, double y) {
  if (y == 0.0) return 0.0;
  const double ay = std::abs(y);
  const double k = fourier_power_constant(beta);
  const double upper = std::pow(40.0, 1.0 / alpha);
  auto f = [&](double u) {
    const double s = std::sin(0.5 * ay * u);
    return std::pow(u, beta - 1.0) * std::exp(-std::pow(u, alpha)) * 2.0 * s * s;
  };
  return k * integrate_oscillatory(f, ay, upper, 1e-8, beta + 1.0);
}

Lemma76Result lemma_76_check(double alpha, double beta, std::span<const double> y_grid) {
  Lemma76Result r;
  r.bound = bound_over("lemma_76", {{y_grid.begin(), y_grid.end()}}, {true},
                       [&](const std::vector<double>& p) {
                         return lemma_76_g(alpha, beta, p[0]) / std::min(1.0, p[0] * p[0]);
                       });
  const double k = fourier_power_constant(beta);
  const double upper = std::pow(40.0, 1.0 / alpha);
  r.limit = 0.5 * k * integrate_graded([&](double u) { return std::pow(u, beta + 1.0) * std::exp(-std::pow(u, alpha)); },
                                       0.0, upper, -1);
  const double ymin = *std::min_element(y_grid.begin(), y_grid.end());
  r.small_y_ratio = lemma_76_g(alpha, beta, ymin) / (ymin * ymin);
  r.limit_error = std::abs(r.small_y_ratio / r.limit - 1.0);
  r.pass = r.bound.pass && r.limit_error < 0.01;
  return r;
}

}  // namespace fracheat
