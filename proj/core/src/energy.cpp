#include "fracheat/energy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "fracheat/quadrature.hpp"

namespace fracheat {

namespace {

// int tri_m(tau) |tau|^p d tau for m >= 0 (tri of half-width h around m h).
double tri_power_integral(std::size_t m, double h, double p) {
  const double q = p + 2.0;
  const double scale = std::pow(h, q) / ((p + 1.0) * (p + 2.0));
  if (m == 0) return 2.0 * scale;
  return scale * power_second_difference(static_cast<double>(m), q);
}

inline double floored_pow(double x, double b) {
  return std::pow(std::max(std::abs(x), kSeparationFloor), b);
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

EnergyGrid::EnergyGrid(const Model& model, std::size_t n, double h)
    : model_(model), n_(n), h_(h) {
  if (n < 1 || !(h > 0.0)) throw std::invalid_argument("EnergyGrid needs n >= 1 and h > 0");
  a0_ = model.time_exponent();
  sb_ = model.space_scaling();
  b_.assign(model.space_exponents().begin(), model.space_exponents().end());
  const double p = a0_ + sb_;
  w0_.resize(n + 1);
  tw_.resize(n + 1);
  for (std::size_t m = 0; m <= n; ++m) {
    const double mu = static_cast<double>(std::max<std::size_t>(m, 1)) * h;
    w0_[m] = tri_power_integral(m, h, p) / std::pow(mu, sb_);
    tw_[m] = tri_power_integral(m, h, a0_);
  }
}

void EnergyGrid::check_path(const LevyPath& path, std::size_t cells) const {
  if (path.dim() != model_.dim()) throw std::invalid_argument("path dimension does not match model");
  if (cells > n_ || cells > path.n_steps())
    throw std::invalid_argument("path shorter than requested cell count");
  const auto t = path.times();
  for (std::size_t k = 1; k <= cells; ++k)
    if (std::abs(t[k] - t[k - 1] - h_) > 1e-9 * h_)
      throw DegeneratePathError("path grid does not match the energy grid step");
  for (double x : path.raw_positions())
    if (!std::isfinite(x)) throw DegeneratePathError("path has non-finite positions");
}

std::vector<double> EnergyGrid::lagged_weights(long lag_steps) const {
  const long n = static_cast<long>(n_);
  std::vector<double> out(2 * n_ - 1);
  const double c = static_cast<double>(lag_steps) * h_;
  for (long m = -(n - 1); m <= n - 1; ++m) {
    const std::size_t idx = static_cast<std::size_t>(m + n - 1);
    if (lag_steps == 0) {
      out[idx] = w0_[static_cast<std::size_t>(std::abs(m))];
      continue;
    }
    const double mu = static_cast<double>(std::max(std::abs(m), 1L)) * h_;
    const double centre = static_cast<double>(m) * h_;
    const double lo = centre - h_, hi = centre + h_;
    auto f = [&](double tau) {
      const double tri = h_ - std::abs(tau - centre);
      if (tri <= 0.0) return 0.0;
      const double dt = std::abs(tau - c);
      const double at = std::abs(tau);
      if (dt == 0.0 || at == 0.0) return 0.0;
      return tri * std::pow(dt, a0_) * std::pow(at / mu, sb_);
    };
    std::vector<double> breaks{centre};
    std::vector<double> singular;
    if (lo < c && c < hi) breaks.push_back(c);
    if (lo <= c && c <= hi) singular.push_back(c);
    if (lo < 0.0 && 0.0 < hi) breaks.push_back(0.0);
    if (lo <= 0.0 && 0.0 <= hi) singular.push_back(0.0);
    out[idx] = integrate_pieces(f, lo, hi, breaks, singular);
  }
  return out;
}

double EnergyGrid::self(const LevyPath& path, std::size_t cells) const {
  check_path(path, cells);
  const int d = model_.dim();
  double total = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    double diag = 1.0;
    for (int i = 0; i < d; ++i)
      diag *= floored_pow(path.position(i, j + 1) - path.position(i, j), b_[i]);
    double row = w0_[0] * diag;
    for (std::size_t k = 0; k < j; ++k) {
      double prod = 1.0;
      for (int i = 0; i < d; ++i)
        prod *= floored_pow(path.position(i, j) - path.position(i, k), b_[i]);
      row += 2.0 * w0_[j - k] * prod;
    }
    total += row;
  }
  return total;
}

std::vector<double> EnergyGrid::self_prefixes(const LevyPath& path) const {
  const std::size_t cells = std::min(n_, path.n_steps());
  check_path(path, cells);
  const int d = model_.dim();
  std::vector<double> out(cells);
  double total = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    double diag = 1.0;
    for (int i = 0; i < d; ++i)
      diag *= floored_pow(path.position(i, j + 1) - path.position(i, j), b_[i]);
    double row = w0_[0] * diag;
    for (std::size_t k = 0; k < j; ++k) {
      double prod = 1.0;
      for (int i = 0; i < d; ++i)
        prod *= floored_pow(path.position(i, j) - path.position(i, k), b_[i]);
      row += 2.0 * w0_[j - k] * prod;
    }
    total += row;
    out[j] = total;
  }
  return out;
}

std::vector<double> EnergyGrid::separation_powers(const LevyPath& path) const {
  check_path(path, n_);
  const int d = model_.dim();
  std::vector<double> p(n_ * n_);
  for (std::size_t j = 0; j < n_; ++j) {
    double diag = 1.0;
    for (int i = 0; i < d; ++i)
      diag *= floored_pow(path.position(i, j + 1) - path.position(i, j), b_[i]);
    p[j * n_ + j] = diag;
    for (std::size_t k = 0; k < j; ++k) {
      double prod = 1.0;
      for (int i = 0; i < d; ++i)
        prod *= floored_pow(path.position(i, j) - path.position(i, k), b_[i]);
      p[j * n_ + k] = prod;
      p[k * n_ + j] = prod;
    }
  }
  return p;
}

double EnergyGrid::mixed_from_powers(std::span<const double> powers, long lag_steps,
                                     std::span<const double> lagged) const {
  const long n = static_cast<long>(n_);
  const long ns = n - lag_steps;
  double total = 0.0;
  for (long j = 0; j < ns; ++j) {
    double row = 0.0;
    const double* pj = powers.data() + j * n;
    for (long k = 0; k < n; ++k) row += lagged[static_cast<std::size_t>(k - j + n - 1)] * pj[k];
    total += row;
  }
  return total;
}

double EnergyGrid::near_pair(long m, double c, std::span<const double> sigma,
                             std::span<const double> shift) const {
  const int d = model_.dim();
  const double alpha = model_.alpha();
  const double mu = static_cast<double>(std::max(std::abs(m), 1L)) * h_;
  const double centre = static_cast<double>(m) * h_;
  const double lo = centre - h_, hi = centre + h_;
  auto f = [&](double tau) {
    const double tri = h_ - std::abs(tau - centre);
    if (tri <= 0.0 || tau == c) return 0.0;
    const double rho = std::pow(std::abs(tau) / mu, 1.0 / alpha);
    const double sign = (m != 0) ? 1.0 : (tau > 0.0 ? -1.0 : 1.0);
    double v = tri * std::pow(std::abs(tau - c), a0_);
    for (int i = 0; i < d; ++i) v *= floored_pow(sign * sigma[i] * rho + shift[i], b_[i]);
    return v;
  };
  std::vector<double> breaks{centre};
  std::vector<double> singular;
  if (lo <= c && c <= hi) {
    breaks.push_back(c);
    singular.push_back(c);
  }
  if (lo <= 0.0 && 0.0 <= hi) {
    breaks.push_back(0.0);
    singular.push_back(0.0);
  }
  for (int i = 0; i < d; ++i) {
    if (shift[i] == 0.0 || sigma[i] == 0.0) continue;
    const double r = shift[i] / sigma[i];
    double tau_star;
    if (m != 0) {
      if (r >= 0.0) continue;  // sigma rho + z = 0 needs rho = -z / sigma > 0
      tau_star = (m > 0 ? 1.0 : -1.0) * mu * std::pow(-r, alpha);
    } else {
      // -sgn(tau) sigma rho + z = 0  <=>  sgn(tau) rho = z / sigma
      tau_star = (r > 0.0 ? 1.0 : -1.0) * mu * std::pow(std::abs(r), alpha);
    }
    if (lo < tau_star && tau_star < hi) {
      breaks.push_back(tau_star);
      singular.push_back(tau_star);
    }
  }
  return integrate_pieces(f, lo, hi, breaks, singular);
}

double EnergyGrid::mixed(const LevyPath& path, long lag_steps, std::span<const double> lagged,
                         std::span<const double> shift) const {
  if (lag_steps < 0 || lag_steps >= static_cast<long>(n_))
    throw std::invalid_argument("lag must lie in [0, n)");
  if (lag_steps == 0 && all_zero(shift)) return self(path, n_);
  check_path(path, n_);
  const int d = model_.dim();
  const long n = static_cast<long>(n_);
  const long ns = n - lag_steps;
  const double c = static_cast<double>(lag_steps) * h_;
  const bool shifted = !all_zero(shift);
  std::vector<double> sigma(d);
  double total = 0.0;
  for (long j = 0; j < ns; ++j) {
    double row = 0.0;
    for (long k = 0; k < n; ++k) {
      const long m = k - j;
      const double w = lagged[static_cast<std::size_t>(m + n - 1)];
      if (shifted && std::abs(m) <= kNearLag) {
        for (int i = 0; i < d; ++i)
          sigma[i] = (m == 0) ? path.position(i, j + 1) - path.position(i, j)
                              : path.position(i, j) - path.position(i, k);
        row += near_pair(m, c, sigma, shift);
        continue;
      }
      double prod = 1.0;
      if (m == 0) {
        for (int i = 0; i < d; ++i)
          prod *= floored_pow(path.position(i, j + 1) - path.position(i, j), b_[i]);
      } else {
        for (int i = 0; i < d; ++i)
          prod *= floored_pow(path.position(i, j) - path.position(i, k) + shift[i], b_[i]);
      }
      row += w * prod;
    }
    total += row;
  }
  return total;
}

double EnergyGrid::cross(const LevyPath& path1, const LevyPath& path2,
                         std::span<const double> shift) const {
  check_path(path1, n_);
  check_path(path2, n_);
  const int d = model_.dim();
  const std::size_t n = n_;
  // Midpoint node averages.
  std::vector<double> m1(static_cast<std::size_t>(d) * n), m2(static_cast<std::size_t>(d) * n);
  for (int i = 0; i < d; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      m1[i * n + k] = 0.5 * (path1.position(i, k) + path1.position(i, k + 1));
      m2[i * n + k] = 0.5 * (path2.position(i, k) + path2.position(i, k + 1));
    }
  auto term = [&](std::size_t j, std::size_t k) {
    double prod = 1.0;
    for (int i = 0; i < d; ++i) prod *= floored_pow(m1[i * n + j] - m2[i * n + k] + shift[i], b_[i]);
    return prod;
  };
  // Pairs (j, k) and (k, j) are added together so that swapping the paths
  // and negating the shift reproduces the same floating-point sum.
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double row = tw_[0] * term(j, j);
    for (std::size_t k = j + 1; k < n; ++k) row += tw_[k - j] * (term(j, k) + term(k, j));
    total += row;
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

EnergyGrid grid_for(const LevyPath& path, const Model& model) {
  const std::size_t n = path.n_steps();
  if (n < 1) throw DegeneratePathError("path has no steps");
  if (!path.uniform()) throw DegeneratePathError("energy rule needs a uniform time grid");
  return EnergyGrid(model, n, path.horizon() / static_cast<double>(n));
}

bool same_path(const LevyPath& a, const LevyPath& b) {
  if (&a == &b) return true;
  return std::equal(a.times().begin(), a.times().end(), b.times().begin(), b.times().end()) &&
         std::equal(a.raw_positions().begin(), a.raw_positions().end(),
                    b.raw_positions().begin(), b.raw_positions().end());
}

}  // namespace

EnergyValue self_energy(const LevyPath& path, const Model& model) {
  const EnergyGrid grid = grid_for(path, model);
  return EnergyValue{grid.self(path, grid.n()), grid.n(), kDiagonalRule};
}

std::pair<EnergyValue, EnergyValue> path_scaling_check(const LevyPath& path, const Model& model,
                                                       double lambda) {
  const LevyPath scaled = path.rescaled(lambda, model.alpha());
  return {self_energy(path, model), self_energy(scaled, model)};
}

EnergyValue cross_energy(const LevyPath& path1, const LevyPath& path2,
                         std::span<const double> shift, const Model& model) {
  if (static_cast<int>(shift.size()) != model.dim())
    throw std::invalid_argument("shift must have dim entries");
  if (path1.n_steps() != path2.n_steps() ||
      !std::equal(path1.times().begin(), path1.times().end(), path2.times().begin()))
    throw std::invalid_argument("cross_energy needs paths on the same grid");
  const EnergyGrid grid = grid_for(path1, model);
  if (same_path(path1, path2)) {
    const auto lagged = grid.lagged_weights(0);
    return EnergyValue{grid.mixed(path1, 0, lagged, shift), grid.n(), kDiagonalRule};
  }
  return EnergyValue{grid.cross(path1, path2, shift), grid.n(), kDiagonalRule};
}

MCEstimate holder_C(double s, double t, std::span<const double> x, std::span<const double> y,
                    const Model& model, std::size_t n_paths, const McOptions& opt,
                    std::size_t n_steps) {
  if (!(0.0 <= s && s <= t) || !(t > 0.0)) throw std::invalid_argument("need 0 <= s <= t, t > 0");
  const int d = model.dim();
  if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d)
    throw std::invalid_argument("x and y must have dim entries");
  const double h = t / static_cast<double>(n_steps);
  const long lag = std::lround((t - s) / h);
  if (std::abs(static_cast<double>(lag) * h - (t - s)) > 1e-9 * t)
    throw std::invalid_argument("t - s must be a whole number of grid cells");
  if (lag >= static_cast<long>(n_steps)) throw std::invalid_argument("s must be positive on the grid");
  std::vector<double> shift(d);
  for (int i = 0; i < d; ++i) shift[i] = x[i] - y[i];
  const Model m_t = model.with_horizon(t);
  const EnergyGrid grid(m_t, n_steps, h);
  const auto lagged = grid.lagged_weights(lag);
  auto result = run_ensemble(n_paths, 1, opt.seed, 0, opt.workers,
                             [&](RandomStream& rng, std::size_t, std::span<double> out) {
                               const LevyPath path = sample_path(m_t, n_steps, rng);
                               const double t2 = grid.self(path, n_steps);
                               const double t1 = lag == 0 ? t2 : grid.self(path, n_steps - lag);
                               const double t3 = grid.mixed(path, lag, lagged, shift);
                               out[0] = t1 + t2 - 2.0 * t3;
                               return true;
                             });
  return make_estimate(result.stats[0], opt, result.rejected);
}

std::vector<MCEstimate> holder_C_spatial(const Model& model, double t, int axis,
                                         std::span<const double> offsets, std::size_t n_paths,
                                         const McOptions& opt, std::size_t n_steps) {
  const int d = model.dim();
  if (axis < 0 || axis >= d) throw std::invalid_argument("axis out of range");
  const Model m_t = model.with_horizon(t);
  const EnergyGrid grid(m_t, n_steps, t / static_cast<double>(n_steps));
  const auto lagged = grid.lagged_weights(0);
  const std::size_t w = offsets.size();
  auto result = run_ensemble(n_paths, w, opt.seed, 0, opt.workers,
                             [&](RandomStream& rng, std::size_t, std::span<double> out) {
                               const LevyPath path = sample_path(m_t, n_steps, rng);
                               const double self = grid.self(path, n_steps);
                               std::vector<double> shift(d, 0.0);
                               for (std::size_t q = 0; q < w; ++q) {
                                 shift[axis] = -offsets[q];
                                 const double mix = grid.mixed(path, 0, lagged, shift);
                                 out[q] = 2.0 * self - 2.0 * mix;
                               }
                               return true;
                             });
  std::vector<MCEstimate> est;
  for (const auto& s : result.stats) est.push_back(make_estimate(s, opt, result.rejected));
  return est;
}

std::vector<MCEstimate> holder_C_temporal(const Model& model, double t,
                                          std::span<const long> lag_steps, std::size_t n_paths,
                                          const McOptions& opt, std::size_t n_steps) {
  const Model m_t = model.with_horizon(t);
  const EnergyGrid grid(m_t, n_steps, t / static_cast<double>(n_steps));
  std::vector<std::vector<double>> lagged;
  for (long lag : lag_steps) {
    if (lag < 0 || lag >= static_cast<long>(n_steps)) throw std::invalid_argument("lag out of range");
    lagged.push_back(grid.lagged_weights(lag));
  }
  const std::size_t w = lag_steps.size();
  auto result = run_ensemble(n_paths, w, opt.seed, 0, opt.workers,
                             [&](RandomStream& rng, std::size_t, std::span<double> out) {
                               const LevyPath path = sample_path(m_t, n_steps, rng);
                               const auto prefixes = grid.self_prefixes(path);
                               const auto powers = grid.separation_powers(path);
                               const double t2 = prefixes.back();
                               for (std::size_t q = 0; q < w; ++q) {
                                 const long lag = lag_steps[q];
                                 if (lag == 0) {
                                   out[q] = 0.0;
                                   continue;
                                 }
                                 const double t1 = prefixes[n_steps - lag - 1];
                                 const double t3 = grid.mixed_from_powers(powers, lag, lagged[q]);
                                 out[q] = t1 + t2 - 2.0 * t3;
                               }
                               return true;
                             });
  std::vector<MCEstimate> est;
  for (const auto& s : result.stats) est.push_back(make_estimate(s, opt, result.rejected));
  return est;
}

}  // namespace fracheat
