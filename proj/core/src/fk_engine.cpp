#include "fracheat/fk_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "fracheat/energy.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/stable.hpp"

namespace fracheat {

namespace {

// Stream domains; moments share one so bridge replicates line up.
constexpr std::uint64_t kMomentDomain = 11;
constexpr std::uint64_t kLadderDomain = 12;
constexpr std::uint64_t kSmoothedDomain = 13;
constexpr std::uint64_t kChaosDomain = 14;
constexpr std::uint64_t kFirstChaosDomain = 15;

double stable_cdf(double alpha, double s, double z) {
  if (s <= 0.0) return z >= 0.0 ? 1.0 : 0.0;
  if (alpha == 2.0) return 0.5 * std::erfc(-z / (2.0 * std::sqrt(s)));
  if (alpha == 1.0) return 0.5 + std::atan(z / s) / std::numbers::pi;
  return density_table(alpha, 1.0).cdf(z / std::pow(s, 1.0 / alpha));
}

// int q_s(y - z) exp(-(z - c)^2 / (2 w^2)) dz
double bump_convolution(double alpha, double s, double y, double c, double w) {
  const double dy = y - c;
  if (s <= 0.0) return std::exp(-dy * dy / (2.0 * w * w));
  if (alpha == 2.0) {
    const double v = w * w + 2.0 * s;
    return w / std::sqrt(v) * std::exp(-dy * dy / (2.0 * v));
  }
  // (2 w / sqrt(2 pi)) int_0^inf exp(-w^2 th^2 / 2 - s th^alpha) cos(th dy) d th
  auto f = [&](double th) {
    return std::exp(-0.5 * w * w * th * th - s * std::pow(th, alpha)) * std::cos(th * dy);
  };
  const double upper = 9.0 / w;
  return 2.0 * w / std::sqrt(2.0 * std::numbers::pi) *
         integrate_oscillatory(f, std::abs(dy), upper, 1e-9);
}

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

void check_point(std::span<const double> x, const Model& model) {
  if (x.size() != static_cast<std::size_t>(model.dim()))
    throw std::invalid_argument("point dimension does not match the model");
}

struct MomentSetup {
  Model model;
  EnergyGrid grid;
  MomentSetup(const Model& m, double t, std::span<const double> x, std::size_t n_steps)
      : model(m.with_horizon(t).with_base_point({x.begin(), x.end()})),
        grid(model, n_steps, t / static_cast<double>(n_steps)) {}
};

// One replicate of the moment weights.
BridgeReplicate moment_replicate(int p, const InitialData& f, const MomentSetup& setup,
                                 std::size_t n_steps, RandomStream& rng) {
  const int d = setup.model.dim();
  std::vector<LevyPath> paths;
  paths.reserve(static_cast<std::size_t>(p));
  double fprod = 1.0;
  std::vector<double> end(static_cast<std::size_t>(d));
  for (int j = 0; j < p; ++j) {
    paths.push_back(sample_path(setup.model, n_steps, rng));
    for (int i = 0; i < d; ++i) end[static_cast<std::size_t>(i)] = paths.back().position(i, n_steps);
    fprod *= f(end);
  }
  BridgeReplicate r;
  if (fprod == 0.0) return r;
  const double ah = setup.model.alpha_H();
  const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  double self_sum = 0.0, cross_sum = 0.0;
  for (int j = 0; j < p; ++j) {
    self_sum += setup.grid.self(paths[static_cast<std::size_t>(j)], n_steps);
    for (int k = j + 1; k < p; ++k)
      cross_sum += setup.grid.cross(paths[static_cast<std::size_t>(j)], paths[static_cast<std::size_t>(k)], zero);
  }
  const double log_sk = ah * cross_sum;
  const double log_st = log_sk + 0.5 * ah * self_sum;
  r.self_sum = self_sum;
  // overflowing weights are marked infinite and rejected by the estimators
  r.skorohod = log_sk <= kMaxExponent ? fprod * std::exp(log_sk) : HUGE_VAL;
  // product form, so the bridge stratonovich = skorohod * exp(alpha_H self / 2) is exact
  r.stratonovich = log_st <= kMaxExponent ? r.skorohod * std::exp(0.5 * ah * self_sum) : HUGE_VAL;
  r.rejected = !std::isfinite(r.skorohod) || !std::isfinite(r.stratonovich);
  return r;
}

MCEstimate moment_estimate(int p, double t, std::span<const double> x, const InitialData& f,
                           const Model& model, std::size_t n_paths, const McOptions& opt,
                           std::size_t n_steps, bool stratonovich) {
  if (p < 1) throw std::invalid_argument("moment order must be >= 1");
  if (!(t > 0.0) || n_steps == 0) throw std::invalid_argument("moment needs t > 0 and n_steps > 0");
  check_point(x, model);
  const MomentSetup setup(model, t, x, n_steps);
  auto res = run_ensemble(n_paths, 1, opt.seed, kMomentDomain, opt.workers,
                          [&](RandomStream& rng, std::size_t, std::span<double> out) {
                            const auto r = moment_replicate(p, f, setup, n_steps, rng);
                            const double v = stratonovich ? r.stratonovich : r.skorohod;
                            if (!std::isfinite(v)) return false;
                            out[0] = v;
                            return true;
                          });
  return make_estimate(res.stats[0], opt, res.rejected);
}

}  // namespace

InitialData InitialData::constant(double value) {
  if (!std::isfinite(value)) throw ConfigError("constant initial data must be finite");
  return InitialData(Kind::constant, value);
}

InitialData InitialData::gaussian_bump(double amplitude, std::vector<double> center, double width) {
  if (!std::isfinite(amplitude) || !(width > 0.0) || center.empty())
    throw ConfigError("gaussian_bump needs finite amplitude, width > 0 and a centre");
  InitialData f(Kind::gaussian_bump, amplitude);
  f.width_ = width;
  f.lower_ = std::move(center);
  return f;
}

InitialData InitialData::indicator_box(std::vector<double> lower, std::vector<double> upper,
                                       double value) {
  if (lower.empty() || lower.size() != upper.size() || !std::isfinite(value))
    throw ConfigError("indicator_box needs matching lower and upper corners");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) throw ConfigError("indicator_box needs lower < upper");
  InitialData f(Kind::indicator_box, value);
  f.lower_ = std::move(lower);
  f.upper_ = std::move(upper);
  return f;
}

void InitialData::check_dim(std::size_t d) const {
  if (kind_ != Kind::constant && lower_.size() != d)
    throw std::invalid_argument("initial data dimension does not match the point");
}

double InitialData::operator()(std::span<const double> y) const {
  check_dim(y.size());
  switch (kind_) {
    case Kind::constant:
      return value_;
    case Kind::gaussian_bump: {
      double r2 = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) r2 += (y[i] - lower_[i]) * (y[i] - lower_[i]);
      return value_ * std::exp(-r2 / (2.0 * width_ * width_));
    }
    case Kind::indicator_box:
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < lower_[i] || y[i] > upper_[i]) return 0.0;
      return value_;
  }
  return 0.0;
}

double InitialData::smoothed(double alpha, double s, std::span<const double> y) const {
  check_dim(y.size());
  if (s <= 0.0 || kind_ == Kind::constant) return (*this)(y);
  double v = value_;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (kind_ == Kind::gaussian_bump)
      v *= bump_convolution(alpha, s, y[i], lower_[i], width_);
    else
      v *= stable_cdf(alpha, s, upper_[i] - y[i]) - stable_cdf(alpha, s, lower_[i] - y[i]);
  }
  return v;
}

MCEstimate moment_stratonovich(int p, double t, std::span<const double> x, const InitialData& f,
                               const Model& model, std::size_t n_paths, const McOptions& opt,
                               std::size_t n_steps) {
  return moment_estimate(p, t, x, f, model, n_paths, opt, n_steps, true);
}

MCEstimate moment_skorohod(int p, double t, std::span<const double> x, const InitialData& f,
                           const Model& model, std::size_t n_paths, const McOptions& opt,
                           std::size_t n_steps) {
  return moment_estimate(p, t, x, f, model, n_paths, opt, n_steps, false);
}

std::vector<BridgeReplicate> moment_bridge(int p, double t, std::span<const double> x,
                                           const InitialData& f, const Model& model,
                                           std::size_t n_paths, const McOptions& opt,
                                           std::size_t n_steps) {
  if (p < 1) throw std::invalid_argument("moment order must be >= 1");
  check_point(x, model);
  const MomentSetup setup(model, t, x, n_steps);
  std::vector<BridgeReplicate> out(n_paths);
  const std::size_t chunks = (n_paths + kChunkSize - 1) / kChunkSize;
  parallel_for(chunks, opt.workers, [&](std::size_t c) {
    const std::size_t end = std::min(n_paths, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      RandomStream rng = derive_stream(opt.seed, i, kMomentDomain);
      out[i] = moment_replicate(p, f, setup, n_steps, rng);
    }
  });
  return out;
}

MomentLadder moment_t_ladder(const Model& model, std::span<const double> times, double step,
                             std::size_t n_paths, const McOptions& opt) {
  if (times.empty() || !(step > 0.0)) throw std::invalid_argument("t-ladder needs times and a step");
  std::vector<std::size_t> cells;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double c = times[k] / step;
    const double rc = std::round(c);
    if (!(times[k] > 0.0) || std::abs(c - rc) > 1e-9 * std::max(1.0, c))
      throw std::invalid_argument("t-ladder horizons must be positive multiples of the step");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw std::invalid_argument("t-ladder horizons must increase");
    cells.push_back(static_cast<std::size_t>(rc));
  }
  const std::size_t n = cells.back();
  const Model m = model.with_horizon(static_cast<double>(n) * step);
  const EnergyGrid grid(m, n, step);
  const double ah = m.alpha_H();
  std::atomic<std::size_t> violations{0};
  auto res = run_ensemble(n_paths, cells.size(), opt.seed, kLadderDomain, opt.workers,
                          [&](RandomStream& rng, std::size_t, std::span<double> out) {
                            const auto path = sample_path(m, n, rng);
                            const auto pre = grid.self_prefixes(path);
                            for (std::size_t k = 0; k < cells.size(); ++k) {
                              const double e = 0.5 * ah * pre[cells[k] - 1];
                              if (!(e <= kMaxExponent)) return false;
                              out[k] = std::exp(e);
                            }
                            for (std::size_t k = 1; k < cells.size(); ++k)
                              if (out[k] < out[k - 1]) {
                                violations.fetch_add(1);
                                break;
                              }
                            return true;
                          });
  MomentLadder ladder;
  ladder.times.assign(times.begin(), times.end());
  for (const auto& s : res.stats) ladder.estimates.push_back(make_estimate(s, opt, res.rejected));
  ladder.ordering_violations = violations.load();
  return ladder;
}

SmoothedSample sample_solution_smoothed(const NoiseSheet& sheet, const Mollifier& m, double t,
                                        std::span<const double> x, const InitialData& f,
                                        const Model& model, std::size_t n_inner, RandomStream& rng,
                                        std::size_t n_steps) {
  check_point(x, model);
  const auto& taxis = sheet.grid().axes[0];
  if (taxis.front() > 0.0 || taxis.back() < t * (1.0 - 1e-12))
    throw CoverageError("sheet does not cover [0, t]");
  const Model pm = model.with_horizon(t).with_base_point({x.begin(), x.end()});
  const int d = model.dim();
  SmoothedSample out;
  RunningStats stats;
  std::vector<double> end(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < n_inner; ++k) {
    const auto path = sample_path(pm, n_steps, rng);
    for (int i = 0; i < d; ++i) end[static_cast<std::size_t>(i)] = path.position(i, n_steps);
    const double fv = f(end);
    if (fv == 0.0) {
      stats.push(0.0);
      continue;
    }
    double v;
    try {
      v = riemann_pairing(sheet, anchored_A(sheet.grid(), path, m, t, x));
    } catch (const CoverageError&) {
      ++out.dropped;
      continue;
    }
    if (!(v <= kMaxExponent)) {
      ++out.dropped;
      continue;
    }
    stats.push(fv * std::exp(v));
  }
  out.value = stats.mean;
  out.used = stats.count;
  return out;
}

MCEstimate smoothed_solution_mean(const Mollifier& m, double t, std::span<const double> x,
                                  const InitialData& f, const Model& model, std::size_t n_sheets,
                                  std::size_t n_inner, const McOptions& opt,
                                  const SmoothedGrid& grid) {
  check_point(x, model);
  const Model pm = model.with_horizon(t).with_base_point({x.begin(), x.end()});
  const SheetSampler sampler(make_sheet_grid(pm, t, grid.n_time, grid.n_space),
                             {pm.hurst().begin(), pm.hurst().end()});
  std::atomic<std::size_t> dropped{0};
  auto res = run_ensemble(n_sheets, 1, opt.seed, kSmoothedDomain, opt.workers,
                          [&](RandomStream& rng, std::size_t i, std::span<double> out) {
                            const auto sheet = sampler.sample(rng, i);
                            const auto s = sample_solution_smoothed(sheet, m, t, x, f, pm, n_inner,
                                                                    rng, grid.path_steps);
                            dropped.fetch_add(s.dropped);
                            if (s.used == 0) return false;
                            out[0] = s.value;
                            return true;
                          });
  return make_estimate(res.stats[0], opt, res.rejected + dropped.load());
}

namespace {

struct SortedPoints {
  std::vector<double> s;
  std::vector<std::vector<double>> y;
};

SortedPoints sort_points(int n, std::span<const double> times, std::span<const double> points,
                         double t, int d) {
  if (n < 1 || times.size() != static_cast<std::size_t>(n) ||
      points.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(d))
    throw std::invalid_argument("chaos kernel: expected n times and n points");
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  SortedPoints sp;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double s = times[order[k]];
    if (!(s > 0.0 && s < t)) throw std::invalid_argument("chaos kernel: times must lie in (0, t)");
    if (k > 0 && s == sp.s.back()) throw CoincidentTimesError("chaos kernel: coincident times");
    sp.s.push_back(s);
    sp.y.emplace_back(points.begin() + static_cast<long>(order[k]) * d,
                      points.begin() + static_cast<long>(order[k] + 1) * d);
  }
  return sp;
}

double kernel_from_sorted(const SortedPoints& sp, double t, std::span<const double> x,
                          const InitialData& f, const Model& model) {
  const double alpha = model.alpha();
  const std::size_t n = sp.s.size();
  const std::size_t d = x.size();
  std::vector<double> v(d);
  double val = f.smoothed(alpha, sp.s[0], sp.y[0]);
  if (val == 0.0) return 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) v[i] = sp.y[k][i] - sp.y[k - 1][i];
    val *= transition_density(alpha, sp.s[k] - sp.s[k - 1], v);
  }
  for (std::size_t i = 0; i < d; ++i) v[i] = x[i] - sp.y[n - 1][i];
  val *= transition_density(alpha, t - sp.s[n - 1], v);
  return val / factorial(static_cast<int>(n));
}

}  // namespace

double chaos_kernel_f_n(int n, std::span<const double> times, std::span<const double> points,
                        double t, std::span<const double> x, const InitialData& f,
                        const Model& model) {
  check_point(x, model);
  return kernel_from_sorted(sort_points(n, times, points, t, model.dim()), t, x, f, model);
}

MCEstimate chaos_kernel_h_n_mc(int n, std::span<const double> times, std::span<const double> points,
                               double t, std::span<const double> x, const InitialData& f,
                               const Model& model, double eps, std::size_t n_paths,
                               const McOptions& opt) {
  check_point(x, model);
  if (!(eps > 0.0)) throw std::invalid_argument("chaos kernel: eps must be positive");
  const int d = model.dim();
  const auto sp = sort_points(n, times, points, t, d);
  // path times t - s_n < ... < t - s_1 < t
  std::vector<double> grid{0.0};
  for (std::size_t k = sp.s.size(); k-- > 0;) grid.push_back(t - sp.s[k]);
  grid.push_back(t);
  const Model pm = model.with_horizon(t).with_base_point({x.begin(), x.end()});
  const double norm = std::pow(2.0 * std::numbers::pi * eps, -0.5 * d);
  auto res = run_ensemble(n_paths, 1, opt.seed, kChaosDomain, opt.workers,
                          [&](RandomStream& rng, std::size_t, std::span<double> out) {
                            const auto path = sample_path(pm, grid, rng);
                            const std::size_t last = grid.size() - 1;
                            std::vector<double> end(static_cast<std::size_t>(d));
                            for (int i = 0; i < d; ++i) end[static_cast<std::size_t>(i)] = path.position(i, last);
                            double v = f(end);
                            if (v == 0.0) {
                              out[0] = 0.0;
                              return true;
                            }
                            const std::size_t m = sp.s.size();
                            for (std::size_t k = 0; k < m; ++k) {
                              // node 1 + (m - 1 - k) carries time t - s_k
                              const std::size_t node = m - k;
                              double r2 = 0.0;
                              for (int i = 0; i < d; ++i) {
                                const double dv = path.position(i, node) - sp.y[k][static_cast<std::size_t>(i)];
                                r2 += dv * dv;
                              }
                              v *= norm * std::exp(-r2 / (2.0 * eps));
                            }
                            out[0] = v;
                            return true;
                          });
  return make_estimate(res.stats[0], opt, res.rejected);
}

double chaos_kernel_h_n_smoothed(int n, std::span<const double> times,
                                 std::span<const double> points, double t,
                                 std::span<const double> x, const InitialData& f,
                                 const Model& model, double eps, int gh_nodes) {
  check_point(x, model);
  const int d = model.dim();
  auto sp = sort_points(n, times, points, t, d);
  const std::size_t dims = static_cast<std::size_t>(n) * static_cast<std::size_t>(d);
  if (dims > 3) throw std::invalid_argument("chaos_kernel_h_n_smoothed supports n d <= 3");
  const auto gh = gauss_hermite(gh_nodes);
  const double scale = std::sqrt(2.0 * eps);
  const auto base = sp.y;
  std::vector<std::size_t> idx(dims, 0);
  const auto q = static_cast<std::size_t>(gh_nodes);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t c = 0; c < dims; ++c) {
      const std::size_t k = c / static_cast<std::size_t>(d), i = c % static_cast<std::size_t>(d);
      sp.y[k][i] = base[k][i] + scale * gh.nodes[idx[c]];
      w *= gh.weights[idx[c]] / std::sqrt(std::numbers::pi);
    }
    total += w * kernel_from_sorted(sp, t, x, f, model);
    std::size_t c = 0;
    while (c < dims && ++idx[c] == q) idx[c++] = 0;
    if (c == dims) break;
  }
  return factorial(n) * total;
}

double first_chaos_norm(double t, std::span<const double> x, const InitialData& f,
                        const Model& model) {
  check_point(x, model);
  const int d = model.dim();
  const double a0 = model.time_exponent();
  const auto b = model.space_exponents();
  if (f.kind() == InitialData::Kind::constant) {
    // alpha_H c^2 prod E|xi|^{b_i} int int |u - v|^a0 (u + v)^sb du dv on [0, t]^2
    const double sb = model.space_scaling();
    double moments = 1.0;
    for (int i = 0; i < d; ++i) moments *= negative_moment(model.alpha(), -b[static_cast<std::size_t>(i)]);
    auto g = [&](double u) { return std::pow(u, a0) * std::pow(2.0 - u, sb); };
    const double j = integrate_graded(g, 0.0, 1.0, -1);
    const double gamma = model.gamma();
    return model.alpha_H() * f.value() * f.value() * moments * 2.0 * j * std::pow(t, gamma) / gamma;
  }
  if (f.kind() != InitialData::Kind::gaussian_bump || model.alpha() != 2.0)
    throw std::invalid_argument("first_chaos_norm supports constant f, or gaussian_bump with alpha = 2");
  const double w2 = f.width() * f.width();
  const auto c = f.center();
  // f_1(s, .) = A prod_i M_i N(.; m_i, v) per component
  struct Piece {
    std::vector<double> mass, mean;
    double var;
  };
  auto piece = [&](double s) {
    Piece p;
    const double v1 = 2.0 * (t - s), v2 = w2 + 2.0 * s;
    p.var = v1 * v2 / (v1 + v2);
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const double dx = x[ii] - c[ii];
      const double vs = v1 + v2;
      p.mass.push_back(f.width() * std::exp(-dx * dx / (2.0 * vs)) / std::sqrt(vs));
      p.mean.push_back((x[ii] * v2 + c[ii] * v1) / vs);
    }
    return p;
  };
  auto spatial = [&](const Piece& p, const Piece& q) {
    double v = f.value() * f.value();
    const double sd = std::sqrt(p.var + q.var);
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      v *= p.mass[ii] * q.mass[ii] * gaussian_abs_moment(p.mean[ii] - q.mean[ii], sd, b[ii]);
    }
    return v;
  };
  auto outer = [&](double s) {
    const Piece ps = piece(s);
    auto inner = [&](double r) {
      if (r == s) return 0.0;
      return std::pow(std::abs(s - r), a0) * spatial(ps, piece(r));
    };
    return integrate_pieces(inner, 0.0, t, {s}, {s});
  };
  return model.alpha_H() * integrate_pieces(outer, 0.0, t, {0.5 * t}, {0.0, t});
}

MCEstimate first_chaos_mc(double t, std::span<const double> x, const InitialData& f,
                          const Model& model, std::size_t n_paths, const McOptions& opt,
                          std::size_t n_steps) {
  check_point(x, model);
  const MomentSetup setup(model, t, x, n_steps);
  const int d = model.dim();
  const std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  auto res = run_ensemble(n_paths, 1, opt.seed, kFirstChaosDomain, opt.workers,
                          [&](RandomStream& rng, std::size_t, std::span<double> out) {
                            const auto p1 = sample_path(setup.model, n_steps, rng);
                            const auto p2 = sample_path(setup.model, n_steps, rng);
                            std::vector<double> e1(static_cast<std::size_t>(d)), e2(e1);
                            for (int i = 0; i < d; ++i) {
                              e1[static_cast<std::size_t>(i)] = p1.position(i, n_steps);
                              e2[static_cast<std::size_t>(i)] = p2.position(i, n_steps);
                            }
                            const double ff = f(e1) * f(e2);
                            out[0] = ff == 0.0 ? 0.0 : ff * setup.model.alpha_H() * setup.grid.cross(p1, p2, zero);
                            return true;
                          });
  return make_estimate(res.stats[0], opt, res.rejected);
}

}  // namespace fracheat
