#include "fracheat/stable.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracheat/quadrature.hpp"

namespace fracheat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourierCut = 35.0;  // truncate where xi^alpha > 35
constexpr double kTableStep = 0.01;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::domain_error("alpha must lie in (0, 2]");
}

double std_density_fourier(double alpha, double x) {
  x = std::abs(x);
  const double upper = std::pow(kFourierCut, 1.0 / alpha);
  auto f = [alpha, x](double xi) { return std::exp(-std::pow(xi, alpha)) * std::cos(x * xi); };
  return integrate_oscillatory(f, x, upper) / kPi;
}

// Coefficients c_k = (-1)^{k+1} Gamma(alpha k + 1) / k! sin(k pi alpha / 2) / pi
// of the large-|x| expansion q_1(x) = sum_k c_k |x|^{-alpha k - 1}. Sums
// c_k x^{-alpha k - offset} / (alpha k + shift)^{divide} until the terms are
// negligible. For alpha > 1 the expansion is asymptotic, so summation stops
// at the smallest term; `ok` reports whether that term was negligible.
double stable_series(double alpha, double x, double offset, double shift, bool divide, bool& ok) {
  x = std::abs(x);
  const double log_x = std::log(x);
  double sum = 0.0;
  double prev = INFINITY;
  ok = false;
  for (int k = 1; k <= 400; ++k) {
    const double s = std::sin(k * kPi * alpha / 2.0);
    const double log_mag =
        std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0) - (alpha * k + offset) * log_x;
    const double mag = std::exp(log_mag);
    if (mag > prev && alpha > 1.0) break;  // asymptotic series started to diverge
    prev = mag;
    double term = ((k % 2 == 1) ? 1.0 : -1.0) * s * mag / kPi;
    if (divide) term /= (alpha * k + shift);
    sum += term;
    if (mag < 1e-17 * std::max(std::abs(sum), 1e-300)) {
      ok = true;
      break;
    }
  }
  return sum;
}

double series_threshold(double alpha) { return alpha < 1.0 ? 2.0 : 20.0; }

// Exact standard density (t = 1).
double std_density(double alpha, double x) {
  if (alpha == 2.0) return std::exp(-0.25 * x * x) / std::sqrt(4.0 * kPi);
  if (alpha == 1.0) return 1.0 / (kPi * (1.0 + x * x));
  if (std::abs(x) >= series_threshold(alpha)) {
    bool ok = false;
    const double v = stable_series(alpha, x, 1.0, 0.0, false, ok);
    if (ok) return v;
  }
  return std_density_fourier(alpha, x);
}

// P(X_1 > x) for x beyond the table, x > 0.
double std_upper_tail(double alpha, double x) {
  if (alpha == 2.0) return 0.5 * std::erfc(0.5 * x);
  if (alpha == 1.0) return std::atan(1.0 / x) / kPi;
  bool ok = false;
  const double v = stable_series(alpha, x, 0.0, 0.0, true, ok);
  if (!ok) throw QuadratureError("stable tail series did not converge");
  return v;
}

double std_table_radius(double alpha) { return alpha < 1.0 ? 10.0 : 20.0; }

struct StandardTable {
  double alpha;
  double radius;
  std::vector<double> values;  // x_k = -radius + k * step
};

const StandardTable& standard_table(double alpha) {
  static std::mutex mutex;
  static std::map<double, std::unique_ptr<StandardTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[alpha];
  if (!slot) {
    auto t = std::make_unique<StandardTable>();
    t->alpha = alpha;
    t->radius = std_table_radius(alpha);
    const std::size_t half = static_cast<std::size_t>(std::llround(t->radius / kTableStep));
    t->values.assign(2 * half + 1, 0.0);
    for (std::size_t k = 0; k <= half; ++k) {
      const double v = std_density(alpha, k * kTableStep);
      t->values[half + k] = v;
      t->values[half - k] = v;
    }
    slot = std::move(t);
  }
  return *slot;
}

}  // namespace

double sample_stable(double alpha, double sigma, RandomStream& rng) {
  check_alpha(alpha);
  if (!(sigma >= 0.0)) throw std::domain_error("sigma must be nonnegative");
  if (sigma == 0.0) return 0.0;
  if (alpha == 2.0) return sigma * std::numbers::sqrt2 * rng.normal();
  const double v = kPi * (rng.uniform_open() - 0.5);
  if (alpha == 1.0) return sigma * std::tan(v);
  const double w = rng.exponential();
  const double x = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
  return sigma * x;
}

// ---------------------------------------------------------------------------
// LevyPath

LevyPath::LevyPath(std::vector<double> times, int dim, std::vector<double> positions)
    : times_(std::move(times)), dim_(dim), positions_(std::move(positions)) {
  if (times_.empty() || times_[0] != 0.0) throw std::invalid_argument("path grid must start at 0");
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1])) throw std::invalid_argument("path grid must increase");
  if (dim_ < 1 || positions_.size() != static_cast<std::size_t>(dim_) * times_.size())
    throw std::invalid_argument("path positions must be dim x n_nodes");
}

bool LevyPath::uniform() const noexcept {
  const std::size_t n = n_steps();
  if (n == 0) return false;
  const double h = times_.back() / static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k)
    if (std::abs(times_[k] - times_[k - 1] - h) > 1e-12 * h) return false;
  return true;
}

LevyPath LevyPath::prefix(std::size_t n) const {
  if (n < 1 || n > n_steps()) throw std::out_of_range("prefix length out of range");
  std::vector<double> t(times_.begin(), times_.begin() + n + 1);
  std::vector<double> pos;
  pos.reserve(static_cast<std::size_t>(dim_) * (n + 1));
  for (int i = 0; i < dim_; ++i) {
    auto c = coordinate(i);
    pos.insert(pos.end(), c.begin(), c.begin() + n + 1);
  }
  return LevyPath(std::move(t), dim_, std::move(pos));
}

LevyPath LevyPath::subsampled(std::size_t stride) const {
  if (stride < 1 || n_steps() % stride != 0) throw std::invalid_argument("stride must divide n_steps");
  const std::size_t m = n_steps() / stride + 1;
  std::vector<double> t(m);
  std::vector<double> pos(static_cast<std::size_t>(dim_) * m);
  for (std::size_t k = 0; k < m; ++k) {
    t[k] = times_[k * stride];
    for (int i = 0; i < dim_; ++i) pos[i * m + k] = position(i, k * stride);
  }
  return LevyPath(std::move(t), dim_, std::move(pos));
}

LevyPath LevyPath::rescaled(double lambda, double alpha) const {
  if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
  const double space = std::pow(lambda, 1.0 / alpha);
  std::vector<double> t(times_.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = lambda * times_[k];
  std::vector<double> pos(positions_.size());
  const std::size_t m = times_.size();
  for (int i = 0; i < dim_; ++i) {
    const double x0 = positions_[i * m];
    for (std::size_t k = 0; k < m; ++k)
      pos[i * m + k] = x0 + space * (positions_[i * m + k] - x0);
  }
  return LevyPath(std::move(t), dim_, std::move(pos));
}

void LevyPath::extend(std::size_t steps, double alpha, RandomStream& rng) {
  const std::size_t n = n_steps();
  if (n == 0) throw std::logic_error("cannot extend an empty path");
  const double h = times_.back() / static_cast<double>(n);
  const double sigma = std::pow(h, 1.0 / alpha);
  const std::size_t m_old = times_.size();
  const std::size_t m_new = m_old + steps;
  std::vector<double> pos(static_cast<std::size_t>(dim_) * m_new);
  for (int i = 0; i < dim_; ++i)
    std::copy_n(positions_.begin() + i * m_old, m_old, pos.begin() + i * m_new);
  for (std::size_t k = m_old; k < m_new; ++k) {
    times_.push_back(h * static_cast<double>(k));
    for (int i = 0; i < dim_; ++i)
      pos[i * m_new + k] = pos[i * m_new + k - 1] + sample_stable(alpha, sigma, rng);
  }
  positions_ = std::move(pos);
}

LevyPath sample_path(const Model& model, std::span<const double> times, RandomStream& rng) {
  const std::size_t m = times.size();
  if (m < 2) throw std::invalid_argument("path needs at least one step");
  const int d = model.dim();
  std::vector<double> pos(static_cast<std::size_t>(d) * m);
  for (int i = 0; i < d; ++i) pos[i * m] = model.base_point()[i];
  for (std::size_t k = 1; k < m; ++k) {
    const double dt = times[k] - times[k - 1];
    if (!(dt > 0.0)) throw std::invalid_argument("path grid must increase");
    const double sigma = std::pow(dt, 1.0 / model.alpha());
    for (int i = 0; i < d; ++i)
      pos[i * m + k] = pos[i * m + k - 1] + sample_stable(model.alpha(), sigma, rng);
  }
  return LevyPath(std::vector<double>(times.begin(), times.end()), d, std::move(pos));
}

LevyPath sample_path(const Model& model, std::size_t n_steps, RandomStream& rng) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  std::vector<double> times(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k)
    times[k] = model.horizon() * static_cast<double>(k) / static_cast<double>(n_steps);
  return sample_path(model, times, rng);
}

// ---------------------------------------------------------------------------
// Densities

double transition_density_1d(double alpha, double t, double x) {
  check_alpha(alpha);
  if (!(t > 0.0)) throw std::domain_error("t must be positive");
  if (alpha == 2.0) return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
  if (alpha == 1.0) return t / (kPi * (t * t + x * x));
  const double s = std::pow(t, 1.0 / alpha);
  return std_density(alpha, x / s) / s;
}

double transition_density(double alpha, double t, std::span<const double> v) {
  double p = 1.0;
  for (double vi : v) p *= transition_density_1d(alpha, t, vi);
  return p;
}

DensityTable::DensityTable(double alpha, double t) : alpha_(alpha), t_(t) {
  check_alpha(alpha);
  if (!(t > 0.0)) throw std::domain_error("t must be positive");
  const StandardTable& st = standard_table(alpha);
  scale_ = std::pow(t, 1.0 / alpha);
  cutoff_ = st.radius * scale_;
  step_ = kTableStep * scale_;
  const std::size_t n = st.values.size();
  abscissae_.resize(n);
  values_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    abscissae_[k] = (-st.radius + k * kTableStep) * scale_;
    values_[k] = st.values[k] / scale_;
  }
  // Cell integrals of the interpolant by 4-point Gauss-Legendre.
  const auto& gl = gauss_legendre(4);
  cumulative_.assign(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double cell = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double x = abscissae_[k] + 0.5 * step_ * (1.0 + gl.nodes[j]);
      cell += gl.weights[j] * lagrange4(values_, abscissae_[0], step_, x);
    }
    cumulative_[k + 1] = cumulative_[k] + 0.5 * step_ * cell;
  }
}

double DensityTable::density(double x) const {
  if (std::abs(x) <= cutoff_) return lagrange4(values_, abscissae_[0], step_, x);
  return std_density(alpha_, x / scale_) / scale_;
}

double DensityTable::tail_mass() const {
  return std_upper_tail(alpha_, cutoff_ / scale_);
}

double DensityTable::cdf(double x) const {
  if (x < -cutoff_) return std_upper_tail(alpha_, -x / scale_);
  if (x > cutoff_) return 1.0 - std_upper_tail(alpha_, x / scale_);
  const double s = (x - abscissae_[0]) / step_;
  std::size_t k = static_cast<std::size_t>(std::floor(s));
  k = std::min(k, abscissae_.size() - 2);
  const double a = abscissae_[k];
  const auto& gl = gauss_legendre(4);
  double part = 0.0;
  const double w = x - a;
  for (int j = 0; j < 4; ++j) {
    const double y = a + 0.5 * w * (1.0 + gl.nodes[j]);
    part += gl.weights[j] * lagrange4(values_, abscissae_[0], step_, y);
  }
  return tail_mass() + cumulative_[k] + 0.5 * w * part;
}

double DensityTable::normalization() const {
  double sum = 0.5 * (values_.front() + values_.back());
  for (std::size_t k = 1; k + 1 < values_.size(); ++k) sum += values_[k];
  return sum * step_ + 2.0 * tail_mass();
}

const DensityTable& density_table(double alpha, double t) {
  static std::mutex mutex;
  static std::map<std::pair<double, double>, std::unique_ptr<DensityTable>> cache;
  std::unique_lock lock(mutex);
  auto it = cache.find({alpha, t});
  if (it != cache.end()) return *it->second;
  lock.unlock();
  auto table = std::make_unique<DensityTable>(alpha, t);
  lock.lock();
  auto& slot = cache[{alpha, t}];
  if (!slot) slot = std::move(table);
  return *slot;
}

double negative_moment(double alpha, double beta) {
  check_alpha(alpha);
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("negative_moment: beta must lie in (0, 1)");
  const StandardTable& st = standard_table(alpha);
  const std::size_t half = (st.values.size() - 1) / 2;
  const double h = kTableStep;
  std::span<const double> v(st.values);
  // Innermost cell: quadratic through (0, h, 2h) integrated against x^-beta.
  const double q0 = v[half], q1 = v[half + 1], q2 = v[half + 2];
  const double c0 = q0, c1 = -1.5 * q0 + 2.0 * q1 - 0.5 * q2, c2 = 0.5 * q0 - q1 + 0.5 * q2;
  const double hb = std::pow(h, 1.0 - beta);
  double sum = hb * (c0 / (1.0 - beta) + c1 / (2.0 - beta) + c2 / (3.0 - beta));
  const auto& gl = gauss_legendre(6);
  const double x0 = -st.radius;
  for (std::size_t k = 1; k < half; ++k) {
    const double a = k * h;
    double cell = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double x = a + 0.5 * h * (1.0 + gl.nodes[j]);
      cell += gl.weights[j] * std::pow(x, -beta) * lagrange4(v, x0, h, x);
    }
    sum += 0.5 * h * cell;
  }
  // Tail beyond the table radius.
  double tail = 0.0;
  if (alpha == 1.0) {
    // int_R^inf x^-beta / (pi (1 + x^2)) dx by series in 1/x^2.
    const double r = st.radius;
    double sign = 1.0;
    for (int k = 1; k < 60; ++k) {
      tail += sign * std::pow(r, -2.0 * k - beta + 1.0) / (2.0 * k + beta - 1.0);
      sign = -sign;
    }
    tail /= kPi;
  } else if (alpha != 2.0) {
    bool ok = false;
    // int_R^inf x^{-alpha k - 1 - beta} dx = R^{-alpha k - beta} / (alpha k + beta)
    tail = stable_series(alpha, st.radius, beta, beta, true, ok);
    if (!ok) throw QuadratureError("negative_moment tail series did not converge");
  }
  return 2.0 * (sum + tail);
}

double fourier_power_constant(double beta) {
  return 2.0 / kPi * std::tgamma(1.0 - beta) * std::sin(kPi * beta / 2.0);
}

double shifted_negative_moment_fourier(double alpha, double beta, double z) {
  check_alpha(alpha);
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0, 1)");
  z = std::abs(z);
  const double upper = std::pow(kFourierCut, 1.0 / alpha);
  auto f = [alpha, beta, z](double xi) {
    return std::pow(xi, beta - 1.0) * std::exp(-std::pow(xi, alpha)) * std::cos(z * xi);
  };
  return fourier_power_constant(beta) * integrate_oscillatory(f, z, upper, 1e-8, beta - 1.0);
}

double shifted_negative_moment_density(double alpha, double beta, double z) {
  check_alpha(alpha);
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0, 1)");
  const DensityTable& table = density_table(alpha, 1.0);
  // int |u|^-beta q_1(u - z) du, singular at u = 0, peaked at u = z.
  auto f = [&](double u) {
    return u == 0.0 ? 0.0 : std::pow(std::abs(u), -beta) * table.density(u - z);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double r = table.tail_cutoff();
  // Breakpoints: the singularity at 0 and a window around the peak.
  std::vector<double> pts{0.0, z - r, z + r};
  for (double c = z - r + 1.0; c < z + r; c += 1.0) pts.push_back(c);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    if (a < 0.0 && b > 0.0) {
      sum += ts.integrate(f, a, 0.0) + ts.integrate(f, 0.0, b);
    } else {
      sum += ts.integrate(f, a, b);
    }
  }
  const double lo = pts.front(), hi = pts.back();
  auto g_left = [&](double s) { return f(-s); };
  sum += es.integrate(f, hi, std::numeric_limits<double>::infinity());
  sum += es.integrate(g_left, -lo, std::numeric_limits<double>::infinity());
  return sum;
}

}  // namespace fracheat
