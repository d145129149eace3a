#include "fracheat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fracheat {

namespace {

QuadratureRule build_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1 || n > 256) throw std::invalid_argument("gauss_legendre: n out of range");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(build_gauss_legendre(n));
  return *slot;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1 || n > 200) throw std::invalid_argument("gauss_hermite: n out of range");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // Initial guesses as in the classical gauher routine.
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    r.nodes[i] = z;
    r.weights[i] = 2.0 / (pp * pp);
  }
  // Mirror into ascending order.
  QuadratureRule out;
  out.nodes.resize(n);
  out.weights.resize(n);
  for (int i = 0; i < m; ++i) {
    out.nodes[i] = -r.nodes[i];
    out.weights[i] = r.weights[i];
    out.nodes[n - 1 - i] = r.nodes[i];
    out.weights[n - 1 - i] = r.weights[i];
  }
  if (n % 2 == 1) out.nodes[n / 2] = 0.0;
  return out;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
  const auto& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

double integrate_graded(const std::function<double(double)>& f, double a, double b, int side,
                        int levels, double ratio, int n) {
  if (!(b > a)) return 0.0;
  if (side == 0) {
    const double m = 0.5 * (a + b);
    return integrate_graded(f, a, m, -1, levels, ratio, n) +
           integrate_graded(f, m, b, +1, levels, ratio, n);
  }
  const double len = b - a;
  // below this width, node rounding near a nonzero singular endpoint dominates
  const double min_width = 1e-9 * std::abs(side < 0 ? a : b);
  double sum = 0.0, prev = 0.0, last = 0.0;
  double outer = 1.0;
  for (int k = 0; k < levels; ++k) {
    if (len * outer <= min_width) {
      // panels of a power singularity shrink geometrically: add the unresolved tail
      const double rho = prev != 0.0 ? last / prev : 0.0;
      if (rho > 0.0 && rho < 1.0) sum += last * rho / (1.0 - rho);
      break;
    }
    const double inner = outer * ratio;
    prev = last;
    last = side < 0 ? integrate_gl(f, a + len * inner, a + len * outer, n)
                    : integrate_gl(f, b - len * outer, b - len * inner, n);
    sum += last;
    outer = inner;
  }
  return sum;
}

double integrate_oscillatory(const std::function<double(double)>& f, double omega, double upper,
                             double tol, double power_at_zero) {
  if (!(upper > 0.0)) return 0.0;
  const double width = std::numbers::pi / std::max(omega, 1.0);
  double coarse = 0.0, fine = 0.0;
  const double first = std::min(width, upper);
  double outer = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double inner = outer * 0.15;
    coarse += integrate_gl(f, first * inner, first * outer, 20);
    fine += integrate_gl(f, first * inner, first * outer, 30);
    outer = inner;
  }
  const double r = first * outer;
  const double rest = f(r) * r / (power_at_zero + 1.0);
  coarse += rest;
  fine += rest;
  for (double a = first; a < upper; a += width) {
    const double b = std::min(a + width, upper);
    coarse += integrate_gl(f, a, b, 20);
    fine += integrate_gl(f, a, b, 30);
  }
  if (!(std::abs(fine - coarse) <= tol * std::max(1.0, std::abs(fine))))
    throw QuadratureError("oscillatory quadrature failed its refinement tolerance");
  return fine;
}

double power_antiderivative2(double z, double e) {
  return std::pow(std::abs(z), e + 2.0) / ((e + 1.0) * (e + 2.0));
}

double power_second_difference(double r, double q) {
  const double ar = std::abs(r);
  if (ar < 20.0) return std::pow(ar + 1.0, q) - 2.0 * std::pow(ar, q) + std::pow(std::abs(ar - 1.0), q);
  // 2 sum_{j>=1} C(q, 2j) r^{q - 2j}
  double coef = q * (q - 1.0) / 2.0;
  const double inv_r2 = 1.0 / (ar * ar);
  double pw = std::pow(ar, q) * inv_r2;
  double sum = 0.0;
  for (int j = 1; j < 40; ++j) {
    const double term = coef * pw;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    coef *= (q - 2.0 * j) * (q - 2.0 * j - 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
    pw *= inv_r2;
  }
  return 2.0 * sum;
}

double integrate_pieces(const std::function<double(double)>& f, double lo, double hi,
                        std::vector<double> breaks, const std::vector<double>& singular) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto is_singular = [&](double x) {
    return std::find(singular.begin(), singular.end(), x) != singular.end();
  };
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    if (a < lo || b > hi || !(b > a)) continue;
    const bool left = is_singular(a), right = is_singular(b);
    if (left && right)
      sum += integrate_graded(f, a, b, 0, 20, 0.15, 8);
    else if (left)
      sum += integrate_graded(f, a, b, -1, 20, 0.15, 8);
    else if (right)
      sum += integrate_graded(f, a, b, +1, 20, 0.15, 8);
    else
      sum += integrate_gl(f, a, b, 16);
  }
  return sum;
}

double power_pair_integral(double a1, double b1, double a2, double b2, double e) {
  const double w1 = b1 - a1;
  const double w2 = b2 - a2;
  if (!(w1 > 0.0) || !(w2 > 0.0)) return 0.0;
  const double gap = std::max(a2 - b1, a1 - b2);
  if (gap > 2.0 * std::max(w1, w2)) {
    // Smooth integrand: tensor Gauss-Legendre.
    const auto& rule = gauss_legendre(8);
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double u = 0.5 * (a1 + b1) + 0.5 * w1 * rule.nodes[i];
      for (int j = 0; j < 8; ++j) {
        const double v = 0.5 * (a2 + b2) + 0.5 * w2 * rule.nodes[j];
        sum += rule.weights[i] * rule.weights[j] * std::pow(std::abs(u - v), e);
      }
    }
    return sum * 0.25 * w1 * w2;
  }
  auto G = [e](double z) { return power_antiderivative2(z, e); };
  return G(b1 - a2) - G(a1 - a2) - G(b1 - b2) + G(a1 - b2);
}

double abs_moment_quadrature(double z, double b) {
  if (b == 0.0) return 1.0;
  z = std::abs(z);
  // int_0^inf u^b [phi(u - z) + phi(u + z)] du with u = w^{1/(1+b)}, which
  // absorbs the u^b singularity: u^b du = dw / (1 + b).
  const double p = 1.0 / (1.0 + b);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto integrand = [&](double w) {
    const double u = std::pow(w, p);
    const double a = u - z, c = u + z;
    return inv_sqrt_2pi * (std::exp(-0.5 * a * a) + std::exp(-0.5 * c * c));
  };
  const double lo = std::max(0.0, z - 12.0);
  const double hi = z + 12.0;
  const int panels = static_cast<int>(std::ceil((hi - lo) / 0.5));
  const double du = (hi - lo) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double u0 = lo + k * du;
    const double u1 = u0 + du;
    sum += integrate_gl(integrand, std::pow(u0, 1.0 + b), std::pow(u1, 1.0 + b), 16);
  }
  return sum * p;
}

namespace {

constexpr double kTableMax = 16.0;

double abs_moment_asymptotic(double z, double b) {
  // E|z + N|^b = z^b sum_k C(b, 2k) (2k-1)!! z^{-2k}
  double term = 1.0;
  double sum = 1.0;
  const double inv_z2 = 1.0 / (z * z);
  for (int k = 1; k < 30; ++k) {
    term *= (b - 2.0 * k + 2.0) * (b - 2.0 * k + 1.0) / ((2.0 * k) * (2.0 * k - 1.0)) *
            (2.0 * k - 1.0) * inv_z2;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return std::pow(z, b) * sum;
}

}  // namespace

double lagrange4(std::span<const double> values, double x0, double h, double x) {
  const std::size_t n = values.size();
  const double s = (x - x0) / h;
  std::ptrdiff_t i = static_cast<std::ptrdiff_t>(std::floor(s)) - 1;
  i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 4);
  const double t = s - static_cast<double>(i);  // stencil nodes at 0,1,2,3
  const double l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
  const double l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
  const double l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
  const double l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
  return l0 * values[i] + l1 * values[i + 1] + l2 * values[i + 2] + l3 * values[i + 3];
}

AbsMomentTable::AbsMomentTable(double b) : b_(b), step_(1.0 / 128.0) {
  if (!(b > -1.0 && b <= 0.0)) throw std::domain_error("AbsMomentTable: exponent outside (-1, 0]");
  const std::size_t n = static_cast<std::size_t>(kTableMax / step_) + 4;
  values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) values_[i] = abs_moment_quadrature(i * step_, b);
}

double AbsMomentTable::standard(double z) const {
  if (b_ == 0.0) return 1.0;
  z = std::abs(z);
  if (z >= kTableMax) return abs_moment_asymptotic(z, b_);
  return lagrange4(values_, 0.0, step_, z);
}

double AbsMomentTable::operator()(double mu, double sigma) const {
  if (b_ == 0.0) return 1.0;
  if (sigma <= 0.0) return std::pow(std::max(std::abs(mu), 1e-300), b_);
  const double z = std::abs(mu) / sigma;
  if (z > 1e8) return std::pow(std::abs(mu), b_);
  return std::pow(sigma, b_) * standard(z);
}

const AbsMomentTable& abs_moment_table(double b) {
  static std::mutex mutex;
  static std::map<double, std::unique_ptr<AbsMomentTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[b];
  if (!slot) slot = std::make_unique<AbsMomentTable>(b);
  return *slot;
}

double gaussian_abs_moment(double mu, double sigma, double b) {
  return abs_moment_table(b)(mu, sigma);
}

}  // namespace fracheat
