#pragma once

// Quadrature helpers shared by the density, energy and noise modules.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracheat {

/// Raised when a quadrature fails its internal refinement test.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Cached; the reference stays valid.
const QuadratureRule& gauss_legendre(int n);

/// n-point Gauss-Hermite rule for weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int n);

/// Gauss-Legendre on [a, b] with n points.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int n = 20);

/// Integrates f over [a, b] where f may carry an integrable power singularity
/// at a (side = -1), at b (side = +1) or at both ends (side = 0). Panels are
/// graded geometrically towards the singular end(s) with ratio `ratio`.
/// Near a nonzero endpoint grading stops at width 1e-9 |endpoint| (node rounding
/// spoils finer panels) and the rest is summed as a geometric series.
double integrate_graded(const std::function<double(double)>& f, double a, double b, int side,
                        int levels = 40, double ratio = 0.15, int n = 12);

/// int_0^upper f(xi) d xi for an integrand oscillating at angular frequency
/// `omega`, possibly singular (integrably) at 0. Panels of width
/// pi / max(omega, 1); the first panel is graded towards 0. Every panel is
/// evaluated with 20 and 30 Gauss-Legendre points and QuadratureError is
/// thrown if the totals differ by more than tol * max(1, |result|).
/// If f(xi) ~ c xi^power_at_zero near 0, the part of [0, upper] below the
/// innermost graded panel is added as f(r) r / (power_at_zero + 1).
double integrate_oscillatory(const std::function<double(double)>& f, double omega, double upper,
                             double tol = 1e-8, double power_at_zero = 0.0);

/// F(z) = |z|^(e+2) / ((e+1)(e+2)), the second antiderivative of |z|^e.
double power_antiderivative2(double z, double e);

/// Exact value of int_{a1}^{b1} int_{a2}^{b2} |u - v|^e dv du for e > -1.
/// Switches to tensor Gauss-Legendre when the intervals are well separated
/// (the closed form cancels catastrophically there).
double power_pair_integral(double a1, double b1, double a2, double b2, double e);

/// |r + 1|^q - 2|r|^q + |r - 1|^q, summed as a series for |r| >= 20.
double power_second_difference(double r, double q);

/// Integrates f over [lo, hi] split at `breaks`. Pieces ending at a point
/// listed in `singular` are graded towards it; the rest use 16-point
/// Gauss-Legendre.
double integrate_pieces(const std::function<double(double)>& f, double lo, double hi,
                        std::vector<double> breaks, const std::vector<double>& singular);

/// E|mu + sigma N|^b for N standard normal and -1 < b <= 0.
double gaussian_abs_moment(double mu, double sigma, double b);

/// Tabulated k_b(z) = E|z + N|^b, built once per exponent. Interpolates a
/// fine table for |z| <= 16 and sums the asymptotic series beyond.
class AbsMomentTable {
 public:
  explicit AbsMomentTable(double b);

  double exponent() const noexcept { return b_; }
  /// k_b(z).
  double standard(double z) const;
  /// E|mu + sigma N|^b.
  double operator()(double mu, double sigma) const;

 private:
  double b_;
  double step_;
  std::vector<double> values_;
};

/// Shared table for exponent b (cached per b, thread-safe).
const AbsMomentTable& abs_moment_table(double b);

/// Direct quadrature of k_b(z); used to build tables.
double abs_moment_quadrature(double z, double b);

/// Four-point Lagrange interpolation on a uniform grid starting at x0 with
/// spacing h. Clamps to the end stencils.
double lagrange4(std::span<const double> values, double x0, double h, double x);

}  // namespace fracheat
