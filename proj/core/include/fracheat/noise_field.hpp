#pragma once

// Fractional Brownian sheet on grids, mollified noise functionals and the
// inner product of the Hilbert space H.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "fracheat/params.hpp"
#include "fracheat/rng.hpp"
#include "fracheat/stable.hpp"

namespace fracheat {

/// R_H(s, t) = (|t|^{2H} + |s|^{2H} - |t - s|^{2H}) / 2.
double covariance_R(double H, double s, double t);

class NonPositiveDefiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The path left the spatial window of a sheet.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxSheetNodes = 4096;

/// Node grids: axis 0 is time, axes 1..d are space. Each strictly increasing.
struct SheetGrid {
  std::vector<std::vector<double>> axes;

  int dim() const noexcept { return static_cast<int>(axes.size()) - 1; }
  std::size_t node_count() const noexcept;
  std::size_t cell_count() const noexcept;
};

/// Uniform grid: time nodes on [0, t] with n_time cells; each space axis
/// covers base_point_i +- max(6 t^{1/alpha}, 6) with n_space cells.
SheetGrid make_sheet_grid(const Model& model, double t, std::size_t n_time, std::size_t n_space);

/// A sampled sheet: node values (row-major, time outermost) and the
/// rectangular increments over all cells (same layout over cells).
class NoiseSheet {
 public:
  NoiseSheet(SheetGrid grid, std::vector<double> hurst, std::vector<double> values,
             std::uint64_t seed);

  const SheetGrid& grid() const noexcept { return grid_; }
  std::span<const double> hurst() const noexcept { return hurst_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> increments() const noexcept { return increments_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Flat binary layout, see docs/sheet_format.md.
  void save(std::ostream& out) const;
  static NoiseSheet load(std::istream& in);

 private:
  SheetGrid grid_;
  std::vector<double> hurst_;
  std::vector<double> values_;
  std::vector<double> increments_;
  std::uint64_t seed_;
};

/// Holds the per-axis Cholesky factors for repeated sampling on one grid.
class SheetSampler {
 public:
  SheetSampler(SheetGrid grid, std::vector<double> hurst);
  NoiseSheet sample(RandomStream& rng, std::uint64_t seed_tag = 0) const;
  const SheetGrid& grid() const noexcept { return grid_; }

 private:
  SheetGrid grid_;
  std::vector<double> hurst_;
  std::vector<std::vector<double>> factors_;  // lower triangular, row-major
};

NoiseSheet sample_sheet(const SheetGrid& grid, std::span<const double> hurst, RandomStream& rng);

/// Piecewise-constant function on the cells of a rectangle grid. edges[0]
/// are time edges, edges[i] space edges; values are row-major over cells.
struct TabulatedFunction {
  std::vector<std::vector<double>> edges;
  std::vector<double> values;

  std::size_t cell_count() const noexcept;
  static TabulatedFunction zeros(std::vector<std::vector<double>> edges);
};

/// alpha_H sum over cell pairs of phi psi times the exact cell integrals of
/// |s - t|^{2H0-2} prod |x_i - y_i|^{2H_i-2}. Symmetric in its arguments
/// bit for bit.
double inner_product_H(const TabulatedFunction& phi, const TabulatedFunction& psi,
                       std::span<const double> hurst);

struct Mollifier {
  double epsilon;  // variance of the spatial heat kernel p_eps
  double delta;    // width of the time box phi_delta

  Mollifier(double eps, double del);
};

/// <phi_d(s - .) p_e(x - .), phi_d'(r - .) p_e'(y - .)>_H.
double mollified_pair_product(const Mollifier& m1, const Mollifier& m2, double s, double r,
                              std::span<const double> x, std::span<const double> y,
                              std::span<const double> hurst);

/// A(r, y) = int_0^t phi_delta(t - s - r) p_eps(X_s - y) ds sampled at cell
/// centres of the grid, with X piecewise constant (midpoint node average) on
/// the path cells. Cells with r > t are zero.
TabulatedFunction approx_functional_A(const LevyPath& path, const Mollifier& m, double t,
                                      const SheetGrid& grid);

/// ||A^{eps,delta}||_H^2 on [0, horizon of the path], the conditional
/// variance of V^{eps,delta} given the path.
double conditional_variance_V(const LevyPath& path, const Mollifier& m, const Model& model);

/// Riemann sum of A at cell centres against the sheet's cell increments. The
/// path is re-anchored at x. Throws CoverageError if it leaves the window.
double sample_V_smoothed(const NoiseSheet& sheet, const LevyPath& path, const Mollifier& m,
                         double t, std::span<const double> x);

/// Sheet-route building blocks: re-anchored A on the sheet grid, and the
/// Riemann sum for a given A.
TabulatedFunction anchored_A(const SheetGrid& grid, const LevyPath& path, const Mollifier& m,
                             double t, std::span<const double> x);
double riemann_pairing(const NoiseSheet& sheet, const TabulatedFunction& a);

}  // namespace fracheat
