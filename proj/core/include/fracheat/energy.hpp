#pragma once

// Singular energy functionals of a path:
//
//   T(c, z) = int int |v - a - c|^{2H0-2} prod_i |X^i_a - X^i_v + z_i|^{2H_i-2} dv da
//
// self energy (c = 0, z = 0), same-path energy with a spatial shift, the
// mixed Hoelder term (c = t - s), and cross energy between two paths.
//
// Cell rule ("levy_scaled_band"). The path is sampled on a uniform grid of
// n cells of width h. A cell pair (j, k) with lag m = k - j carries the
// separation S = X_j - X_k (left nodes), or the cell increment
// X_{j+1} - X_j when m = 0, and the weight
//
//   W_c(m) = int tri_m(tau) |tau - c|^a0 (|tau| / (max(|m|,1) h))^sb d tau
//
// with tri_m the density of v - a over the pair, a0 = 2H0 - 2 and
// sb = sum_i (2H_i - 2) / alpha. For a stable path E prod|S|^b scales like
// (max(|m|,1) h)^sb, so W_c(m) prod|S|^b is an unbiased estimate of the
// pair's contribution whatever the grid size. With a shift, pairs with
// |m| <= kNearLag are integrated in tau with S rescaled by
// (|tau| / (max(|m|,1) h))^{1/alpha}.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "fracheat/mc.hpp"
#include "fracheat/params.hpp"
#include "fracheat/stable.hpp"

namespace fracheat {

inline constexpr std::string_view kDiagonalRule = "levy_scaled_band";
inline constexpr int kNearLag = 2;
inline constexpr double kSeparationFloor = 1e-12;

struct EnergyValue {
  double value = 0.0;
  std::size_t grid_size = 0;
  std::string_view diagonal_rule = kDiagonalRule;
};

/// Raised for paths the cell rule cannot evaluate (non-uniform grid,
/// non-finite positions).
class DegeneratePathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precomputed cell weights for one (model, n, h).
class EnergyGrid {
 public:
  EnergyGrid(const Model& model, std::size_t n, double h);

  std::size_t n() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  const Model& model() const noexcept { return model_; }

  /// W_0(m), closed form, m >= 0.
  double weight(std::size_t m) const { return w0_.at(m); }
  /// int tri_m(tau) |tau|^a0 d tau, the bare time weight, m >= 0.
  double time_weight(std::size_t m) const { return tw_.at(m); }
  /// W_c(m) for c = lag_steps * h and m in [-(n - 1), n - 1], stored at
  /// index m + n - 1. Computed by quadrature; call before going parallel.
  std::vector<double> lagged_weights(long lag_steps) const;

  /// Self energy of the first `cells` cells of the path.
  double self(const LevyPath& path, std::size_t cells) const;
  /// Self energy of every prefix: out[k] = self(path, k + 1).
  std::vector<double> self_prefixes(const LevyPath& path) const;

  /// Mixed term: a over the first n - lag cells, v over all n cells,
  /// time kernel |v - a - lag h|^a0, spatial shift z. `lagged` must come
  /// from lagged_weights(lag_steps). lag 0 with zero shift is self(path, n).
  double mixed(const LevyPath& path, long lag_steps, std::span<const double> lagged,
               std::span<const double> shift) const;

  /// Separation power matrix P(j, k) = prod_i |S_jk^i|^{b_i}, row-major n x n.
  std::vector<double> separation_powers(const LevyPath& path) const;
  /// Mixed term with zero shift from a precomputed separation matrix.
  double mixed_from_powers(std::span<const double> powers, long lag_steps,
                           std::span<const double> lagged) const;

  /// Cross energy of two distinct paths on this grid: exact cell time
  /// weights times the spatial factor at midpoint node averages.
  double cross(const LevyPath& path1, const LevyPath& path2, std::span<const double> shift) const;

  /// int tri_m(tau) |tau - c|^a0 prod_i |sep_i(tau) + z_i|^{b_i} d tau where
  /// sep(tau) = sigma rho(tau) for m != 0 and -sgn(tau) sigma rho(tau) for
  /// m = 0, rho(tau) = (|tau| / (max(|m|,1) h))^{1/alpha}.
  double near_pair(long m, double c, std::span<const double> sigma,
                   std::span<const double> shift) const;

 private:
  void check_path(const LevyPath& path, std::size_t cells) const;

  Model model_;
  std::size_t n_;
  double h_;
  double a0_, sb_;
  std::vector<double> b_;
  std::vector<double> w0_;
  std::vector<double> tw_;
};

EnergyValue self_energy(const LevyPath& path, const Model& model);

/// Self energy on [0, t] and of the rescaled path (lambda s, lambda^{1/alpha} X_s)
/// on [0, lambda t], evaluated on the image grid.
std::pair<EnergyValue, EnergyValue> path_scaling_check(const LevyPath& path, const Model& model,
                                                       double lambda);

/// int int |s - r|^a0 prod_i |X1^i_s - X2^i_r + z_i|^{b_i}. When both
/// arguments are the same path the same-path rule is used, so
/// cross_energy(p, p, 0) == self_energy(p) exactly.
EnergyValue cross_energy(const LevyPath& path1, const LevyPath& path2,
                         std::span<const double> shift, const Model& model);

/// Monte Carlo estimate of the Hoelder constant C(s, t, x, y) (no alpha_H
/// factor). Paths live on [0, t] with n_steps cells; t - s must be a whole
/// number of cells. The three terms share each path.
MCEstimate holder_C(double s, double t, std::span<const double> x, std::span<const double> y,
                    const Model& model, std::size_t n_paths, const McOptions& opt,
                    std::size_t n_steps = 256);

/// C(t, t, x, x + offset e_axis) for every offset, common paths.
std::vector<MCEstimate> holder_C_spatial(const Model& model, double t, int axis,
                                         std::span<const double> offsets, std::size_t n_paths,
                                         const McOptions& opt, std::size_t n_steps = 256);

/// C(t - lag h, t, x, x) for each lag (in cells), common paths.
std::vector<MCEstimate> holder_C_temporal(const Model& model, double t,
                                          std::span<const long> lag_steps, std::size_t n_paths,
                                          const McOptions& opt, std::size_t n_steps = 1024);

}  // namespace fracheat
