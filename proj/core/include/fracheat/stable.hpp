#pragma once

// Symmetric alpha-stable variates, Levy paths and transition densities.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fracheat/params.hpp"
#include "fracheat/rng.hpp"

namespace fracheat {

/// One draw from S(alpha, sigma): characteristic function exp(-sigma^a |theta|^a).
/// alpha = 2 gives N(0, 2 sigma^2), alpha = 1 a Cauchy law with scale sigma.
double sample_stable(double alpha, double sigma, RandomStream& rng);

/// A d-dimensional path sampled on a strictly increasing time grid starting at 0.
/// Positions are stored coordinate-major: coordinate(i)[k] = X^i(times[k]).
class LevyPath {
 public:
  LevyPath() = default;
  LevyPath(std::vector<double> times, int dim, std::vector<double> positions);

  int dim() const noexcept { return dim_; }
  std::size_t n_steps() const noexcept { return times_.empty() ? 0 : times_.size() - 1; }
  std::size_t n_nodes() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  double horizon() const noexcept { return times_.back(); }

  std::span<const double> coordinate(int i) const noexcept {
    return {positions_.data() + static_cast<std::size_t>(i) * times_.size(), times_.size()};
  }
  double position(int i, std::size_t k) const noexcept {
    return positions_[static_cast<std::size_t>(i) * times_.size() + k];
  }
  std::span<const double> raw_positions() const noexcept { return positions_; }

  /// True when every step has the same length (to relative 1e-12).
  bool uniform() const noexcept;

  /// The first n steps.
  LevyPath prefix(std::size_t n) const;

  /// Every stride-th node (n_steps must be divisible by stride).
  LevyPath subsampled(std::size_t stride) const;

  /// (lambda s, x0 + lambda^{1/alpha} (X_s - x0)) on the image grid.
  LevyPath rescaled(double lambda, double alpha) const;

  /// Appends `steps` further steps of the current (uniform) step length.
  void extend(std::size_t steps, double alpha, RandomStream& rng);

 private:
  std::vector<double> times_;
  int dim_ = 0;
  std::vector<double> positions_;
};

/// Uniform grid on [0, horizon] with n_steps steps, anchored at base_point.
/// Draw order: step by step, coordinates in order within a step.
LevyPath sample_path(const Model& model, std::size_t n_steps, RandomStream& rng);

/// Same, on an explicit grid (times[0] must be 0).
LevyPath sample_path(const Model& model, std::span<const double> times, RandomStream& rng);

/// q_t(x) by Fourier inversion (closed forms for alpha = 1, 2).
double transition_density_1d(double alpha, double t, double x);

/// Product of one-dimensional densities over the components of v.
double transition_density(double alpha, double t, std::span<const double> v);

/// Tabulated q_t on a symmetric uniform grid with four-point interpolation,
/// series or Fourier evaluation beyond the tail cutoff.
class DensityTable {
 public:
  DensityTable(double alpha, double t);

  double alpha() const noexcept { return alpha_; }
  double t() const noexcept { return t_; }
  double tail_cutoff() const noexcept { return cutoff_; }
  std::span<const double> abscissae() const noexcept { return abscissae_; }
  std::span<const double> values() const noexcept { return values_; }

  double density(double x) const;
  /// P(X_t <= x).
  double cdf(double x) const;
  /// Mass of (tail_cutoff, infinity).
  double tail_mass() const;
  /// Trapezoid sum over the abscissae plus both tails.
  double normalization() const;

 private:
  double alpha_, t_, scale_, cutoff_, step_;
  std::vector<double> abscissae_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // trapezoid integral from abscissae_[0]
};

/// Shared table for (alpha, t). Thread-safe; tables live for the program.
const DensityTable& density_table(double alpha, double t = 1.0);

/// E|xi|^{-beta} for xi ~ S(alpha, 1), 0 < beta < 1.
double negative_moment(double alpha, double beta);

/// E|z + Y|^{-beta}, Y ~ S(alpha, 1), through the Fourier representation
/// K int_0^inf xi^{beta-1} e^{-xi^alpha} cos(z xi) d xi.
double shifted_negative_moment_fourier(double alpha, double beta, double z);

/// Same quantity integrated against the density table.
double shifted_negative_moment_density(double alpha, double beta, double z);

/// K = (2/pi) Gamma(1 - beta) sin(pi beta / 2).
double fourier_power_constant(double beta);

}  // namespace fracheat
