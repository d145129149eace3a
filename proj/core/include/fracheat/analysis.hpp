#pragma once

// Checks built on the estimators: Hoelder exponent fits, scaling and
// sub-additivity of Z_t, tail diagnostics and bounds on auxiliary integrals.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracheat/mc.hpp"
#include "fracheat/params.hpp"
#include "fracheat/stats.hpp"

namespace fracheat {

/// A ratio evaluated over a grid and over the grid refined 2x (geometric
/// midpoints on every axis). Passes when both maxima are finite and the
/// refined maximum is within 20% of the coarse one.
struct BoundCheck {
  std::string name;
  std::vector<std::vector<double>> points;  // coarse grid points
  std::vector<double> ratios;
  double max_ratio = 0.0;
  double refined_max_ratio = 0.0;
  bool pass = false;
};

inline constexpr double kRefinementTolerance = 0.2;

/// One row of a verification summary.
struct CheckResult {
  std::string name;
  double target = 0.0;
  double estimate = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct HolderFit {
  SlopeFit fit;
  SlopeFit control;  // same data against doubled log abscissae
  std::vector<double> abscissae;
  std::vector<MCEstimate> estimates;
  double target = 0.0;
  double tolerance = 0.1;
  bool pass = false;          // r^2 >= 0.95 and |slope - target| <= tolerance
  bool control_pass = false;  // the control judged by the same rule
};

inline constexpr double kMinRSquared = 0.95;

/// Fits log C(t, t, x, x + h e_axis) on log h; target alpha kappa.
HolderFit spatial_holder_slope(const Model& model, double t, int axis,
                               std::span<const double> offsets, std::size_t n_paths,
                               const McOptions& opt, std::size_t n_steps = 256);

/// Fits log C(t - lag, t, x, x) on log lag; target kappa. Lags are in cells
/// of width t / n_steps.
HolderFit temporal_holder_slope(const Model& model, double t, std::span<const long> lag_steps,
                                std::size_t n_paths, const McOptions& opt,
                                std::size_t n_steps = 1024);

/// sqrt of self energies of independent paths on [0, t].
std::vector<double> sample_Z(const Model& model, double t, std::size_t n_paths, std::uint64_t seed,
                             std::uint64_t domain, unsigned workers, std::size_t n_steps = 256);

struct ScalingCheck {
  KsResult ks;
  double exponent = 0.0;  // applied to t in t^{exponent} Z_1
  bool pass = false;      // p > 0.01
};

/// KS between Z_t and t^{gamma/2 + exponent_shift} Z_1 (independent samples).
ScalingCheck scaling_ks_check(const Model& model, double t, std::size_t n_paths,
                              const McOptions& opt, double exponent_shift = 0.0,
                              std::size_t n_steps = 256);

struct SubadditivityCheck {
  MCEstimate z1, z2, z12;
  bool pass = false;          // E Z_{t1+t2} <= E Z_{t1} + E Z_{t2} + 3 pooled SE
  double scaling_gap = 0.0;   // (E Z_{t1+t2} - (t1+t2)^{gamma/2} E Z_1) / pooled SE
  MCEstimate unit;            // E Z_1
};

SubadditivityCheck subadditivity_check(const Model& model, double t1, double t2,
                                       std::size_t n_paths, const McOptions& opt,
                                       std::size_t n_steps = 256);

struct FactorizationCheck {
  double H0 = 0.0;
  std::vector<double> lags;
  std::vector<double> integrals;  // I(lag)
  std::vector<double> ratios;     // I(lag) / lag^{2H0-2}
  double spread = 0.0;            // (max - min) / mean of ratios
  double homogeneity_error = 0.0; // max |I(2h)/I(h) / 2^{2H0-2} - 1|
  double c0 = 0.0;                // 1 / mean ratio
  bool pass = false;
};

/// I(h) = int_R |u|^e |u - h|^e du with e = (2H0 - 3)/2.
double factorization_integral(double H0, double h);

FactorizationCheck kernel_factorization_check(double H0, std::span<const double> lags);

struct TailReport {
  double exponent = 0.0;              // 2 / (2 - gamma)
  std::vector<double> z;              // ladder
  std::vector<double> log_survival;   // log P(Z_1 >= z)
  double fitted_c = 0.0;              // log P ~ a - C z^exponent
  double fit_r_squared = 0.0;
  bool decreasing = false;
  std::vector<double> lambdas;
  std::vector<double> mgf;            // E exp(lambda Z_1^2), full sample
  std::vector<double> mgf_subsample;  // first tenth of the sample
  std::vector<double> mgf_delta;      // relative difference
  std::size_t n_paths = 0;
};

TailReport tail_diagnostic(const Model& model, std::size_t n_paths, const McOptions& opt,
                           std::span<const double> lambdas, std::size_t n_steps = 256);

/// E|x + eps X|^{-beta} / min(eps^{-beta}, x^{-beta}) for standard normal X.
BoundCheck lemma_72_check(std::span<const double> betas, std::span<const double> eps_grid,
                          std::span<const double> x_grid);

class RouteDisagreementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Lemma73Result {
  BoundCheck bound;             // E|x + eps Y|^{-beta} / eps^{-beta}
  double max_route_gap = 0.0;   // relative Fourier vs density gap
  BoundCheck pair_bound;        // E|eps N1 - eps' N2 + D|^{-beta} / |D|^{-beta}
  bool pass = false;
};

inline constexpr double kRouteTolerance = 1e-3;

/// Throws RouteDisagreementError if the two routes differ by more than
/// kRouteTolerance anywhere.
Lemma73Result lemma_73_check(double alpha, double beta, std::span<const double> eps_grid,
                             std::span<const double> x_grid);

struct Lemma75Result {
  MCEstimate small, large;
  double relative_gap = 0.0;
  bool cells_decrease = false;  // expected per-cell contributions after the first
  bool pass = false;
};

/// (int_0^t s^{2H0-2} prod |X_s^i|^{2H_i-2} ds)^2 by the Levy-scaled cell
/// rule; sample sizes n_small and n_large.
Lemma75Result lemma_75_check(const Model& model, std::size_t n_small, std::size_t n_large,
                             const McOptions& opt, std::size_t n_steps = 256);

/// Cell rule value of int_0^t s^{2H0-2} prod |X_s^i|^{2H_i-2} ds for one path
/// started at the origin.
double singular_time_integral(const Model& model, std::span<const double> path_positions,
                              std::size_t n_steps, double t);

struct Lemma76Result {
  BoundCheck bound;          // g(y) / min(1, y^2)
  double limit = 0.0;        // (K/2) int u^{beta+1} e^{-u^alpha} du by quadrature
  double small_y_ratio = 0.0;  // g(y_min) / y_min^2
  double limit_error = 0.0;
  bool pass = false;
};

/// g(y) = E|xi|^{-beta} - E|y + xi|^{-beta}, Fourier form.
double lemma_76_g(double alpha, double beta, double y);

Lemma76Result lemma_76_check(double alpha, double beta, std::span<const double> y_grid);

/// Geometric grid of n points from lo to hi.
std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

}  // namespace fracheat
