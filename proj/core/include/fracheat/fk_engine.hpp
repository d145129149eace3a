#pragma once

// Feynman-Kac Monte Carlo: solution moments from path energies, the
// smoothed solution on a sampled sheet, and chaos kernels.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fracheat/mc.hpp"
#include "fracheat/noise_field.hpp"
#include "fracheat/params.hpp"
#include "fracheat/rng.hpp"

namespace fracheat {

/// Bounded initial condition.
///   constant:       f(y) = value
///   gaussian_bump:  f(y) = value * exp(-|y - center|^2 / (2 width^2))
///   indicator_box:  f(y) = value on [lower, upper] (componentwise), 0 elsewhere
class InitialData {
 public:
  enum class Kind { constant, gaussian_bump, indicator_box };

  static InitialData constant(double value);
  static InitialData gaussian_bump(double amplitude, std::vector<double> center, double width);
  static InitialData indicator_box(std::vector<double> lower, std::vector<double> upper,
                                   double value = 1.0);

  Kind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }
  double width() const noexcept { return width_; }
  std::span<const double> center() const noexcept { return lower_; }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }
  /// sup |f|.
  double bound() const noexcept { return std::abs(value_); }
  bool is_zero() const noexcept { return value_ == 0.0; }

  double operator()(std::span<const double> y) const;
  /// (q_s f)(y) = E f(y + X_s) for the alpha-stable semigroup.
  double smoothed(double alpha, double s, std::span<const double> y) const;

 private:
  InitialData(Kind k, double v) : kind_(k), value_(v) {}
  void check_dim(std::size_t d) const;

  Kind kind_;
  double value_;
  double width_ = 0.0;
  std::vector<double> lower_;  // center for the bump
  std::vector<double> upper_;
};

/// Replicates whose log-weight exceeds this are rejected.
inline constexpr double kMaxExponent = 709.0;

/// E prod_j f(X^j_t + x) exp((alpha_H / 2) sum_{j,k} D_jk) over p independent
/// paths on a uniform grid of n_steps cells, D_jj = self energy, D_jk = cross
/// energy.
MCEstimate moment_stratonovich(int p, double t, std::span<const double> x, const InitialData& f,
                               const Model& model, std::size_t n_paths, const McOptions& opt,
                               std::size_t n_steps = 256);

/// Same with exponent alpha_H sum_{j<k} D_jk.
MCEstimate moment_skorohod(int p, double t, std::span<const double> x, const InitialData& f,
                           const Model& model, std::size_t n_paths, const McOptions& opt,
                           std::size_t n_steps = 256);

/// Both weights of one replicate, built from the same paths.
struct BridgeReplicate {
  double skorohod = 0.0;
  double stratonovich = 0.0;
  double self_sum = 0.0;  // sum_j D_jj
  bool rejected = false;
};

/// Per-replicate values; replicate i uses the same stream as replicate i of
/// moment_stratonovich and moment_skorohod.
std::vector<BridgeReplicate> moment_bridge(int p, double t, std::span<const double> x,
                                           const InitialData& f, const Model& model,
                                           std::size_t n_paths, const McOptions& opt,
                                           std::size_t n_steps = 256);

struct MomentLadder {
  std::vector<double> times;
  std::vector<MCEstimate> estimates;
  std::size_t ordering_violations = 0;  // replicate-level decreases in t
};

/// p = 1, f = 1 Stratonovich moment at several horizons with nested paths:
/// one path on [0, max t] per replicate, every horizon a prefix of it. Each
/// horizon must be a whole number of cells of width step.
MomentLadder moment_t_ladder(const Model& model, std::span<const double> times, double step,
                             std::size_t n_paths, const McOptions& opt);

/// Outcome of the inner average of one smoothed-solution sample.
struct SmoothedSample {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t dropped = 0;  // window exits or overflow
};

/// (1/n) sum over inner paths of f(X_t^x) exp(V^{eps,delta}_{t,x}) for a fixed
/// sheet. Inner paths have n_steps cells on [0, t].
SmoothedSample sample_solution_smoothed(const NoiseSheet& sheet, const Mollifier& m, double t,
                                        std::span<const double> x, const InitialData& f,
                                        const Model& model, std::size_t n_inner, RandomStream& rng,
                                        std::size_t n_steps = 64);

struct SmoothedGrid {
  std::size_t n_time = 32;
  std::size_t n_space = 120;
  std::size_t path_steps = 64;
};

/// Outer average of sample_solution_smoothed over n_sheets sheets. Sheet k
/// and its inner paths use stream k, so levels of a ladder share sheets.
MCEstimate smoothed_solution_mean(const Mollifier& m, double t, std::span<const double> x,
                                  const InitialData& f, const Model& model, std::size_t n_sheets,
                                  std::size_t n_inner, const McOptions& opt,
                                  const SmoothedGrid& grid = {});

class CoincidentTimesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// f_n(s, y; t, x) = (1/n!) q_{t-s_n}(x - y_n) ... q_{s_2-s_1}(y_2 - y_1) (q_{s_1} f)(y_1)
/// after sorting s ascending. points holds n blocks of d coordinates.
double chaos_kernel_f_n(int n, std::span<const double> times, std::span<const double> points,
                        double t, std::span<const double> x, const InitialData& f,
                        const Model& model);

/// E f(X_t^x) prod_i p_eps(X_{t-s_i}^x - y_i).
MCEstimate chaos_kernel_h_n_mc(int n, std::span<const double> times, std::span<const double> points,
                               double t, std::span<const double> x, const InitialData& f,
                               const Model& model, double eps, std::size_t n_paths,
                               const McOptions& opt);

/// n! (f_n * prod p_eps)(y), the exact mean of chaos_kernel_h_n_mc, by tensor
/// Gauss-Hermite in the n d point coordinates (n d <= 3).
double chaos_kernel_h_n_smoothed(int n, std::span<const double> times,
                                 std::span<const double> points, double t,
                                 std::span<const double> x, const InitialData& f,
                                 const Model& model, double eps, int gh_nodes = 24);

/// ||f_1(.; t, x)||_H^2 by quadrature. Supports constant f (any alpha) and
/// gaussian_bump with alpha = 2.
double first_chaos_norm(double t, std::span<const double> x, const InitialData& f,
                        const Model& model);

/// Monte Carlo of E[f(X_t^x) f(X'_t^x) alpha_H D(X, X')] over independent
/// pairs, the first term of the chaos expansion of the second moment.
MCEstimate first_chaos_mc(double t, std::span<const double> x, const InitialData& f,
                          const Model& model, std::size_t n_paths, const McOptions& opt,
                          std::size_t n_steps = 256);

}  // namespace fracheat
