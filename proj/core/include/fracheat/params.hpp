#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracheat {

/// Raw problem description: stability index, Hurst vector (H0 for time, then
/// one per spatial axis), spatial dimension, time horizon and base point.
struct ModelParams {
  double alpha = 2.0;
  std::vector<double> hurst{0.75, 0.75};
  int dim = 1;
  double horizon = 1.0;
  std::vector<double> base_point{0.0};
};

struct DerivedConstants {
  double kappa = 0.0;
  double gamma = 0.0;
  double alpha_H = 0.0;
};

/// Raised for fields outside their declared ranges.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when kappa <= 0: the mollified functionals do not converge there.
class InadmissibleParameters : public std::domain_error {
 public:
  explicit InadmissibleParameters(double kappa);
  double kappa() const noexcept { return kappa_; }

 private:
  double kappa_;
};

// Pure arithmetic, no range checks.
double kappa(const ModelParams& p);
double alpha_H(const ModelParams& p);

/// Checks ranges, then admissibility. Throws ConfigError or
/// InadmissibleParameters.
DerivedConstants validate(const ModelParams& p);

/// A ModelParams that passed validate(), with the derived constants and the
/// kernel exponents cached for the inner loops.
class Model {
 public:
  explicit Model(ModelParams p);

  const ModelParams& params() const noexcept { return params_; }
  const DerivedConstants& derived() const noexcept { return derived_; }

  double alpha() const noexcept { return params_.alpha; }
  int dim() const noexcept { return params_.dim; }
  double horizon() const noexcept { return params_.horizon; }
  std::span<const double> base_point() const noexcept { return params_.base_point; }
  /// (H0, H1, ..., Hd).
  std::span<const double> hurst() const noexcept { return params_.hurst; }
  double kappa() const noexcept { return derived_.kappa; }
  double gamma() const noexcept { return derived_.gamma; }
  double alpha_H() const noexcept { return derived_.alpha_H; }

  /// 2H0 - 2, the exponent of the time kernel.
  double time_exponent() const noexcept { return time_exponent_; }
  /// 2H_i - 2 for i = 1..d.
  std::span<const double> space_exponents() const noexcept { return space_exponents_; }
  /// sum_i (2H_i - 2) / alpha; kappa - 1 = time_exponent() + this.
  double space_scaling() const noexcept { return space_scaling_; }

  /// Copy with a different horizon / base point (re-validated).
  Model with_horizon(double t) const;
  Model with_base_point(std::vector<double> x) const;

 private:
  ModelParams params_;
  DerivedConstants derived_;
  double time_exponent_ = 0.0;
  std::vector<double> space_exponents_;
  double space_scaling_ = 0.0;
};

}  // namespace fracheat
