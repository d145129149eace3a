#pragma once

// Log-log regression and two-sample Kolmogorov-Smirnov.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracheat {

class RegressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordinary least squares of ordinates on abscissae (both already on log
/// scale).
struct SlopeFit {
  std::vector<double> abscissae;
  std::vector<double> ordinates;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double stderr_slope = 0.0;
};

/// Needs at least five finite points with distinct abscissae.
SlopeFit fit_slope(std::span<const double> x, std::span<const double> y);

/// Fits log y against log x. Throws RegressionError on a nonpositive value.
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0, n2 = 0;
};

/// Two-sample KS with the asymptotic Kolmogorov p-value at effective size
/// n1 n2 / (n1 + n2).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

/// sqrt(a^2 + b^2).
double pooled_se(double a, double b);

}  // namespace fracheat
