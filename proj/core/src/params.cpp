#include "fracheat/params.hpp"

#include <cmath>
#include <sstream>

namespace fracheat {

InadmissibleParameters::InadmissibleParameters(double kappa)
    : std::domain_error([kappa] {
        std::ostringstream os;
        os << "inadmissible parameters: kappa = " << kappa << " <= 0";
        return os.str();
      }()),
      kappa_(kappa) {}

double kappa(const ModelParams& p) {
  double sum = 0.0;
  for (std::size_t i = 1; i < p.hurst.size(); ++i) sum += 2.0 * p.hurst[i] - 2.0;
  return 2.0 * p.hurst.at(0) + sum / p.alpha - 1.0;
}

double alpha_H(const ModelParams& p) {
  double prod = 1.0;
  for (double h : p.hurst) prod *= h * (2.0 * h - 1.0);
  return prod;
}

DerivedConstants validate(const ModelParams& p) {
  if (!(p.alpha > 0.0 && p.alpha <= 2.0)) throw ConfigError("alpha must lie in (0, 2]");
  if (p.dim < 1) throw ConfigError("dim must be a positive integer");
  if (p.hurst.size() != static_cast<std::size_t>(p.dim) + 1)
    throw ConfigError("hurst must have dim + 1 entries (H0, H1, ..., Hd)");
  for (double h : p.hurst)
    if (!(h > 0.5 && h < 1.0)) throw ConfigError("every Hurst index must lie in (1/2, 1)");
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon))
    throw ConfigError("horizon must be a positive finite time");
  if (p.base_point.size() != static_cast<std::size_t>(p.dim))
    throw ConfigError("base_point must have dim entries");
  for (double x : p.base_point)
    if (!std::isfinite(x)) throw ConfigError("base_point entries must be finite");

  DerivedConstants c;
  c.kappa = kappa(p);
  // Strict: kappa == 0 is the boundary of the divergent regime.
  if (!(c.kappa > 0.0)) throw InadmissibleParameters(c.kappa);
  c.gamma = c.kappa + 1.0;
  c.alpha_H = alpha_H(p);
  return c;
}

Model::Model(ModelParams p) : params_(std::move(p)), derived_(validate(params_)) {
  time_exponent_ = 2.0 * params_.hurst[0] - 2.0;
  space_exponents_.reserve(params_.dim);
  double sum = 0.0;
  for (int i = 1; i <= params_.dim; ++i) {
    const double b = 2.0 * params_.hurst[i] - 2.0;
    space_exponents_.push_back(b);
    sum += b;
  }
  space_scaling_ = sum / params_.alpha;
}

Model Model::with_horizon(double t) const {
  ModelParams p = params_;
  p.horizon = t;
  return Model(std::move(p));
}

Model Model::with_base_point(std::vector<double> x) const {
  ModelParams p = params_;
  p.base_point = std::move(x);
  return Model(std::move(p));
}

}  // namespace fracheat
