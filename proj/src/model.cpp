#include "klmc/model.hpp"

namespace klmc {

DerivedParams derive(const KlmcParams& params) {
  double zeta = params.h * params.gamma;
  return {zeta, std::exp(-zeta), params.eta / (params.gamma * params.gamma)};
}

WeightedNorm norm_for(double gamma) {
  if (!(std::isfinite(gamma) && gamma > 0.0)) {
    throw std::invalid_argument("norm_for: gamma must be finite and > 0");
  }
  double b = 1.0 / gamma;
  return {4.0 * b * b, b};  // a = 4/gamma^2 with 4b^2 = a exact
}

double weighted_norm_sq(const WeightedNorm& norm, std::span<const double> x,
                        std::span<const double> v) {
  if (x.size() != v.size()) {
    throw std::invalid_argument("weighted_norm_sq: dimension mismatch between x and v");
  }
  double xx = 0.0, xv = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx += x[i] * x[i];
    xv += x[i] * v[i];
    vv += v[i] * v[i];
  }
  return xx + 2.0 * norm.b * xv + norm.a * vv;
}

}  // namespace klmc
