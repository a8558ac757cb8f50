// Core value types: discretization parameters, convexity profile, weighted
// phase-space norm and phase states. All types are immutable value objects
// after construction and safe to share across threads.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "klmc/numerics.hpp"

namespace klmc {

// Raised when a parameter-validity condition (Assumption 2 or the general
// contraction condition) is required but does not hold.
struct condition_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a chain or accumulator produces non-finite values.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Discretization triple (h, gamma, eta). The kernel touches h only through
// zeta = h * gamma.
struct KlmcParams {
  double h;
  double gamma;
  double eta;

  KlmcParams(double h_, double gamma_, double eta_) : h(h_), gamma(gamma_), eta(eta_) {
    if (!(std::isfinite(h) && h > 0.0) || !(std::isfinite(gamma) && gamma > 0.0) ||
        !(std::isfinite(eta) && eta > 0.0)) {
      throw std::invalid_argument("KlmcParams: h, gamma, eta must be finite and > 0");
    }
  }

  double zeta() const { return h * gamma; }
  double delta() const { return std::exp(-zeta()); }
};

// Derived quantities of a parameter triple. r_of maps a Hessian eigenvalue
// onto the scaled spectrum R(lambda) = eta*lambda/gamma^2.
struct DerivedParams {
  double zeta;
  double delta;
  double grad_scale;  // eta / gamma^2

  double r_of(double lambda) const { return grad_scale * lambda; }
};

DerivedParams derive(const KlmcParams& params);

// Strong-convexity / smoothness window of the potential Hessian.
struct ConvexityProfile {
  double alpha;
  double beta;

  ConvexityProfile(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
    if (!(std::isfinite(alpha) && alpha > 0.0) || !(std::isfinite(beta) && beta >= alpha)) {
      throw std::invalid_argument("ConvexityProfile: need 0 < alpha <= beta");
    }
  }

  double kappa() const { return beta / alpha; }
};

// Coefficients (a, b) of the weighted norm |z|^2_{a,b} = |x|^2 + 2b<x,v> + a|v|^2.
// The constructor enforces the stronger condition 4b^2 <= a, which gives the
// explicit equivalence with the Euclidean norm.
struct WeightedNorm {
  double a;
  double b;

  WeightedNorm(double a_, double b_) : a(a_), b(b_) {
    if (!(std::isfinite(a) && a > 0.0) || !(std::isfinite(b) && b >= 0.0) || 4.0 * b * b > a) {
      throw std::invalid_argument("WeightedNorm: need a > 0, b >= 0 and 4b^2 <= a");
    }
  }
};

// Norm used throughout the contraction analysis: a = 4/gamma^2, b = 1/gamma.
WeightedNorm norm_for(double gamma);

// Position/momentum pair in R^d.
struct PhaseState {
  std::vector<double> x;
  std::vector<double> v;

  PhaseState() = default;
  PhaseState(std::vector<double> x_, std::vector<double> v_)
      : x(std::move(x_)), v(std::move(v_)) {
    if (x.size() != v.size() || x.empty()) {
      throw std::invalid_argument("PhaseState: x and v must have equal dimension >= 1");
    }
  }

  std::size_t dim() const { return x.size(); }
  bool finite() const { return all_finite(x) && all_finite(v); }
};

double weighted_norm_sq(const WeightedNorm& norm, std::span<const double> x,
                        std::span<const double> v);

inline double weighted_norm_sq(const WeightedNorm& norm, const PhaseState& z) {
  return weighted_norm_sq(norm, z.x, z.v);
}

// Gradient oracle with known Hessian window.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual std::size_t dim() const = 0;
  virtual void grad(std::span<const double> x, std::span<double> out) const = 0;
  virtual ConvexityProfile profile() const = 0;
};

}  // namespace klmc
