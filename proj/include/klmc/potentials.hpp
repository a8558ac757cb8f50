// Bundled test targets with exactly known Hessian windows: isotropic and
// anisotropic quadratics (Gaussian targets) and a log-cosh perturbed
// quadratic (non-Gaussian but strongly log-concave).
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "klmc/model.hpp"

namespace klmc {

// U(x) = (lambda/2) |x|^2.
class IsotropicQuadratic final : public Potential {
 public:
  IsotropicQuadratic(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda) {
    if (dim == 0 || !(lambda > 0.0)) {
      throw std::invalid_argument("IsotropicQuadratic: need dim >= 1, lambda > 0");
    }
  }

  std::size_t dim() const override { return dim_; }
  double lambda() const { return lambda_; }

  void grad(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = lambda_ * x[i];
  }

  ConvexityProfile profile() const override { return {lambda_, lambda_}; }

 private:
  std::size_t dim_;
  double lambda_;
};

// U(x) = sum_i (lambda_i/2) x_i^2 with a user-supplied spectrum.
class AnisotropicQuadratic final : public Potential {
 public:
  explicit AnisotropicQuadratic(std::vector<double> spectrum) : spectrum_(std::move(spectrum)) {
    if (spectrum_.empty()) throw std::invalid_argument("AnisotropicQuadratic: empty spectrum");
    for (double s : spectrum_) {
      if (!(s > 0.0)) throw std::invalid_argument("AnisotropicQuadratic: spectrum must be > 0");
    }
  }

  std::size_t dim() const override { return spectrum_.size(); }
  const std::vector<double>& spectrum() const { return spectrum_; }

  void grad(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < spectrum_.size(); ++i) out[i] = spectrum_[i] * x[i];
  }

  ConvexityProfile profile() const override {
    auto [lo, hi] = std::minmax_element(spectrum_.begin(), spectrum_.end());
    return {*lo, *hi};
  }

 private:
  std::vector<double> spectrum_;
};

// U(x) = sum_i (lambda_i/2) x_i^2 + s * sum_i log cosh(x_i).
// The Hessian is diagonal with entries lambda_i + s*sech^2(x_i), so the
// profile (min lambda, max lambda + s) is exact.
class LogCoshQuadratic final : public Potential {
 public:
  LogCoshQuadratic(std::vector<double> spectrum, double s)
      : spectrum_(std::move(spectrum)), s_(s) {
    if (spectrum_.empty() || !(s >= 0.0)) {
      throw std::invalid_argument("LogCoshQuadratic: empty spectrum or s < 0");
    }
    for (double v : spectrum_) {
      if (!(v > 0.0)) throw std::invalid_argument("LogCoshQuadratic: spectrum must be > 0");
    }
  }

  std::size_t dim() const override { return spectrum_.size(); }

  void grad(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < spectrum_.size(); ++i) {
      out[i] = spectrum_[i] * x[i] + s_ * std::tanh(x[i]);
    }
  }

  ConvexityProfile profile() const override {
    auto [lo, hi] = std::minmax_element(spectrum_.begin(), spectrum_.end());
    return {*lo, *hi + s_};
  }

 private:
  std::vector<double> spectrum_;
  double s_;
};

}  // namespace klmc
