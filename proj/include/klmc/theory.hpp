// Closed-form contraction/bias/complexity calculators: parameter validity
// conditions, the exact contraction coefficient c = inf p1 - sqrt(p2 p3)
// over the scaled spectrum, its linear minorant, asymptotic-bias bounds
// with regime special cases, the phase-transition critical point, and the
// iteration-complexity planner. Everything here is a pure function.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "klmc/model.hpp"
#include "json.hpp"

namespace klmc::theory {

// Coefficients of the quadratics p1, p2, p3 at a fixed zeta:
//   p1(r) = -a1 r^2 + b1 r + e1
//   p2(r) =  a1 r^2 + b2 r + e2
//   p3(r) =  a1 r^2 + b3 r + e3
// The constant terms satisfy e1^2 = e2*e3, so p1(0) = sqrt(p2(0) p3(0)).
struct PolyCoeffs {
  double a1, b1, e1, b2, e2, b3, e3;
};

PolyCoeffs poly_coeffs(double zeta);

double p1(double r, const PolyCoeffs& c);
double p2(double r, const PolyCoeffs& c);
double p3(double r, const PolyCoeffs& c);
double p1(double r, double zeta);
double p2(double r, double zeta);
double p3(double r, double zeta);

// Left root of the quadratic c -> chi_{AC-B^2}; positive exactly on
// (0, r_max(zeta)). Below r = 1e-3 the difference p1 - sqrt(p2 p3) is
// evaluated through (p1^2 - p2 p3)/(p1 + sqrt(p2 p3)) with the factored
// numerator, which is cancellation-free.
double c_minus(double r, double zeta);

// Factored numerator p1^2 - p2 p3 = 2 zeta (1-delta^2) r - q(zeta) r^2.
double c_minus_numerator(double r, double zeta);

double r_max(double zeta);
double r_lin(double zeta);

// eta*(2/3 * h/(gamma(1-delta^2)) + 3/2 * 1/gamma^2) <= 1/beta, evaluated
// exactly as stated.
bool check_condition_general(const KlmcParams& params, const ConvexityProfile& profile);

// eta*(2 h/(gamma(1-delta)) + 6/gamma^2) < 1/beta, strict.
bool check_condition_linear(const KlmcParams& params, const ConvexityProfile& profile);

struct ContractionReport {
  bool condition_general_ok = false;
  bool condition_linear_ok = false;
  std::optional<double> c_exact;
  std::optional<double> c_linear;
  std::optional<double> argmin_r;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double r_max = 0.0;
  double r_lin = 0.0;
  std::string reason;  // set when c_exact is absent
};

// Minimizes c_minus over the spectrum image [eta*alpha/gamma^2, eta*beta/gamma^2]
// by a 4096-point grid plus golden-section refinement; endpoints are always
// candidates. c_exact is absent when the general condition fails.
ContractionReport contraction_exact(const KlmcParams& params, const ConvexityProfile& profile);

// h*eta*alpha/gamma. Throws condition_violation unless Assumption 2 holds.
double contraction_linear(const KlmcParams& params, const ConvexityProfile& profile);

// zeta-dependent factors of the bias bounds:
//   f_pos = zeta^2 - 3 + e^{-2 zeta} (3 + 6 zeta + 5 zeta^2 + 2 zeta^3), in (0, zeta^2)
//   f_mom = 1 - e^{-2 zeta} (1 + 2 zeta + 2 zeta^2), in (0, 1)
// Both switch to exact series below their seams (0.25 and 0.1) where the
// direct form cancels catastrophically.
double f_pos(double zeta);
double f_mom(double zeta);

// General bias bounds and regime special cases, as plain formula values.
// Total in (params, profile, d); validity of the *bound* additionally needs
// Assumption 2, which bias_bounds enforces.
struct BiasTerms {
  double e_pos;
  double e_mom;
  double e_pos_under_stated;  // (4/15)   * sqrt(d) kappa eta^{1/2} gamma h^2
  double e_pos_under_proof;   // sqrt(4/15) * same factor (from f_pos <= 8/15 zeta^5)
  double e_mom_under;         // (4/sqrt(3)) sqrt(d) kappa eta^{1/2} h
  double e_pos_over;          // (1/sqrt(2)) sqrt(d) kappa eta^{1/2} sqrt(h/gamma)
  double e_mom_over;          // 4 sqrt(d) kappa eta^{1/2} / (h^{1/2} gamma^{3/2})
};

BiasTerms bias_terms(const KlmcParams& params, const ConvexityProfile& profile, std::size_t d);

struct BiasReport {
  double e_pos;
  double e_mom;
  double e_pos_under_stated;
  double e_pos_under_proof;
  double e_mom_under;
  double e_pos_over;
  double e_mom_over;
  double zeta_critical;
  std::string regime;  // "underdamped" iff zeta < zeta_critical
};

// Throws condition_violation when Assumption 2 fails.
BiasReport bias_bounds(const KlmcParams& params, const ConvexityProfile& profile, std::size_t d);

// Root of (2z+1)(2z^2+1) = e^{2z} on (0, inf); ~1.6918. Computed once.
double critical_zeta();

struct ComplexityPlan {
  double epsilon;
  double h_star;
  std::uint64_t n_star;
  double w0;
  // echoed inputs
  double alpha, beta, gamma, eta, h0;
  std::uint64_t d;
  bool h_capped_at_h0;
  bool h0_gamma_term_binding;  // the dimensionally-odd h0*gamma entry won the max
  // plugged-back bias bound at (h_star, gamma, eta)
  double plugback_e_pos;
  double plugback_e_mom;
};

// Step size and iteration count guaranteeing W_{a,b}(mu K^n, pi) <= epsilon,
// given a caller-supplied upper bound w0 on W_{a,b}(mu, pi_h). Throws
// condition_violation if Assumption 2 fails at h0.
ComplexityPlan complexity_plan(const ConvexityProfile& profile, std::uint64_t d, double epsilon,
                               double gamma, double eta, double h0, double w0);

nlohmann::json to_json(const ContractionReport& report);
nlohmann::json to_json(const BiasReport& report);
nlohmann::json to_json(const ComplexityPlan& plan);

}  // namespace klmc::theory
