// Exact analytics for quadratic (Gaussian) targets and numeric verification
// of the matrix/polynomial identities behind the contraction proof. These
// are the ground truth the integrator and theory calculators are tested
// against: per-mode 2x2 transition operators, discrete Lyapunov stationary
// covariances, closed-form weighted Wasserstein distances, and the sharp
// one-step contraction factor.
#pragma once

#include <cstddef>
#include <vector>

#include "klmc/integrator.hpp"
#include "klmc/model.hpp"

namespace klmc::oracle {

struct Mat2 {
  double m00, m01, m10, m11;

  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }
  Mat2 transpose() const { return {m00, m10, m01, m11}; }
  double det() const { return m00 * m11 - m01 * m10; }
  double trace() const { return m00 + m11; }
  double frobenius_sq() const { return m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11; }
};

// Symmetric 2x2 matrix over the (x, v) block of one mode.
struct SymMat2 {
  double xx, xv, vv;

  double det() const { return xx * vv - xv * xv; }
  double trace() const { return xx + vv; }
  Mat2 full() const { return {xx, xv, xv, vv}; }
};

// Spectral radius of a 2x2 matrix (handles complex eigenvalue pairs).
double spectral_radius(const Mat2& m);

// Principal square root of a PSD symmetric 2x2 matrix via the
// trace/determinant closed form.
SymMat2 sqrt_psd(const SymMat2& m);

// One diffusion mode: per-coordinate transition matrix S(lambda) and noise
// covariance Q for Hessian eigenvalue lambda.
struct ModeSystem {
  Mat2 s;
  SymMat2 q;
  double lambda;
};

// S(lambda) = [[1 - eta lambda (zeta+delta-1)/gamma^2, (1-delta)/gamma],
//              [-eta lambda (1-delta)/gamma,            delta          ]]
Mat2 transition_matrix(const KlmcParams& params, double lambda);

ModeSystem mode_system(const KlmcParams& params, double lambda);

// Block scalars of (1-c) G - S^T G S in the d=1 case, from the closed-form
// expressions, together with the max entrywise discrepancy against the
// directly assembled matrix.
struct BlockValues {
  double a, b, c_block;
  double residual;  // max |formula - direct| over the three entries
};

BlockValues block_matrices(const KlmcParams& params, double lambda, double c);

struct ChiValues {
  double chi_a;
  double chi_acmb2;
};

ChiValues chi_eval(double r, double zeta, double gamma, double c);

// Residuals of the symbolic-computation identities, each relative to the
// magnitude of the terms involved. Failures are reported, never clamped.
struct IdentityReport {
  double res_disc;        // disc(c -> chi_{AC-B^2}) vs p2*p3
  double res_p1_halfsum;  // half root sum of chi vs p1
  double res_cminus_num;  // p1^2 - p2 p3 vs factored numerator
  double res_p5;          // (p1-p4)^2 - p2 p3 vs p5 r^2
  double res_p5_disc;     // b5^2 - 4 a5 e5 vs 0
  double res_p6;          // (p1 - zeta r)^2 - p2 p3 vs p6 r
  double res_p7;          // p6(r_lin) numerator vs a7 zeta^4 + b7 zeta^2
  bool p6_at_rlin_nonneg;
  bool dp6_at_rlin_nonpos;
  bool a7_b7_positive;

  double max_residual() const;
  bool pass(double tol) const;
};

IdentityReport identity_suite(double r, double zeta);

// Solves Sigma = S Sigma S^T + Q by vectorizing the three free entries into
// a 3x3 system with partial pivoting. Throws if the spectral radius of S is
// >= 1 (no stationary law).
SymMat2 lyapunov_stationary(const KlmcParams& params, double lambda);

// Gaussian law on phase space, factored over modes of a diagonal quadratic
// target; multiplicities sum to the dimension d.
struct ModeLaw {
  double lambda;
  std::size_t multiplicity;
  double mean_x = 0.0;
  double mean_v = 0.0;
  SymMat2 cov;
};

using GaussianLaw = std::vector<ModeLaw>;

// Weighted Wasserstein-2 distance between two mode-factored Gaussian laws:
// both are pushed through the factor T (T^T T = G) and the per-mode Gaussian
// W2 closed form is summed with multiplicities.
double gaussian_w(const WeightedNorm& norm, const GaussianLaw& law1, const GaussianLaw& law2);

// Sharp one-step factor rho^2 = ||T S(lambda) T^{-1}||_2^2: the tightest
// ratio achievable by any difference vector in the weighted norm.
double exact_contraction_factor(const KlmcParams& params, double lambda,
                                const WeightedNorm& norm);

struct SpectrumMode {
  double lambda;
  std::size_t multiplicity;
};

// Exact W_{a,b}(pi_h, pi) on the quadratic target with the given spectrum,
// in the norm norm_for(gamma).
double exact_bias(const KlmcParams& params, const std::vector<SpectrumMode>& spectrum);

// pi_h per mode (stationary law of the discrete chain).
GaussianLaw discrete_stationary_law(const KlmcParams& params,
                                    const std::vector<SpectrumMode>& spectrum);

// pi per mode: N(0, diag(1/lambda, eta)).
GaussianLaw target_law(const KlmcParams& params, const std::vector<SpectrumMode>& spectrum);

}  // namespace klmc::oracle
