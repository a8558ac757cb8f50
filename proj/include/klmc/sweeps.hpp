// Verification sweep drivers: randomized admissible-instance sweeps for the
// contraction and bias sandwiches, the polynomial/matrix identity suites,
// Lyapunov solver checks, coupled-decay certificates, the long-run
// stationarity experiment, and the flagged-constant audit. Instances are
// generated deterministically from a seed; sweeps parallelize over instances
// with results merged by index, so output is identical for any thread count.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "klmc/model.hpp"

namespace klmc::sweeps {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One row of the verification CSV: (h, gamma, eta, lambda_or_alpha, beta,
// c_exact, rho_sq, e_pos, e_mom, exact_bias, pass_flags). Fields that a
// suite does not produce stay NaN and are emitted empty.
struct VerifyRow {
  double h = kNaN, gamma = kNaN, eta = kNaN;
  double lambda_or_alpha = kNaN, beta = kNaN;
  double c_exact = kNaN, rho_sq = kNaN;
  double e_pos = kNaN, e_mom = kNaN, exact_bias = kNaN;
  std::string pass_flags = "ok";
  bool pass = true;
};

struct SandwichResult {
  std::vector<VerifyRow> rows;
  double max_rho_excess = -1.0;  // max of rho_sq - (1 - c_exact); pass needs <= 1e-10
  double max_lin_excess = -1.0;  // max of c_linear - c_exact; pass needs <= 1e-10
  bool pass = true;
};

// Admissible (h, gamma, eta, lambda) draws (general condition holds by
// construction); checks rho^2 <= 1 - c_exact + 1e-10 and, when Assumption 2
// also holds, c_linear <= c_exact + 1e-10.
SandwichResult contraction_sandwich(std::size_t n, std::uint64_t seed, int threads = 0);

struct BiasSandwichResult {
  std::vector<VerifyRow> rows;
  double max_excess = -1.0;  // max of exact_bias - (e_pos + e_mom)
  bool pass = true;
};

// Assumption-2-admissible quadratic instances with mode multiplicities up to
// d = 1000; checks exact_bias <= e_pos + e_mom.
BiasSandwichResult bias_sandwich(std::size_t n, std::uint64_t seed, int threads = 0);

struct IdentitySweepResult {
  std::size_t n = 0;
  double max_residual = 0.0;
  bool sign_conditions_ok = true;
  bool pass = true;
};

// identity_suite over random (r, zeta) in (1e-3, 10)^2 at 1e-10 relative.
IdentitySweepResult identity_sweep(std::size_t n, std::uint64_t seed, int threads = 0);

// block_matrices formula-vs-direct residuals over random (params, lambda, c)
// at 1e-12.
IdentitySweepResult block_sweep(std::size_t n, std::uint64_t seed, int threads = 0);

struct LyapunovSweepResult {
  std::size_t n = 0;
  double max_solve_residual = 0.0;   // |Sigma - S Sigma S^T - Q|_max / |Sigma|_max
  double max_fixed_point_gap = 0.0;  // vs the fixed-point iteration oracle
  bool spectral_radii_ok = true;     // rho(S) < 1 on all admissible draws
  bool pass = true;
};

LyapunovSweepResult lyapunov_sweep(std::size_t n, std::uint64_t seed, int threads = 0);

struct CouplingResult {
  double worst_excess_quadratic = 0.0;  // max ratio - (1 - c_exact), quadratic target
  double worst_excess_logcosh = 0.0;    // max ratio - (1 - c_linear), log-cosh target
  std::uint64_t steps = 0;
  bool truncated = false;
  bool pass = true;
};

// Synchronous-coupling certificates on a d=10 anisotropic quadratic and the
// d=10 log-cosh-perturbed quadratic, 1e-12 slack.
CouplingResult coupling_experiment(std::uint64_t n_steps, std::uint64_t seed);

struct StationarityResult {
  double emp_xx = 0.0, emp_xv = 0.0, emp_vv = 0.0;
  double exact_xx = 0.0, exact_xv = 0.0, exact_vv = 0.0;
  double z_xx = 0.0, z_xv = 0.0, z_vv = 0.0;  // |emp - exact| / SE(batch means)
  bool pass = true;                           // all |z| <= 3
};

// Long chain on an isotropic Gaussian vs the Lyapunov covariance, batch-means
// standard errors pooled across coordinates.
StationarityResult stationarity_experiment(std::uint64_t n_steps, std::uint64_t seed);

struct ConstantAuditResult {
  std::size_t n = 0;
  bool stated_dominates = true;  // (4/15) gamma h^2 bound >= general e_pos everywhere
  bool proof_dominates = true;   // sqrt(4/15) version
  double worst_stated_ratio = 0.0;  // max e_pos / e_pos_under_stated
  double worst_proof_ratio = 0.0;
  bool pass = true;  // at least one constant dominates
};

// Small-zeta admissible sweep resolving which underdamped e_pos constant
// actually upper-bounds the general bound.
ConstantAuditResult constant_audit(std::size_t n, std::uint64_t seed, int threads = 0);

}  // namespace klmc::sweeps
