#include "klmc/sweeps.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "klmc/integrator.hpp"
#include "klmc/numerics.hpp"
#include "klmc/oracle.hpp"
#include "klmc/potentials.hpp"
#include "klmc/reference.hpp"
#include "klmc/rng.hpp"
#include "klmc/theory.hpp"

namespace klmc::sweeps {

namespace {

double log_uniform(GaussianStream& g, double lo, double hi) {
  return std::exp(std::log(lo) + g.next_uniform() * (std::log(hi) - std::log(lo)));
}

double uniform(GaussianStream& g, double lo, double hi) {
  return lo + g.next_uniform() * (hi - lo);
}

// Largest eta keeping the general contraction condition satisfied at
// (h, gamma, beta); scaling it by u < 1 yields admissible draws directly.
double eta_cap_general(double h, double gamma, double beta) {
  double om2 = one_minus_exp2(h * gamma);
  return (1.0 / beta) / ((2.0 / 3.0) * h / (gamma * om2) + 1.5 / (gamma * gamma));
}

double eta_cap_linear(double h, double gamma, double beta) {
  double om = one_minus_exp(h * gamma);
  return (1.0 / beta) / (2.0 * h / (gamma * om) + 6.0 / (gamma * gamma));
}

template <typename Body>
void parallel_for(std::size_t n, int threads, const Body& body) {
  std::vector<std::exception_ptr> errors(n);
#ifdef _OPENMP
  int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(nthreads)
#else
  (void)threads;
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace

SandwichResult contraction_sandwich(std::size_t n, std::uint64_t seed, int threads) {
  SandwichResult result;
  result.rows.resize(n);
  std::vector<double> rho_excess(n), lin_excess(n, -1.0);

  parallel_for(n, threads, [&](std::size_t i) {
    GaussianStream g(seed, 0xC0 + i);
    double h = log_uniform(g, 1e-2, 10.0);
    double gamma = log_uniform(g, 1e-2, 10.0);
    double beta = log_uniform(g, 1e-2, 1e2);
    double kappa = log_uniform(g, 1.0, 100.0);
    double alpha = beta / kappa;
    double eta = uniform(g, 0.05, 0.999) * eta_cap_general(h, gamma, beta);
    double lambda = log_uniform(g, alpha, beta);

    KlmcParams params(h, gamma, eta);
    ConvexityProfile profile(alpha, beta);
    theory::ContractionReport report = theory::contraction_exact(params, profile);
    double rho_sq = oracle::exact_contraction_factor(params, lambda, norm_for(gamma));

    VerifyRow& row = result.rows[i];
    row.h = h;
    row.gamma = gamma;
    row.eta = eta;
    row.lambda_or_alpha = lambda;
    row.beta = beta;
    row.c_exact = report.c_exact.value_or(kNaN);
    row.rho_sq = rho_sq;

    rho_excess[i] = rho_sq - (1.0 - report.c_exact.value());
    if (report.c_linear) lin_excess[i] = *report.c_linear - *report.c_exact;
    row.pass = rho_excess[i] <= 1e-10 && lin_excess[i] <= 1e-10;
    if (!row.pass) row.pass_flags = rho_excess[i] > 1e-10 ? "rho_exceeds" : "linear_exceeds";
  });

  for (std::size_t i = 0; i < n; ++i) {
    result.max_rho_excess = std::max(result.max_rho_excess, rho_excess[i]);
    result.max_lin_excess = std::max(result.max_lin_excess, lin_excess[i]);
    result.pass = result.pass && result.rows[i].pass;
  }
  return result;
}

BiasSandwichResult bias_sandwich(std::size_t n, std::uint64_t seed, int threads) {
  BiasSandwichResult result;
  result.rows.resize(n);
  std::vector<double> excess(n);

  parallel_for(n, threads, [&](std::size_t i) {
    GaussianStream g(seed, 0xB1A5 + i);
    double h = log_uniform(g, 1e-2, 10.0);
    double gamma = log_uniform(g, 1e-2, 10.0);
    double beta = log_uniform(g, 1e-2, 1e2);
    double kappa = log_uniform(g, 1.0, 100.0);
    double alpha = beta / kappa;
    double eta = uniform(g, 0.05, 0.995) * eta_cap_linear(h, gamma, beta);

    std::size_t d = static_cast<std::size_t>(log_uniform(g, 1.0, 1000.999));
    d = std::clamp<std::size_t>(d, 1, 1000);

    // spectrum spans [alpha, beta]; multiplicities partition d
    std::size_t n_modes = std::min<std::size_t>(1 + (g.next_u64() % 6), d);
    std::vector<oracle::SpectrumMode> spectrum(n_modes);
    std::size_t assigned = 0;
    for (std::size_t m = 0; m < n_modes; ++m) {
      double lambda = m == 0 ? alpha : (m == 1 ? beta : log_uniform(g, alpha, beta));
      std::size_t left = d - assigned - (n_modes - 1 - m);
      std::size_t mult = m + 1 == n_modes ? left : 1 + (g.next_u64() % left);
      spectrum[m] = {lambda, mult};
      assigned += mult;
    }

    KlmcParams params(h, gamma, eta);
    ConvexityProfile profile(alpha, beta);
    theory::BiasReport bias = theory::bias_bounds(params, profile, d);
    double exact = oracle::exact_bias(params, spectrum);

    VerifyRow& row = result.rows[i];
    row.h = h;
    row.gamma = gamma;
    row.eta = eta;
    row.lambda_or_alpha = alpha;
    row.beta = beta;
    row.e_pos = bias.e_pos;
    row.e_mom = bias.e_mom;
    row.exact_bias = exact;
    excess[i] = exact - (bias.e_pos + bias.e_mom);
    row.pass = excess[i] <= 0.0;
    if (!row.pass) row.pass_flags = "bias_exceeds_bound";
  });

  for (std::size_t i = 0; i < n; ++i) {
    result.max_excess = std::max(result.max_excess, excess[i]);
    result.pass = result.pass && result.rows[i].pass;
  }
  return result;
}

IdentitySweepResult identity_sweep(std::size_t n, std::uint64_t seed, int threads) {
  IdentitySweepResult result;
  result.n = n;
  std::vector<double> residuals(n);
  std::vector<char> flags(n, 1);

  parallel_for(n, threads, [&](std::size_t i) {
    GaussianStream g(seed, 0x1D + i);
    double r = log_uniform(g, 1e-3, 10.0);
    double zeta = log_uniform(g, 1e-3, 10.0);
    oracle::IdentityReport rep = oracle::identity_suite(r, zeta);
    residuals[i] = rep.max_residual();
    flags[i] = rep.p6_at_rlin_nonneg && rep.dp6_at_rlin_nonpos && rep.a7_b7_positive;
  });

  for (std::size_t i = 0; i < n; ++i) {
    result.max_residual = std::max(result.max_residual, residuals[i]);
    result.sign_conditions_ok = result.sign_conditions_ok && flags[i];
  }
  result.pass = result.max_residual <= 1e-10 && result.sign_conditions_ok;
  return result;
}

IdentitySweepResult block_sweep(std::size_t n, std::uint64_t seed, int threads) {
  IdentitySweepResult result;
  result.n = n;
  std::vector<double> residuals(n);

  parallel_for(n, threads, [&](std::size_t i) {
    GaussianStream g(seed, 0xB10C + i);
    KlmcParams params(log_uniform(g, 1e-2, 10.0), log_uniform(g, 1e-2, 10.0),
                      log_uniform(g, 1e-3, 10.0));
    double lambda = log_uniform(g, 1e-2, 1e2);
    double c = uniform(g, 1e-6, 0.999999);
    residuals[i] = oracle::block_matrices(params, lambda, c).residual;
  });

  for (double r : residuals) result.max_residual = std::max(result.max_residual, r);
  result.pass = result.max_residual <= 1e-12;
  return result;
}

LyapunovSweepResult lyapunov_sweep(std::size_t n, std::uint64_t seed, int threads) {
  LyapunovSweepResult result;
  result.n = n;
  std::vector<double> solve_res(n), fp_gap(n, 0.0);
  std::vector<char> radius_ok(n, 1);

  parallel_for(n, threads, [&](std::size_t i) {
    GaussianStream g(seed, 0x11AB + i);
    double h = log_uniform(g, 1e-2, 10.0);
    double gamma = log_uniform(g, 1e-2, 10.0);
    double beta = log_uniform(g, 1e-2, 1e2);
    double eta = uniform(g, 0.05, 0.999) * eta_cap_general(h, gamma, beta);
    double lambda = log_uniform(g, beta / 100.0, beta);

    KlmcParams params(h, gamma, eta);
    oracle::ModeSystem mode = oracle::mode_system(params, lambda);
    double radius = oracle::spectral_radius(mode.s);
    radius_ok[i] = radius < 1.0;
    if (!radius_ok[i]) return;

    oracle::SymMat2 sigma = oracle::lyapunov_stationary(params, lambda);
    const oracle::Mat2& s = mode.s;
    double rxx = sigma.xx - (s.m00 * s.m00 * sigma.xx + 2.0 * s.m00 * s.m01 * sigma.xv +
                             s.m01 * s.m01 * sigma.vv + mode.q.xx);
    double rxv = sigma.xv - (s.m00 * s.m10 * sigma.xx +
                             (s.m00 * s.m11 + s.m01 * s.m10) * sigma.xv +
                             s.m01 * s.m11 * sigma.vv + mode.q.xv);
    double rvv = sigma.vv - (s.m10 * s.m10 * sigma.xx + 2.0 * s.m10 * s.m11 * sigma.xv +
                             s.m11 * s.m11 * sigma.vv + mode.q.vv);
    double scale = std::max({std::abs(sigma.xx), std::abs(sigma.xv), std::abs(sigma.vv)});
    solve_res[i] = std::max({std::abs(rxx), std::abs(rxv), std::abs(rvv)}) / scale;

    double rho_sq = radius * radius;
    if (rho_sq <= 0.95) {
      std::uint64_t iters = std::clamp<std::uint64_t>(
          static_cast<std::uint64_t>(700.0 / -std::log10(rho_sq)), 100, 20000);
      oracle::SymMat2 fp = reference::lyapunov_fixed_point(params, lambda, iters);
      fp_gap[i] = std::max({std::abs(fp.xx - sigma.xx), std::abs(fp.xv - sigma.xv),
                            std::abs(fp.vv - sigma.vv)}) /
                  scale;
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    result.max_solve_residual = std::max(result.max_solve_residual, solve_res[i]);
    result.max_fixed_point_gap = std::max(result.max_fixed_point_gap, fp_gap[i]);
    result.spectral_radii_ok = result.spectral_radii_ok && radius_ok[i];
  }
  result.pass = result.spectral_radii_ok && result.max_solve_residual <= 1e-12 &&
                result.max_fixed_point_gap <= 1e-10;
  return result;
}

CouplingResult coupling_experiment(std::uint64_t n_steps, std::uint64_t seed) {
  CouplingResult result;
  result.steps = n_steps;
  KlmcParams params(0.1, std::sqrt(27.0 / 2.0), 0.2);

  auto random_state = [&](std::size_t d, std::uint64_t stream) {
    GaussianStream g(seed, stream);
    PhaseState z;
    z.x.resize(d);
    z.v.resize(d);
    g.fill_normal(z.x);
    g.fill_normal(z.v);
    return z;
  };

  auto worst_excess = [&](const Kernel& kernel, double bound_coeff, std::uint64_t stream) {
    PhaseState z1 = random_state(kernel.dim(), stream);
    PhaseState z2 = random_state(kernel.dim(), stream + 1);
    CouplingDecay decay = coupling_decay(kernel, z1, z2, n_steps, RngStream{seed, stream + 2});
    result.truncated = result.truncated || decay.truncated;
    double worst = -1.0;
    for (std::size_t k = 0; k + 1 < decay.norm_sq.size(); ++k) {
      if (decay.norm_sq[k] <= 0.0) break;
      double ratio = decay.norm_sq[k + 1] / decay.norm_sq[k];
      worst = std::max(worst, ratio - (1.0 - bound_coeff));
    }
    return worst;
  };

  // quadratic target: the exact coefficient applies
  {
    std::vector<double> spectrum(10);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      spectrum[i] = 1.0 + 1.5 * static_cast<double>(i) / 9.0;
    }
    auto target = std::make_shared<AnisotropicQuadratic>(spectrum);
    Kernel kernel(params, target);
    theory::ContractionReport report = theory::contraction_exact(params, target->profile());
    result.worst_excess_quadratic = worst_excess(kernel, report.c_exact.value(), 11);
  }
  // log-cosh target under Assumption 2: the linear coefficient applies
  {
    std::vector<double> spectrum(10);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      spectrum[i] = 1.0 + static_cast<double>(i) / 9.0;
    }
    auto target = std::make_shared<LogCoshQuadratic>(spectrum, 0.5);
    Kernel kernel(params, target);
    double c_lin = theory::contraction_linear(params, target->profile());
    result.worst_excess_logcosh = worst_excess(kernel, c_lin, 29);
  }

  result.pass = result.worst_excess_quadratic <= 1e-12 && result.worst_excess_logcosh <= 1e-12;
  return result;
}

StationarityResult stationarity_experiment(std::uint64_t n_steps, std::uint64_t seed) {
  constexpr std::size_t d = 4;
  KlmcParams params(0.4, 3.0, 0.5);
  auto target = std::make_shared<IsotropicQuadratic>(d, 1.0);
  Kernel kernel(params, target);
  oracle::SymMat2 sigma = oracle::lyapunov_stationary(params, 1.0);

  StationarityResult result;
  result.exact_xx = sigma.xx;
  result.exact_xv = sigma.xv;
  result.exact_vv = sigma.vv;

  GaussianStream rng(seed, 0x57A7);
  PhaseState z;
  z.x.assign(d, 0.0);
  z.v.assign(d, 0.0);
  std::vector<double> n1(d), n2(d), grad(d);

  std::uint64_t burn = 2000;
  std::uint64_t n_batches = 100;
  std::uint64_t batch_len = n_steps / n_batches;
  std::vector<double> bxx(n_batches, 0.0), bxv(n_batches, 0.0), bvv(n_batches, 0.0);

  for (std::uint64_t k = 0; k < burn + n_batches * batch_len; ++k) {
    rng.fill_normal(n1);
    rng.fill_normal(n2);
    PhaseState next = step(kernel, z, n1, n2);
    z = std::move(next);
    if (k < burn) continue;
    std::uint64_t b = (k - burn) / batch_len;
    for (std::size_t i = 0; i < d; ++i) {
      bxx[b] += z.x[i] * z.x[i];
      bxv[b] += z.x[i] * z.v[i];
      bvv[b] += z.v[i] * z.v[i];
    }
  }
  double per_batch = static_cast<double>(batch_len * d);
  for (std::uint64_t b = 0; b < n_batches; ++b) {
    bxx[b] /= per_batch;
    bxv[b] /= per_batch;
    bvv[b] /= per_batch;
  }

  auto mean_se = [&](const std::vector<double>& batches, double& mean, double& se) {
    mean = 0.0;
    for (double v : batches) mean += v;
    mean /= static_cast<double>(batches.size());
    double var = 0.0;
    for (double v : batches) var += (v - mean) * (v - mean);
    var /= static_cast<double>(batches.size() - 1);
    se = std::sqrt(var / static_cast<double>(batches.size()));
  };

  double se;
  mean_se(bxx, result.emp_xx, se);
  result.z_xx = std::abs(result.emp_xx - result.exact_xx) / se;
  mean_se(bxv, result.emp_xv, se);
  result.z_xv = std::abs(result.emp_xv - result.exact_xv) / se;
  mean_se(bvv, result.emp_vv, se);
  result.z_vv = std::abs(result.emp_vv - result.exact_vv) / se;
  result.pass = result.z_xx <= 3.0 && result.z_xv <= 3.0 && result.z_vv <= 3.0;
  return result;
}

ConstantAuditResult constant_audit(std::size_t n, std::uint64_t seed, int threads) {
  ConstantAuditResult result;
  result.n = n;
  std::vector<double> stated_ratio(n), proof_ratio(n);

  parallel_for(n, threads, [&](std::size_t i) {
    GaussianStream g(seed, 0xA0D17 + i);
    double zeta = log_uniform(g, 1e-4, 0.3);
    double gamma = log_uniform(g, 0.1, 10.0);
    double h = zeta / gamma;
    double beta = log_uniform(g, 0.1, 10.0);
    double kappa = log_uniform(g, 1.0, 100.0);
    double eta = uniform(g, 0.05, 0.995) * eta_cap_linear(h, gamma, beta);
    std::size_t d = 1 + (g.next_u64() % 1000);

    KlmcParams params(h, gamma, eta);
    ConvexityProfile profile(beta / kappa, beta);
    theory::BiasTerms terms = theory::bias_terms(params, profile, d);
    stated_ratio[i] = terms.e_pos / terms.e_pos_under_stated;
    proof_ratio[i] = terms.e_pos / terms.e_pos_under_proof;
  });

  for (std::size_t i = 0; i < n; ++i) {
    result.worst_stated_ratio = std::max(result.worst_stated_ratio, stated_ratio[i]);
    result.worst_proof_ratio = std::max(result.worst_proof_ratio, proof_ratio[i]);
  }
  result.stated_dominates = result.worst_stated_ratio <= 1.0 + 1e-12;
  result.proof_dominates = result.worst_proof_ratio <= 1.0 + 1e-12;
  result.pass = result.stated_dominates || result.proof_dominates;
  return result;
}

}  // namespace klmc::sweeps
