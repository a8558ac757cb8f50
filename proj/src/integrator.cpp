#include "klmc/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "klmc/numerics.hpp"

namespace klmc {

namespace {

// zeta - 2(1-delta) + (1-delta^2)/2 = zeta^3/3 - zeta^4/4 + ...; the direct
// form cancels three O(zeta) terms, so below the seam the exact series
// sum_{n>=3} (-1)^n (2 - 2^{n-1}) zeta^n / n! is used instead.
double sigma_xx_factor(double zeta) {
  if (zeta < 0.05) {
    double q = -zeta * zeta * zeta / 6.0;  // (-zeta)^n / n! at n = 3
    double pow2 = 4.0;                     // 2^{n-1}
    double sum = 0.0;
    for (int n = 3; n < 60; ++n) {
      sum += q * (2.0 - pow2);
      q *= -zeta / (n + 1);
      pow2 *= 2.0;
      if (std::abs(q) * pow2 < std::numeric_limits<double>::epsilon() * sum) break;
    }
    return sum;
  }
  return zeta - 2.0 * one_minus_exp(zeta) + 0.5 * one_minus_exp2(zeta);
}

void step_into(const Kernel& kernel, std::span<const double> x, std::span<const double> v,
               std::span<const double> n1, std::span<const double> n2,
               std::span<const double> grad, std::span<double> out_x,
               std::span<double> out_v) {
  const double c_xv = kernel.c_xv, c_xg = kernel.c_xg, c_vv = kernel.c_vv, c_vg = kernel.c_vg;
  const double l11 = kernel.cov.l11, l21 = kernel.cov.l21, l22 = kernel.cov.l22;
  const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (d >= 16384)
  for (std::ptrdiff_t i = 0; i < d; ++i) {
    double g = grad[i];
    out_x[i] = x[i] + c_xv * v[i] - c_xg * g + l11 * n1[i];
    out_v[i] = c_vv * v[i] - c_vg * g + l21 * n1[i] + l22 * n2[i];
  }
}

}  // namespace

NoiseCovariance noise_covariance(const KlmcParams& params) {
  double zeta = params.zeta();
  double om = one_minus_exp(zeta);
  double om2 = one_minus_exp2(zeta);
  NoiseCovariance cov;
  cov.sxx2 = 2.0 * params.eta / (params.gamma * params.gamma) * sigma_xx_factor(zeta);
  cov.sxv2 = params.eta / params.gamma * om * om;
  cov.svv2 = params.eta * om2;
  if (!(cov.sxx2 > 0.0) || !(cov.svv2 > 0.0)) {
    throw numeric_error("noise_covariance: degenerate step, variance underflowed to 0");
  }
  cov.l11 = std::sqrt(cov.sxx2);
  cov.l21 = cov.sxv2 / cov.l11;
  double rem = cov.svv2 - cov.l21 * cov.l21;
  if (!(rem > 0.0)) {
    throw numeric_error("noise_covariance: degenerate step, factor not positive definite");
  }
  cov.l22 = std::sqrt(rem);
  return cov;
}

Kernel::Kernel(KlmcParams params_, std::shared_ptr<const Potential> potential_)
    : params(params_), potential(std::move(potential_)), cov(noise_covariance(params_)) {
  if (!potential) throw std::invalid_argument("Kernel: null potential");
  double zeta = params.zeta();
  c_xv = one_minus_exp(zeta) / params.gamma;
  c_xg = params.eta * zeta_plus_delta_minus_one(zeta) / (params.gamma * params.gamma);
  c_vv = std::exp(-zeta);
  c_vg = params.eta * one_minus_exp(zeta) / params.gamma;
}

PhaseState step(const Kernel& kernel, const PhaseState& state, std::span<const double> n1,
                std::span<const double> n2) {
  std::size_t d = kernel.dim();
  if (state.dim() != d || n1.size() != d || n2.size() != d) {
    throw std::invalid_argument("step: dimension mismatch");
  }
  std::vector<double> grad(d);
  kernel.potential->grad(state.x, grad);
  if (!all_finite(grad)) throw numeric_error("step: non-finite gradient (poisoned state)");
  PhaseState out;
  out.x.resize(d);
  out.v.resize(d);
  step_into(kernel, state.x, state.v, n1, n2, grad, out.x, out.v);
  return out;
}

PhaseState step(const Kernel& kernel, const PhaseState& state, GaussianStream& stream) {
  std::size_t d = kernel.dim();
  std::vector<double> n1(d), n2(d);
  stream.fill_normal(n1);
  stream.fill_normal(n2);
  return step(kernel, state, n1, n2);
}

std::pair<PhaseState, PhaseState> coupled_step(const Kernel& kernel, const PhaseState& s1,
                                               const PhaseState& s2, GaussianStream& stream) {
  if (s1.dim() != s2.dim()) throw std::invalid_argument("coupled_step: dimension mismatch");
  std::size_t d = kernel.dim();
  std::vector<double> n1(d), n2(d);
  stream.fill_normal(n1);
  stream.fill_normal(n2);
  return {step(kernel, s1, n1, n2), step(kernel, s2, n1, n2)};
}

RunningMoments::RunningMoments(std::size_t dim)
    : mean_x_(dim, 0.0), mean_v_(dim, 0.0), m2_x_(dim, 0.0), m2_v_(dim, 0.0), cxv_(dim, 0.0) {}

void RunningMoments::accumulate(const PhaseState& z, std::uint64_t step_index) {
  if (z.dim() != mean_x_.size()) throw std::invalid_argument("RunningMoments: dimension mismatch");
  ++n_;
  double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < mean_x_.size(); ++i) {
    double dx = z.x[i] - mean_x_[i];
    double dv = z.v[i] - mean_v_[i];
    mean_x_[i] += dx * inv_n;
    mean_v_[i] += dv * inv_n;
    m2_x_[i] += dx * (z.x[i] - mean_x_[i]);
    m2_v_[i] += dv * (z.v[i] - mean_v_[i]);
    cxv_[i] += dx * (z.v[i] - mean_v_[i]);
    if (!std::isfinite(m2_x_[i]) || !std::isfinite(m2_v_[i])) {
      throw numeric_error("RunningMoments: overflow at step " + std::to_string(step_index));
    }
  }
}

std::uint64_t default_burn_in(const Kernel& kernel) {
  double alpha = kernel.potential->profile().alpha;
  double relax = kernel.params.gamma / (kernel.params.h * kernel.params.eta * alpha);
  return 10 * static_cast<std::uint64_t>(std::ceil(relax));
}

RunResult run_chain(const Kernel& kernel, const PhaseState& init, std::uint64_t n_steps,
                    const RngStream& stream, const RunOptions& options) {
  if (n_steps < 1) throw std::invalid_argument("run_chain: n_steps must be >= 1");
  std::size_t d = kernel.dim();
  if (init.dim() != d) throw std::invalid_argument("run_chain: dimension mismatch");

  std::uint64_t burn = options.burn_in.value_or(default_burn_in(kernel));
  GaussianStream rng(stream);
  RunResult result{init, RunningMoments(d), {}, burn};

  std::vector<double> n1(d), n2(d), grad(d), nx(d), nv(d);
  std::vector<double>& x = result.final_state.x;
  std::vector<double>& v = result.final_state.v;

  for (std::uint64_t k = 0; k < burn + n_steps; ++k) {
    rng.fill_normal(n1);
    rng.fill_normal(n2);
    kernel.potential->grad(x, grad);
    if (!all_finite(grad)) {
      throw numeric_error("run_chain: non-finite gradient at step " + std::to_string(k));
    }
    step_into(kernel, x, v, n1, n2, grad, nx, nv);
    x.swap(nx);
    v.swap(nv);
    if (k >= burn) {
      result.moments.accumulate(result.final_state, k);
      if (options.thin > 0 && (k - burn + 1) % options.thin == 0) {
        result.trajectory.push_back({k + 1, x, v});
      }
    }
  }
  return result;
}

std::vector<RunResult> run_chains(const Kernel& kernel, const PhaseState& init,
                                  std::uint64_t n_steps, std::uint64_t n_chains,
                                  std::uint64_t seed, std::uint64_t first_stream_id,
                                  const RunOptions& options, int threads) {
  std::vector<RunResult> results(n_chains, RunResult{init, RunningMoments(init.dim()), {}, 0});
  std::vector<std::exception_ptr> errors(n_chains);
#ifdef _OPENMP
  int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_chains); ++i) {
    try {
      results[i] = run_chain(kernel, init, n_steps,
                             RngStream{seed, first_stream_id + static_cast<std::uint64_t>(i)},
                             options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return results;
}

CouplingDecay coupling_decay(const Kernel& kernel, const PhaseState& init1,
                             const PhaseState& init2, std::uint64_t n_steps,
                             const RngStream& stream) {
  if (init1.dim() != init2.dim() || init1.dim() != kernel.dim()) {
    throw std::invalid_argument("coupling_decay: dimension mismatch");
  }
  WeightedNorm norm = norm_for(kernel.params.gamma);
  std::size_t d = kernel.dim();
  GaussianStream rng(stream);
  std::vector<double> n1(d), n2(d), grad1(d), grad2(d), dx(d), dv(d);

  PhaseState z1 = init1, z2 = init2;
  PhaseState t1 = init1, t2 = init2;

  CouplingDecay out;
  out.truncated = false;
  out.norm_sq.reserve(n_steps + 1);

  auto diff_norm_sq = [&] {
    for (std::size_t i = 0; i < d; ++i) {
      dx[i] = z1.x[i] - z2.x[i];
      dv[i] = z1.v[i] - z2.v[i];
    }
    return weighted_norm_sq(norm, dx, dv);
  };

  out.norm_sq.push_back(diff_norm_sq());
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    rng.fill_normal(n1);
    rng.fill_normal(n2);
    kernel.potential->grad(z1.x, grad1);
    kernel.potential->grad(z2.x, grad2);
    if (!all_finite(grad1) || !all_finite(grad2)) {
      throw numeric_error("coupling_decay: non-finite gradient at step " + std::to_string(k));
    }
    step_into(kernel, z1.x, z1.v, n1, n2, grad1, t1.x, t1.v);
    step_into(kernel, z2.x, z2.v, n1, n2, grad2, t2.x, t2.v);
    std::swap(z1, t1);
    std::swap(z2, t2);
    double w = diff_norm_sq();
    if (w < 1e-300 && out.norm_sq.front() > 0.0) {
      out.truncated = true;
      break;
    }
    out.norm_sq.push_back(w);
  }

  // fitted per-step log decay over the strictly positive tail
  std::vector<double> ks, logs;
  for (std::size_t k = 0; k < out.norm_sq.size(); ++k) {
    if (out.norm_sq[k] > 0.0) {
      ks.push_back(static_cast<double>(k));
      logs.push_back(std::log(out.norm_sq[k]));
    }
  }
  out.log_decay_rate = ks.size() >= 2 ? fit_slope(ks, logs) : 0.0;
  return out;
}

}  // namespace klmc
