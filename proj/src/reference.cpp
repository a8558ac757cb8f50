#include "klmc/reference.hpp"

#include <cmath>

namespace klmc::reference {

PhaseState step_direct(const KlmcParams& params, const Potential& potential,
                       const PhaseState& state, std::span<const double> n1,
                       std::span<const double> n2) {
  std::size_t d = potential.dim();
  double gamma = params.gamma;
  double delta = std::exp(-params.h * gamma);
  // gradient coefficient written as h/gamma - (1-delta)/gamma^2 instead of
  // the kernel's (zeta+delta-1)/gamma^2
  double c_xv = (1.0 - delta) / gamma;
  double c_xg = params.eta * (params.h / gamma - (1.0 - delta) / (gamma * gamma));
  double c_vg = params.eta * (1.0 - delta) / gamma;

  double sxx2 = 2.0 * params.eta / gamma *
                (params.h - 2.0 * (1.0 - delta) / gamma + (1.0 - delta * delta) / (2.0 * gamma));
  double sxv2 = params.eta / gamma * (1.0 - delta) * (1.0 - delta);
  double svv2 = params.eta * (1.0 - delta * delta);
  double l11 = std::sqrt(sxx2);
  double l21 = sxv2 / l11;
  double l22 = std::sqrt(svv2 - l21 * l21);

  std::vector<double> grad(d);
  potential.grad(state.x, grad);
  PhaseState out;
  out.x.resize(d);
  out.v.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.x[i] = state.x[i] + c_xv * state.v[i] - c_xg * grad[i] + l11 * n1[i];
    out.v[i] = delta * state.v[i] - c_vg * grad[i] + l21 * n1[i] + l22 * n2[i];
  }
  return out;
}

TwoPassMoments two_pass_moments(const std::vector<PhaseState>& samples) {
  if (samples.empty()) throw std::invalid_argument("two_pass_moments: no samples");
  std::size_t d = samples.front().dim();
  TwoPassMoments m;
  m.mean_x.assign(d, 0.0);
  m.mean_v.assign(d, 0.0);
  m.cov_xx.assign(d, 0.0);
  m.cov_vv.assign(d, 0.0);
  m.cov_xv.assign(d, 0.0);
  double n = static_cast<double>(samples.size());
  for (const PhaseState& z : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      m.mean_x[i] += z.x[i] / n;
      m.mean_v[i] += z.v[i] / n;
    }
  }
  for (const PhaseState& z : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      double dx = z.x[i] - m.mean_x[i];
      double dv = z.v[i] - m.mean_v[i];
      m.cov_xx[i] += dx * dx / n;
      m.cov_vv[i] += dv * dv / n;
      m.cov_xv[i] += dx * dv / n;
    }
  }
  return m;
}

oracle::SymMat2 lyapunov_fixed_point(const KlmcParams& params, double lambda,
                                     std::uint64_t iterations) {
  oracle::ModeSystem mode = oracle::mode_system(params, lambda);
  const oracle::Mat2& s = mode.s;
  oracle::SymMat2 sigma{0.0, 0.0, 0.0};
  for (std::uint64_t k = 0; k < iterations; ++k) {
    double xx = s.m00 * s.m00 * sigma.xx + 2.0 * s.m00 * s.m01 * sigma.xv +
                s.m01 * s.m01 * sigma.vv + mode.q.xx;
    double xv = s.m00 * s.m10 * sigma.xx + (s.m00 * s.m11 + s.m01 * s.m10) * sigma.xv +
                s.m01 * s.m11 * sigma.vv + mode.q.xv;
    double vv = s.m10 * s.m10 * sigma.xx + 2.0 * s.m10 * s.m11 * sigma.xv +
                s.m11 * s.m11 * sigma.vv + mode.q.vv;
    sigma = {xx, xv, vv};
  }
  return sigma;
}

std::vector<RunResult> run_chains_serial(const Kernel& kernel, const PhaseState& init,
                                         std::uint64_t n_steps, std::uint64_t n_chains,
                                         std::uint64_t seed, std::uint64_t first_stream_id,
                                         const RunOptions& options) {
  std::vector<RunResult> results;
  results.reserve(n_chains);
  for (std::uint64_t i = 0; i < n_chains; ++i) {
    results.push_back(run_chain(kernel, init, n_steps, RngStream{seed, first_stream_id + i},
                                options));
  }
  return results;
}

}  // namespace klmc::reference
