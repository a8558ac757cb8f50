// Serial reference implementations kept for testing: they recompute what the
// library computes through deliberately different expression paths (direct
// per-step coefficient formulas, two-pass moments, fixed-point Lyapunov
// iteration) and are compared against the production code in the test and
// benchmark targets.
#pragma once

#include <cstdint>
#include <vector>

#include "klmc/integrator.hpp"
#include "klmc/model.hpp"
#include "klmc/oracle.hpp"

namespace klmc::reference {

// One deterministic+noise step evaluated from scratch each call; the
// gradient coefficient uses h/gamma - (1-delta)/gamma^2 instead of the
// kernel's (zeta+delta-1)/gamma^2 form.
PhaseState step_direct(const KlmcParams& params, const Potential& potential,
                       const PhaseState& state, std::span<const double> n1,
                       std::span<const double> n2);

// Plain two-pass mean/covariance over stored samples.
struct TwoPassMoments {
  std::vector<double> mean_x, mean_v, cov_xx, cov_vv, cov_xv;
};

TwoPassMoments two_pass_moments(const std::vector<PhaseState>& samples);

// Sigma_{k+1} = S Sigma_k S^T + Q from Sigma_0 = 0.
oracle::SymMat2 lyapunov_fixed_point(const KlmcParams& params, double lambda,
                                     std::uint64_t iterations);

// Same contract as run_chains but a plain serial loop; bit-identical to the
// parallel runner by construction.
std::vector<RunResult> run_chains_serial(const Kernel& kernel, const PhaseState& init,
                                         std::uint64_t n_steps, std::uint64_t n_chains,
                                         std::uint64_t seed, std::uint64_t first_stream_id,
                                         const RunOptions& options = {});

}  // namespace klmc::reference
