// Stochastic exponential Euler kernel for the kinetic Langevin dynamics:
// per-step noise covariance with its Cholesky factor, single and
// synchronously-coupled steps, seeded chain runners with stable one-pass
// moments, and the coupled-difference decay experiment. Kernels are
// immutable and shareable; each chain owns its stream and state, so
// multi-chain runs parallelize without coordination.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "klmc/model.hpp"
#include "klmc/rng.hpp"

namespace klmc {

// Per-coordinate covariance of (xi^X, xi^V) and its lower-triangular factor:
//   sxx2 = (2 eta/gamma) (h - 2(1-delta)/gamma + (1-delta^2)/(2 gamma))
//   sxv2 = (eta/gamma) (1-delta)^2
//   svv2 = eta (1-delta^2)
struct NoiseCovariance {
  double sxx2, sxv2, svv2;
  double l11, l21, l22;
};

// Throws numeric_error when the variances underflow (degenerate step).
NoiseCovariance noise_covariance(const KlmcParams& params);

// Deterministic update coefficients:
//   X' = X + c_xv V - c_xg grad U(X) + xi^X
//   V' = c_vv V - c_vg grad U(X) + xi^V
struct Kernel {
  Kernel(KlmcParams params, std::shared_ptr<const Potential> potential);

  KlmcParams params;
  std::shared_ptr<const Potential> potential;
  NoiseCovariance cov;
  double c_xv;  // (1-delta)/gamma
  double c_xg;  // eta (zeta+delta-1)/gamma^2
  double c_vv;  // delta
  double c_vg;  // eta (1-delta)/gamma

  std::size_t dim() const { return potential->dim(); }
};

// One step with caller-provided standard normal draws n1, n2 (one pair per
// coordinate, mixed by the shared 2x2 factor L). Throws numeric_error on a
// non-finite gradient (poisoned state).
PhaseState step(const Kernel& kernel, const PhaseState& state, std::span<const double> n1,
                std::span<const double> n2);

// Convenience: draws the 2d normals from the stream (serially, so results
// do not depend on thread count), then applies the update.
PhaseState step(const Kernel& kernel, const PhaseState& state, GaussianStream& stream);

// Advances both states with identical noise; on a quadratic target the
// difference evolves as S(lambda) (z1 - z2) exactly.
std::pair<PhaseState, PhaseState> coupled_step(const Kernel& kernel, const PhaseState& s1,
                                               const PhaseState& s2, GaussianStream& stream);

// One-pass (Welford) first/second moments of (X, V) per coordinate.
class RunningMoments {
 public:
  explicit RunningMoments(std::size_t dim);

  void accumulate(const PhaseState& z, std::uint64_t step_index);

  std::uint64_t count() const { return n_; }
  std::size_t dim() const { return mean_x_.size(); }
  double mean_x(std::size_t i) const { return mean_x_[i]; }
  double mean_v(std::size_t i) const { return mean_v_[i]; }
  double cov_xx(std::size_t i) const { return n_ > 1 ? m2_x_[i] / static_cast<double>(n_) : 0.0; }
  double cov_vv(std::size_t i) const { return n_ > 1 ? m2_v_[i] / static_cast<double>(n_) : 0.0; }
  double cov_xv(std::size_t i) const { return n_ > 1 ? cxv_[i] / static_cast<double>(n_) : 0.0; }

 private:
  std::uint64_t n_ = 0;
  std::vector<double> mean_x_, mean_v_, m2_x_, m2_v_, cxv_;
};

struct RunOptions {
  std::optional<std::uint64_t> burn_in;  // default: 10 * ceil(gamma/(h eta alpha))
  std::uint64_t thin = 0;                // 0: no trajectory kept
};

struct ThinnedRow {
  std::uint64_t step;
  std::vector<double> x;
  std::vector<double> v;
};

struct RunResult {
  PhaseState final_state;
  RunningMoments moments;
  std::vector<ThinnedRow> trajectory;
  std::uint64_t burn_in = 0;
};

std::uint64_t default_burn_in(const Kernel& kernel);

// Deterministic given (init, stream). Moments accumulate after burn-in.
RunResult run_chain(const Kernel& kernel, const PhaseState& init, std::uint64_t n_steps,
                    const RngStream& stream, const RunOptions& options = {});

// Embarrassingly parallel multi-chain runner; chain i uses stream
// (seed, first_stream_id + i) and results are indexed by chain, so the
// output is identical for any number of threads.
std::vector<RunResult> run_chains(const Kernel& kernel, const PhaseState& init,
                                  std::uint64_t n_steps, std::uint64_t n_chains,
                                  std::uint64_t seed, std::uint64_t first_stream_id,
                                  const RunOptions& options = {}, int threads = 0);

struct CouplingDecay {
  std::vector<double> norm_sq;  // ||Z_k - Z_k'||^2_{a,b}, k = 0..n
  double log_decay_rate;        // fitted slope of log norm_sq per step
  bool truncated;               // series fell below 1e-300 and was cut
};

// Synchronous coupling decay in the gamma-adapted weighted norm.
CouplingDecay coupling_decay(const Kernel& kernel, const PhaseState& init1,
                             const PhaseState& init2, std::uint64_t n_steps,
                             const RngStream& stream);

}  // namespace klmc
