#include <algorithm>
#include <cmath>
#include <memory>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "klmc/integrator.hpp"
#include "klmc/numerics.hpp"
#include "klmc/oracle.hpp"
#include "klmc/potentials.hpp"
#include "klmc/reference.hpp"
#include "klmc/sweeps.hpp"
#include "klmc/theory.hpp"

using namespace klmc;

namespace {

double log_uniform(GaussianStream& g, double lo, double hi) {
  return std::exp(std::log(lo) + g.next_uniform() * (std::log(hi) - std::log(lo)));
}

double eta_general(double h, double gamma, double beta, double u) {
  double om2 = one_minus_exp2(h * gamma);
  return u * (1.0 / beta) / ((2.0 / 3.0) * h / (gamma * om2) + 1.5 / (gamma * gamma));
}

// test-only gradient-free target for the free damped motion identity
class FreePotential final : public Potential {
 public:
  explicit FreePotential(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  void grad(std::span<const double>, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
  ConvexityProfile profile() const override { return {1.0, 1.0}; }

 private:
  std::size_t dim_;
};

}  // namespace

TEST_SUITE_BEGIN("integrator");

TEST_CASE("noise covariance: leading orders and pinned value") {
  // gamma = eta = 1, h -> 0: sxx2 ~ (2/3) h^3, sxv2 ~ h^2, svv2 ~ 2h
  double h = 1e-4;
  NoiseCovariance cov = noise_covariance(KlmcParams(h, 1.0, 1.0));
  CHECK(cov.sxx2 / (h * h * h) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
  CHECK(cov.sxv2 / (h * h) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cov.svv2 / h == doctest::Approx(2.0).epsilon(1e-3));

  CHECK(noise_covariance(KlmcParams(1.0, 1.0, 1.0)).svv2 ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-15));
}

TEST_CASE("noise covariance: positive definite with exact Cholesky factor") {
  GaussianStream g(51, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    KlmcParams params(log_uniform(g, 1e-4, 10.0), log_uniform(g, 1e-3, 10.0),
                      log_uniform(g, 1e-3, 10.0));
    NoiseCovariance cov = noise_covariance(params);
    CHECK(cov.sxx2 > 0.0);
    CHECK(cov.svv2 > 0.0);
    CHECK(cov.sxx2 * cov.svv2 - cov.sxv2 * cov.sxv2 > 0.0);
    // L L^T reconstruction
    double scale = std::max({cov.sxx2, std::abs(cov.sxv2), cov.svv2});
    CHECK(std::abs(cov.l11 * cov.l11 - cov.sxx2) <= 1e-14 * scale);
    CHECK(std::abs(cov.l11 * cov.l21 - cov.sxv2) <= 1e-14 * scale);
    CHECK(std::abs(cov.l21 * cov.l21 + cov.l22 * cov.l22 - cov.svv2) <= 1e-14 * scale);
  }
}

TEST_CASE("noise covariance: degenerate step raises") {
  CHECK_THROWS_AS(noise_covariance(KlmcParams(1e-300, 1e-8, 1e-8)), numeric_error);
}

TEST_CASE("noise covariance matches a fine-grid SDE substepping oracle") {
  // one seeded triple with moderate zeta; the noise pair is the zero-drift
  // solution started from the origin, simulated with 1e4 Euler substeps
  double h = 0.31, gamma = 2.1, eta = 0.8;
  NoiseCovariance cov = noise_covariance(KlmcParams(h, gamma, eta));

  constexpr int kDraws = 100000;
  constexpr int kSub = 10000;
  std::vector<double> xs(kDraws), vs(kDraws);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < kDraws; ++i) {
    GaussianStream g(99, 1000 + static_cast<std::uint64_t>(i));
    double dt = h / kSub;
    double diff = std::sqrt(2.0 * gamma * eta * dt);
    double x = 0.0, v = 0.0;
    for (int k = 0; k < kSub; ++k) {
      double vn = v - gamma * v * dt + diff * g.next_normal();
      x += v * dt;
      v = vn;
    }
    xs[i] = x;
    vs[i] = v;
  }
  double mxx = 0.0, mxv = 0.0, mvv = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    mxx += xs[i] * xs[i];
    mxv += xs[i] * vs[i];
    mvv += vs[i] * vs[i];
  }
  mxx /= kDraws;
  mxv /= kDraws;
  mvv /= kDraws;
  // standard errors of second moments of a Gaussian: Var(z^2) = 2 sigma^4,
  // Var(xv) = sxx svv + sxv^2
  double se_xx = std::sqrt(2.0 * cov.sxx2 * cov.sxx2 / kDraws);
  double se_vv = std::sqrt(2.0 * cov.svv2 * cov.svv2 / kDraws);
  double se_xv =
      std::sqrt((cov.sxx2 * cov.svv2 + cov.sxv2 * cov.sxv2) / kDraws);
  CHECK(std::abs(mxx - cov.sxx2) <= 3.0 * se_xx);
  CHECK(std::abs(mxv - cov.sxv2) <= 3.0 * se_xv);
  CHECK(std::abs(mvv - cov.svv2) <= 3.0 * se_vv);
}

TEST_CASE("step: free damped motion with zero noise") {
  auto free_target = std::make_shared<FreePotential>(3);
  KlmcParams params(0.6, 1.7, 0.9);
  Kernel kernel(params, free_target);
  PhaseState z{{1.0, -2.0, 0.5}, {0.3, 0.0, -1.1}};
  std::vector<double> zero(3, 0.0);
  PhaseState out = step(kernel, z, zero, zero);
  double delta = params.delta();
  double cxv = one_minus_exp(params.zeta()) / params.gamma;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.x[i] == doctest::Approx(z.x[i] + cxv * z.v[i]).epsilon(1e-15));
    CHECK(out.v[i] == doctest::Approx(delta * z.v[i]).epsilon(1e-15));
  }
}

TEST_CASE("step: deterministic quadratic step equals the mode transition matrix") {
  GaussianStream g(52, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    double lambda = log_uniform(g, 1e-2, 10.0);
    KlmcParams params(log_uniform(g, 1e-2, 3.0), log_uniform(g, 1e-1, 5.0),
                      log_uniform(g, 1e-2, 3.0));
    Kernel kernel(params, std::make_shared<IsotropicQuadratic>(1, lambda));
    PhaseState z{{g.next_normal()}, {g.next_normal()}};
    std::vector<double> zero(1, 0.0);
    PhaseState out = step(kernel, z, zero, zero);
    oracle::Mat2 s = oracle::transition_matrix(params, lambda);
    double ex = s.m00 * z.x[0] + s.m01 * z.v[0];
    double ev = s.m10 * z.x[0] + s.m11 * z.v[0];
    double scale = std::max({std::abs(ex), std::abs(ev), 1.0});
    CHECK(std::abs(out.x[0] - ex) <= 1e-14 * scale);
    CHECK(std::abs(out.v[0] - ev) <= 1e-14 * scale);
  }
}

TEST_CASE("step: pinned deterministic step and the independent reference path") {
  double beta = 1.0;
  KlmcParams params(0.5, 2.0, 1.0 / beta);
  auto target = std::make_shared<IsotropicQuadratic>(1, beta);
  Kernel kernel(params, target);
  PhaseState z{{1.0}, {0.0}};
  std::vector<double> zero(1, 0.0);
  PhaseState out = step(kernel, z, zero, zero);
  CHECK(out.x[0] == doctest::Approx(0.90803013970713942).epsilon(1e-14));
  CHECK(out.v[0] == doctest::Approx(-0.31606027941427884).epsilon(1e-14));

  // reference path computes every coefficient through different expressions
  GaussianStream g(53, 0);
  for (int trial = 0; trial < 200; ++trial) {
    PhaseState state{{g.next_normal()}, {g.next_normal()}};
    std::vector<double> n1{g.next_normal()}, n2{g.next_normal()};
    PhaseState a = step(kernel, state, n1, n2);
    PhaseState b = reference::step_direct(params, *target, state, n1, n2);
    CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-13));
    CHECK(a.v[0] == doctest::Approx(b.v[0]).epsilon(1e-13));
  }
}

TEST_CASE("step: poisoned state raises") {
  auto target = std::make_shared<IsotropicQuadratic>(1, 1.0);
  Kernel kernel(KlmcParams(0.5, 2.0, 1.0), target);
  PhaseState z{{std::numeric_limits<double>::infinity()}, {0.0}};
  std::vector<double> zero(1, 0.0);
  CHECK_THROWS_AS(step(kernel, z, zero, zero), numeric_error);
}

TEST_CASE("coupled step: equality preserved, linearity, noise-independent difference") {
  auto target = std::make_shared<IsotropicQuadratic>(2, 1.4);
  KlmcParams params(0.3, 2.0, 0.4);
  Kernel kernel(params, target);
  GaussianStream g(54, 0);

  // equal states stay equal exactly
  PhaseState z{{0.7, -0.2}, {0.1, 0.9}};
  auto [same1, same2] = coupled_step(kernel, z, z, g);
  CHECK(same1.x == same2.x);
  CHECK(same1.v == same2.v);

  // difference evolves by S(lambda) (1e3 random coupled steps)
  oracle::Mat2 s = oracle::transition_matrix(params, 1.4);
  for (int trial = 0; trial < 1000; ++trial) {
    PhaseState a{{g.next_normal(), g.next_normal()}, {g.next_normal(), g.next_normal()}};
    PhaseState b{{g.next_normal(), g.next_normal()}, {g.next_normal(), g.next_normal()}};
    auto [a1, b1] = coupled_step(kernel, a, b, g);
    for (std::size_t i = 0; i < 2; ++i) {
      double dx = a.x[i] - b.x[i], dv = a.v[i] - b.v[i];
      double ex = s.m00 * dx + s.m01 * dv;
      double ev = s.m10 * dx + s.m11 * dv;
      double scale = std::max({std::abs(ex), std::abs(ev), 1e-12});
      CHECK(std::abs((a1.x[i] - b1.x[i]) - ex) <= 1e-13 * scale);
      CHECK(std::abs((a1.v[i] - b1.v[i]) - ev) <= 1e-13 * scale);
    }
  }

  // two different noise seeds give the same difference sequence on a quadratic
  PhaseState init1{{1.0, 2.0}, {0.0, -1.0}};
  PhaseState init2{{-0.5, 0.3}, {0.2, 0.0}};
  CouplingDecay d1 = coupling_decay(kernel, init1, init2, 50, RngStream{1, 0});
  CouplingDecay d2 = coupling_decay(kernel, init1, init2, 50, RngStream{2, 0});
  REQUIRE(d1.norm_sq.size() == d2.norm_sq.size());
  for (std::size_t k = 0; k < d1.norm_sq.size(); ++k) {
    CHECK(d1.norm_sq[k] == doctest::Approx(d2.norm_sq[k]).epsilon(1e-9));
  }
}

TEST_CASE("coupled contraction ratios stay under 1 - c on admissible quadratics") {
  GaussianStream g(55, 0);
  for (int trial = 0; trial < 100; ++trial) {
    double h = log_uniform(g, 1e-2, 3.0);
    double gamma = log_uniform(g, 1e-1, 5.0);
    double beta = log_uniform(g, 1e-1, 10.0);
    double eta = eta_general(h, gamma, beta, 0.05 + 0.9 * g.next_uniform());
    KlmcParams params(h, gamma, eta);
    auto target = std::make_shared<IsotropicQuadratic>(2, beta);
    Kernel kernel(params, target);
    theory::ContractionReport report = theory::contraction_exact(params, target->profile());
    REQUIRE(report.c_exact.has_value());

    WeightedNorm norm = norm_for(gamma);
    for (int pair = 0; pair < 10; ++pair) {
      PhaseState a{{g.next_normal(), g.next_normal()}, {g.next_normal(), g.next_normal()}};
      PhaseState b{{g.next_normal(), g.next_normal()}, {g.next_normal(), g.next_normal()}};
      double before = weighted_norm_sq(norm, std::vector<double>{a.x[0] - b.x[0], a.x[1] - b.x[1]},
                                       std::vector<double>{a.v[0] - b.v[0], a.v[1] - b.v[1]});
      auto [a1, b1] = coupled_step(kernel, a, b, g);
      double after = weighted_norm_sq(norm, std::vector<double>{a1.x[0] - b1.x[0], a1.x[1] - b1.x[1]},
                                      std::vector<double>{a1.v[0] - b1.v[0], a1.v[1] - b1.v[1]});
      CHECK(after / before <= 1.0 - *report.c_exact + 1e-12);
    }
  }
}

TEST_CASE("run_chain: n = 1 equals one step, reruns are bit-identical") {
  auto target = std::make_shared<IsotropicQuadratic>(3, 1.0);
  KlmcParams params(0.4, 3.0, 0.5);
  Kernel kernel(params, target);
  PhaseState init{{0.1, -0.4, 2.0}, {0.0, 0.3, -0.2}};
  RunOptions options;
  options.burn_in = 0;

  RunResult run = run_chain(kernel, init, 1, RngStream{77, 3}, options);
  GaussianStream g(77, 3);
  PhaseState direct = step(kernel, init, g);
  CHECK(run.final_state.x == direct.x);
  CHECK(run.final_state.v == direct.v);

  RunResult again = run_chain(kernel, init, 1000, RngStream{77, 4}, options);
  RunResult again2 = run_chain(kernel, init, 1000, RngStream{77, 4}, options);
  CHECK(again.final_state.x == again2.final_state.x);
  CHECK(again.final_state.v == again2.final_state.v);
  CHECK(again.moments.cov_xx(0) == again2.moments.cov_xx(0));
}

TEST_CASE("run_chain: default burn-in follows the relaxation-time rule") {
  auto target = std::make_shared<IsotropicQuadratic>(1, 2.0);
  KlmcParams params(0.25, 3.0, 0.5);
  Kernel kernel(params, target);
  // 10 * ceil(gamma / (h eta alpha)) = 10 * ceil(3 / (0.25 * 0.5 * 2)) = 120
  CHECK(default_burn_in(kernel) == 120);
  RunResult run = run_chain(kernel, PhaseState{{0.0}, {0.0}}, 5, RngStream{1, 1});
  CHECK(run.burn_in == 120);
}

TEST_CASE("running moments agree with the two-pass reference on a stored trajectory") {
  auto target = std::make_shared<IsotropicQuadratic>(2, 1.0);
  Kernel kernel(KlmcParams(0.4, 3.0, 0.5), target);
  RunOptions options;
  options.burn_in = 0;
  options.thin = 1;
  RunResult run = run_chain(kernel, PhaseState{{1.0, 0.0}, {0.0, 0.0}}, 2000,
                            RngStream{7, 0}, options);
  std::vector<PhaseState> samples;
  for (const ThinnedRow& row : run.trajectory) samples.push_back({row.x, row.v});
  reference::TwoPassMoments two_pass = reference::two_pass_moments(samples);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(run.moments.mean_x(i) == doctest::Approx(two_pass.mean_x[i]).epsilon(1e-12));
    CHECK(run.moments.mean_v(i) == doctest::Approx(two_pass.mean_v[i]).epsilon(1e-12));
    CHECK(run.moments.cov_xx(i) == doctest::Approx(two_pass.cov_xx[i]).epsilon(1e-10));
    CHECK(run.moments.cov_vv(i) == doctest::Approx(two_pass.cov_vv[i]).epsilon(1e-10));
    CHECK(run.moments.cov_xv(i) == doctest::Approx(two_pass.cov_xv[i]).epsilon(1e-10));
  }
}

TEST_CASE("coupling decay: zero series for equal inits, truncation flag, fitted rate") {
  auto target = std::make_shared<IsotropicQuadratic>(2, 1.0);
  KlmcParams params(0.4, 3.0, 0.5);
  Kernel kernel(params, target);
  PhaseState z{{1.0, 2.0}, {0.3, -0.7}};
  CouplingDecay same = coupling_decay(kernel, z, z, 100, RngStream{5, 5});
  for (double w : same.norm_sq) CHECK(w == 0.0);
  CHECK_FALSE(same.truncated);

  // strong contraction for many steps underflows below 1e-300 and truncates
  KlmcParams strong(1.0, std::sqrt(27.0 / 2.0), 0.2);
  Kernel kernel_strong(strong, target);
  PhaseState other{{0.0, 0.0}, {0.0, 0.0}};
  CouplingDecay deep = coupling_decay(kernel_strong, z, other, 20000, RngStream{5, 6});
  CHECK(deep.truncated);
  CHECK(deep.norm_sq.size() < 20001);
  CHECK(deep.log_decay_rate < 0.0);

  // the fitted rate approaches the squared dominant eigenvalue modulus of S
  // and is at least as fast as the one-step certificate log(1 - c_minus)
  CouplingDecay decay = coupling_decay(kernel, z, other, 2000, RngStream{5, 7});
  oracle::Mat2 s = oracle::transition_matrix(params, 1.0);
  double disc = 0.25 * s.trace() * s.trace() - s.det();
  double dominant_sq = disc < 0.0
                           ? s.det()
                           : std::pow(std::abs(0.5 * s.trace()) + std::sqrt(disc), 2);
  CHECK(decay.log_decay_rate == doctest::Approx(std::log(dominant_sq)).epsilon(1e-2));
  double c_cert = theory::c_minus(derive(params).r_of(1.0), params.zeta());
  CHECK(decay.log_decay_rate <= std::log(1.0 - c_cert) + 1e-9);
}

TEST_CASE("stationarity: short-run chain moments match the Lyapunov covariance") {
  sweeps::StationarityResult result = sweeps::stationarity_experiment(200000, 13);
  CHECK(result.pass);
  CHECK(result.z_xx <= 3.0);
  CHECK(result.z_xv <= 3.0);
  CHECK(result.z_vv <= 3.0);
}

TEST_SUITE_END();
