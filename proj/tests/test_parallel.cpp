// OpenMP paths must agree exactly with the serial reference paths: chains
// own their streams and sweep results merge by instance index.
#include <memory>

#include "doctest.h"
#include "klmc/integrator.hpp"
#include "klmc/potentials.hpp"
#include "klmc/reference.hpp"
#include "klmc/sweeps.hpp"

using namespace klmc;

TEST_SUITE_BEGIN("parallel");

TEST_CASE("run_chains: parallel equals serial reference bit for bit") {
  auto target = std::make_shared<IsotropicQuadratic>(4, 1.0);
  Kernel kernel(KlmcParams(0.4, 3.0, 0.5), target);
  PhaseState init{std::vector<double>(4, 0.5), std::vector<double>(4, 0.0)};
  RunOptions options;
  options.burn_in = 10;
  options.thin = 100;

  auto serial = reference::run_chains_serial(kernel, init, 3000, 8, 123, 5, options);
  auto parallel = run_chains(kernel, init, 3000, 8, 123, 5, options);
  auto parallel2 = run_chains(kernel, init, 3000, 8, 123, 5, options, 2);

  REQUIRE(serial.size() == parallel.size());
  for (std::size_t c = 0; c < serial.size(); ++c) {
    CHECK(serial[c].final_state.x == parallel[c].final_state.x);
    CHECK(serial[c].final_state.v == parallel[c].final_state.v);
    CHECK(serial[c].final_state.x == parallel2[c].final_state.x);
    REQUIRE(serial[c].trajectory.size() == parallel[c].trajectory.size());
    for (std::size_t t = 0; t < serial[c].trajectory.size(); ++t) {
      CHECK(serial[c].trajectory[t].step == parallel[c].trajectory[t].step);
      CHECK(serial[c].trajectory[t].x == parallel[c].trajectory[t].x);
    }
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(serial[c].moments.cov_xx(i) == parallel[c].moments.cov_xx(i));
      CHECK(serial[c].moments.cov_xv(i) == parallel[c].moments.cov_xv(i));
    }
  }
}

TEST_CASE("sweeps: thread count does not change results") {
  auto one = sweeps::identity_sweep(2000, 9, 1);
  auto many = sweeps::identity_sweep(2000, 9, 0);
  CHECK(one.max_residual == many.max_residual);

  auto s1 = sweeps::contraction_sandwich(200, 9, 1);
  auto s4 = sweeps::contraction_sandwich(200, 9, 4);
  CHECK(s1.max_rho_excess == s4.max_rho_excess);
  CHECK(s1.max_lin_excess == s4.max_lin_excess);
  REQUIRE(s1.rows.size() == s4.rows.size());
  for (std::size_t i = 0; i < s1.rows.size(); ++i) {
    CHECK(s1.rows[i].c_exact == s4.rows[i].c_exact);
    CHECK(s1.rows[i].rho_sq == s4.rows[i].rho_sq);
  }

  auto b1 = sweeps::bias_sandwich(200, 9, 1);
  auto b4 = sweeps::bias_sandwich(200, 9, 4);
  CHECK(b1.max_excess == b4.max_excess);
}

TEST_SUITE_END();
