#include <cmath>
#include <cstring>

#include "doctest.h"
#include "klmc/model.hpp"
#include "klmc/potentials.hpp"
#include "klmc/rng.hpp"

using namespace klmc;

TEST_SUITE_BEGIN("model");

TEST_CASE("derive: direct substitution") {
  DerivedParams d = derive(KlmcParams(1.0, 1.0, 1.0));
  CHECK(d.zeta == 1.0);
  CHECK(d.delta == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(d.r_of(1.0) == doctest::Approx(1.0).epsilon(1e-15));

  // eta = 1/beta, lambda = beta, gamma = 2 gives R = 1/4 for any beta
  double beta = 3.7;
  DerivedParams d2 = derive(KlmcParams(0.5, 2.0, 1.0 / beta));
  CHECK(d2.r_of(beta) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("derive: delta -> 1 monotonically as zeta -> 0") {
  double prev = 0.0;
  for (double zeta : {1.0, 0.1, 1e-2, 1e-4, 1e-8}) {
    double delta = derive(KlmcParams(zeta, 1.0, 1.0)).delta;
    CHECK(delta > prev);
    CHECK(delta < 1.0);
    prev = delta;
  }
}

TEST_CASE("derive is pure: bit-identical outputs") {
  KlmcParams p(0.37, 2.9, 0.11);
  DerivedParams a = derive(p);
  DerivedParams b = derive(p);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("params validation") {
  CHECK_THROWS_AS(KlmcParams(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KlmcParams(1.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KlmcParams(1.0, 1.0, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(ConvexityProfile(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ConvexityProfile(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightedNorm(1.0, 0.6), std::invalid_argument);  // 4b^2 > a
  CHECK_THROWS_AS(PhaseState({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("weighted_norm_sq: direct values") {
  CHECK(weighted_norm_sq(WeightedNorm(1.0, 0.0), std::vector<double>{1.0, 0.0},
                         std::vector<double>{0.0, 2.0}) == doctest::Approx(5.0));
  CHECK(weighted_norm_sq(WeightedNorm(4.0, 1.0), std::vector<double>{1.0},
                         std::vector<double>{1.0}) == doctest::Approx(7.0));
  std::vector<double> x{1.0, 2.0}, v{1.0};
  CHECK_THROWS_AS(weighted_norm_sq(WeightedNorm(1.0, 0.0), x, v), std::invalid_argument);
}

TEST_CASE("norm equivalence under 4b^2 <= a") {
  GaussianStream g(11, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = 0.1 + 5.0 * g.next_uniform();
    double b = 0.5 * std::sqrt(a) * g.next_uniform();  // 4b^2 <= a
    WeightedNorm norm(a, b);
    WeightedNorm euclid(a, 0.0);
    std::vector<double> x(3), v(3);
    g.fill_normal(x);
    g.fill_normal(v);
    double w = weighted_norm_sq(norm, x, v);
    double e = weighted_norm_sq(euclid, x, v);
    CHECK(w >= 0.5 * e * (1.0 - 1e-12));
    CHECK(w <= 1.5 * e * (1.0 + 1e-12));
  }
}

TEST_CASE("weighted norm positive definite when b^2 < a") {
  GaussianStream g(12, 0);
  WeightedNorm norm(1.0, 0.45);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> x(2), v(2);
    g.fill_normal(x);
    g.fill_normal(v);
    if (x[0] == 0.0 && x[1] == 0.0 && v[0] == 0.0 && v[1] == 0.0) continue;
    CHECK(weighted_norm_sq(norm, x, v) > 0.0);
  }
}

TEST_CASE("norm_for: gamma-adapted coefficients") {
  WeightedNorm n2 = norm_for(2.0);
  CHECK(n2.a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(n2.b == doctest::Approx(0.5).epsilon(1e-15));
  WeightedNorm n1 = norm_for(1.0);
  CHECK(n1.a == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(n1.b == doctest::Approx(1.0).epsilon(1e-15));
  for (double gamma : {0.1, 0.7, 1.0, 3.3, 17.0, 1e4}) {
    WeightedNorm n = norm_for(gamma);
    CHECK(4.0 * n.b * n.b == n.a);  // exact by construction
  }
  CHECK_THROWS_AS(norm_for(0.0), std::invalid_argument);
}

TEST_CASE("bundled potentials expose exact profiles") {
  IsotropicQuadratic iso(4, 2.5);
  CHECK(iso.profile().alpha == 2.5);
  CHECK(iso.profile().beta == 2.5);

  AnisotropicQuadratic aniso({0.5, 2.0, 1.0});
  CHECK(aniso.profile().alpha == 0.5);
  CHECK(aniso.profile().beta == 2.0);

  LogCoshQuadratic lc({1.0, 2.0}, 0.5);
  CHECK(lc.profile().alpha == 1.0);
  CHECK(lc.profile().beta == 2.5);

  // gradient of the log-cosh target: lambda x + s tanh(x)
  std::vector<double> x{0.3, -1.1}, grad(2);
  lc.grad(x, grad);
  CHECK(grad[0] == doctest::Approx(1.0 * 0.3 + 0.5 * std::tanh(0.3)).epsilon(1e-15));
  CHECK(grad[1] == doctest::Approx(2.0 * -1.1 + 0.5 * std::tanh(-1.1)).epsilon(1e-15));

  // finite-difference Hessian of log-cosh stays inside the profile window
  GaussianStream g(13, 0);
  for (int trial = 0; trial < 200; ++trial) {
    double xt = 4.0 * (g.next_uniform() - 0.5);
    double eps = 1e-6;
    std::vector<double> lo{xt - eps, 0.0}, hi{xt + eps, 0.0}, glo(2), ghi(2);
    lc.grad(lo, glo);
    lc.grad(hi, ghi);
    double hess = (ghi[0] - glo[0]) / (2.0 * eps);
    CHECK(hess >= lc.profile().alpha - 1e-6);
    CHECK(hess <= lc.profile().beta + 1e-6);
  }
}

TEST_CASE("rng streams: reproducible and distinct") {
  GaussianStream a(42, 7), b(42, 7), c(42, 8);
  bool same = true, differ = false;
  for (int i = 0; i < 1000; ++i) {
    double va = a.next_normal(), vb = b.next_normal(), vc = c.next_normal();
    same = same && va == vb;
    differ = differ || va != vc;
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("rng normals: sane first two moments") {
  GaussianStream g(1234, 0);
  double sum = 0.0, sum2 = 0.0;
  int n = 1000000;
  for (int i = 0; i < n; ++i) {
    double z = g.next_normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 4e-3);
  CHECK(std::abs(sum2 / n - 1.0) < 1e-2);
}

TEST_SUITE_END();
