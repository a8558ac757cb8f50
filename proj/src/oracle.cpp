#include "klmc/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "klmc/numerics.hpp"
#include "klmc/theory.hpp"

namespace klmc::oracle {

namespace {

constexpr double kTiny = 1e-300;

double rel_residual(double lhs, double rhs, double scale) {
  return std::abs(lhs - rhs) / std::max(scale, kTiny);
}

// Upper-triangular factor T with T^T T = G for G = [[1, b],[b, a]].
struct NormFactor {
  double b;
  double s;  // sqrt(a - b^2)

  explicit NormFactor(const WeightedNorm& norm)
      : b(norm.b), s(std::sqrt(norm.a - norm.b * norm.b)) {}

  // T Sigma T^T for symmetric Sigma
  SymMat2 push(const SymMat2& m) const {
    // T = [[1, b],[0, s]]
    double xx = m.xx + 2.0 * b * m.xv + b * b * m.vv;
    double xv = s * (m.xv + b * m.vv);
    double vv = s * s * m.vv;
    return {xx, xv, vv};
  }
};

void check_psd(const SymMat2& m, const char* who) {
  double scale = std::max({std::abs(m.xx), std::abs(m.vv), std::abs(m.xv), 1.0});
  if (m.xx < -1e-12 * scale || m.vv < -1e-12 * scale || m.det() < -1e-12 * scale * scale) {
    throw std::invalid_argument(std::string(who) + ": covariance is not PSD");
  }
}

}  // namespace

double spectral_radius(const Mat2& m) {
  double tr = m.trace();
  double det = m.det();
  double disc = 0.25 * tr * tr - det;
  if (disc < 0.0) return std::sqrt(det);  // complex pair, |lambda|^2 = det
  double root = std::sqrt(disc);
  return std::max(std::abs(0.5 * tr + root), std::abs(0.5 * tr - root));
}

SymMat2 sqrt_psd(const SymMat2& m) {
  check_psd(m, "sqrt_psd");
  double det = std::max(m.det(), 0.0);
  double s = std::sqrt(det);
  double t = std::sqrt(std::max(m.trace() + 2.0 * s, 0.0));
  if (t == 0.0) return {0.0, 0.0, 0.0};
  return {(m.xx + s) / t, m.xv / t, (m.vv + s) / t};
}

Mat2 transition_matrix(const KlmcParams& params, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("transition_matrix: lambda must be >= 0");
  double zeta = params.zeta();
  double gamma = params.gamma;
  double c_xv = one_minus_exp(zeta) / gamma;
  double c_xg = params.eta * zeta_plus_delta_minus_one(zeta) / (gamma * gamma);
  double c_vg = params.eta * one_minus_exp(zeta) / gamma;
  return {1.0 - lambda * c_xg, c_xv, -lambda * c_vg, std::exp(-zeta)};
}

ModeSystem mode_system(const KlmcParams& params, double lambda) {
  NoiseCovariance cov = noise_covariance(params);
  return {transition_matrix(params, lambda), {cov.sxx2, cov.sxv2, cov.svv2}, lambda};
}

BlockValues block_matrices(const KlmcParams& params, double lambda, double c) {
  double zeta = params.zeta();
  double delta = std::exp(-zeta);
  double om = one_minus_exp(zeta);
  double om2 = one_minus_exp2(zeta);
  double gamma = params.gamma;
  double r = params.eta * lambda / (gamma * gamma);

  BlockValues out;
  out.a = (-zeta * zeta - 3.0 * om * om) * r * r + 2.0 * zeta * r - c;
  out.b = ((zeta - 3.0 * delta * delta + 3.0 * delta) * r - c) / gamma;
  out.c_block = (3.0 * om2 - 4.0 * c) / (gamma * gamma);

  // direct assembly of (1-c) G - S^T G S in the scalar case
  Mat2 s = transition_matrix(params, lambda);
  WeightedNorm norm = norm_for(gamma);
  Mat2 g{1.0, norm.b, norm.b, norm.a};
  Mat2 sgs = s.transpose() * (g * s);
  Mat2 direct{(1.0 - c) * g.m00 - sgs.m00, (1.0 - c) * g.m01 - sgs.m01,
              (1.0 - c) * g.m10 - sgs.m10, (1.0 - c) * g.m11 - sgs.m11};

  double scale = std::max({std::abs(sgs.m00), std::abs(sgs.m01), std::abs(sgs.m11),
                           std::abs(1.0 - c) * std::max(1.0, norm.a), 1e-300});
  out.residual = std::max({std::abs(out.a - direct.m00), std::abs(out.b - direct.m01),
                           std::abs(out.c_block - direct.m11)}) /
                 scale;
  return out;
}

ChiValues chi_eval(double r, double zeta, double gamma, double c) {
  double delta = std::exp(-zeta);
  double om = one_minus_exp(zeta);
  double om2 = one_minus_exp2(zeta);
  ChiValues out;
  out.chi_a = (-zeta * zeta - 3.0 * om * om) * r * r + 2.0 * zeta * r - c;
  double r2_coef = 12.0 * c * om * om - 4.0 * zeta * zeta * (1.0 - c) +
                   3.0 * zeta * zeta * delta * delta - 6.0 * zeta * (delta - delta * delta) -
                   9.0 * om * om;
  double r1_coef = 6.0 * (c * (delta - delta * delta) + zeta * (1.0 - c) - zeta * delta * delta);
  double r0_coef = 3.0 * c * c - 3.0 * c * om2;
  out.chi_acmb2 = (r2_coef * r * r + r1_coef * r + r0_coef) / (gamma * gamma);
  return out;
}

double IdentityReport::max_residual() const {
  return std::max({res_disc, res_p1_halfsum, res_cminus_num, res_p5, res_p5_disc, res_p6, res_p7});
}

bool IdentityReport::pass(double tol) const {
  return max_residual() <= tol && p6_at_rlin_nonneg && dp6_at_rlin_nonpos && a7_b7_positive;
}

IdentityReport identity_suite(double r, double zeta) {
  if (!(r > 0.0) || !(zeta > 0.0)) {
    throw std::invalid_argument("identity_suite: need r > 0 and zeta > 0");
  }
  double delta = std::exp(-zeta);
  double om = one_minus_exp(zeta);
  double om2 = one_minus_exp2(zeta);

  theory::PolyCoeffs pc = theory::poly_coeffs(zeta);
  double p1v = theory::p1(r, pc);
  double p2v = theory::p2(r, pc);
  double p3v = theory::p3(r, pc);

  IdentityReport rep;

  // gamma^2 * chi_{AC-B^2} as a quadratic 3c^2 + qb c + qc; its normalized
  // quarter-discriminant must equal p2 p3 and its half root sum must be p1.
  double qb = (4.0 * (3.0 * om * om + zeta * zeta) * r * r +
               6.0 * ((delta - delta * delta) - zeta) * r - 3.0 * om2);
  double qc = (-9.0 * om * om + zeta * zeta * (3.0 * delta * delta - 4.0) -
               6.0 * zeta * (delta - delta * delta)) *
                  r * r +
              6.0 * zeta * om2 * r;
  double half = qb / 6.0;
  rep.res_disc = rel_residual(half * half - qc / 3.0, p2v * p3v,
                              half * half + std::abs(qc) / 3.0 + std::abs(p2v * p3v));
  // the (delta - delta^2) - zeta coefficient in qb cancels O(1) inputs, so
  // the achievable precision is set by the input magnitudes, not |p1|
  double p1_mag = pc.a1 * r * r + (delta + delta * delta + zeta) * r + pc.e1;
  rep.res_p1_halfsum = rel_residual(-half, p1v, p1_mag + std::abs(p1v));

  // p1^2 - p2 p3 against the factored numerator
  rep.res_cminus_num = rel_residual(p1v * p1v - p2v * p3v, theory::c_minus_numerator(r, zeta),
                                    p1v * p1v + std::abs(p2v * p3v));

  // (p1 - p4)^2 - p2 p3 = p5(r) r^2 with disc(p5) = 0. The printed form of
  // a5 contains 3 delta (2-delta)((1-delta)^2+1) - 3, which cancels to
  // -3(1-delta)^4 exactly; the folded form keeps the residual meaningful at
  // small zeta, and the two forms are cross-checked where both are accurate.
  double p4 = (-zeta * zeta - 3.0 * om * om) * r * r + 2.0 * zeta * r;
  double a5 = -3.0 * om * om * om * om - zeta * zeta * zeta * zeta / 3.0 -
              2.0 * zeta * zeta * om * om;
  double b5 = -6.0 * delta * om * om * om + (2.0 / 3.0) * zeta * zeta * zeta -
              2.0 * zeta * zeta * delta * om + 2.0 * zeta * om * om;
  double e5 = -3.0 * delta * delta * om * om - zeta * zeta / 3.0 + 2.0 * zeta * delta * om;
  double lhs5 = (p1v - p4) * (p1v - p4) - p2v * p3v;
  double rhs5 = (a5 * r * r + b5 * r + e5) * r * r;
  rep.res_p5 = rel_residual(lhs5, rhs5,
                            (p1v - p4) * (p1v - p4) + std::abs(p2v * p3v) + std::abs(rhs5));
  // b5 and e5 share a root near zeta ~ 0.75, so normalize the discriminant
  // by the pre-cancellation term magnitudes
  double b5_mag = 6.0 * delta * om * om * om + (2.0 / 3.0) * zeta * zeta * zeta +
                  2.0 * zeta * zeta * delta * om + 2.0 * zeta * om * om;
  double e5_mag = 3.0 * delta * delta * om * om + zeta * zeta / 3.0 + 2.0 * zeta * delta * om;
  rep.res_p5_disc =
      rel_residual(b5 * b5, 4.0 * a5 * e5, b5_mag * b5_mag + 4.0 * std::abs(a5) * e5_mag);
  if (zeta >= 0.5) {
    double a5_printed = 3.0 * delta * (2.0 - delta) * (om * om + 1.0) -
                        zeta * zeta * zeta * zeta / 3.0 - 2.0 * zeta * zeta * om * om - 3.0;
    rep.res_p5_disc =
        std::max(rep.res_p5_disc, rel_residual(a5_printed, a5, std::abs(a5) + 3.0));
  }

  // (p1 - zeta r)^2 - p2 p3 = p6(r) r
  double a6 = (4.0 / 3.0) * zeta * zeta * zeta + 4.0 * zeta * om * om;
  double b6 = 3.0 * om * om + zeta * zeta * (7.0 / 3.0 - delta * delta);
  double e6 = zeta * om2;
  double lhs6 = (p1v - zeta * r) * (p1v - zeta * r) - p2v * p3v;
  double rhs6 = (a6 * r * r - b6 * r + e6) * r;
  rep.res_p6 = rel_residual(
      lhs6, rhs6, (p1v - zeta * r) * (p1v - zeta * r) + std::abs(p2v * p3v) + std::abs(rhs6));

  double rl = theory::r_lin(zeta);
  double p6_at = a6 * rl * rl - b6 * rl + e6;
  double p6_scale = a6 * rl * rl + b6 * rl + e6;
  rep.p6_at_rlin_nonneg = p6_at >= -1e-12 * p6_scale;
  rep.dp6_at_rlin_nonpos = 2.0 * a6 * rl - b6 <= 1e-12 * p6_scale;

  // numerator of p6(r_lin): (4/9) z^4 om^2 - (2/3) z^2 om b6 + a6 e6 = a7 z^4 + b7 z^2
  double a7 = (2.0 / 9.0) * (1.0 + 3.0 * delta) * om * (1.0 + delta);
  double b7 = 2.0 * om * om * om * (1.0 + 2.0 * delta);
  double z2 = zeta * zeta;
  double lhs7 = (4.0 / 9.0) * z2 * z2 * om * om - (2.0 / 3.0) * z2 * om * b6 + a6 * e6;
  double rhs7 = a7 * z2 * z2 + b7 * z2;
  rep.res_p7 = rel_residual(
      lhs7, rhs7, (4.0 / 9.0) * z2 * z2 * om * om + (2.0 / 3.0) * z2 * om * b6 + a6 * e6);
  rep.a7_b7_positive = a7 > 0.0 && b7 > 0.0;

  return rep;
}

SymMat2 lyapunov_stationary(const KlmcParams& params, double lambda) {
  ModeSystem mode = mode_system(params, lambda);
  if (spectral_radius(mode.s) >= 1.0) {
    throw condition_violation("lyapunov_stationary: spectral radius >= 1, no stationary law");
  }
  const Mat2& s = mode.s;
  // unknowns (S_xx, S_xv, S_vv); rows of I - L(S (.) S^T)
  double m[3][4] = {
      {1.0 - s.m00 * s.m00, -2.0 * s.m00 * s.m01, -s.m01 * s.m01, mode.q.xx},
      {-s.m00 * s.m10, 1.0 - (s.m00 * s.m11 + s.m01 * s.m10), -s.m01 * s.m11, mode.q.xv},
      {-s.m10 * s.m10, -2.0 * s.m10 * s.m11, 1.0 - s.m11 * s.m11, mode.q.vv},
  };
  // gaussian elimination with partial pivoting
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    }
    if (m[pivot][col] == 0.0) {
      throw numeric_error("lyapunov_stationary: singular system");
    }
    if (pivot != col) std::swap(m[pivot], m[col]);
    for (int row = col + 1; row < 3; ++row) {
      double f = m[row][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
    }
  }
  double sol[3];
  for (int row = 2; row >= 0; --row) {
    double acc = m[row][3];
    for (int k = row + 1; k < 3; ++k) acc -= m[row][k] * sol[k];
    sol[row] = acc / m[row][row];
  }
  return {sol[0], sol[1], sol[2]};
}

double gaussian_w(const WeightedNorm& norm, const GaussianLaw& law1, const GaussianLaw& law2) {
  if (law1.size() != law2.size()) {
    throw std::invalid_argument("gaussian_w: laws have different mode counts");
  }
  NormFactor t(norm);
  double total = 0.0;
  for (std::size_t i = 0; i < law1.size(); ++i) {
    const ModeLaw& m1 = law1[i];
    const ModeLaw& m2 = law2[i];
    if (m1.multiplicity != m2.multiplicity) {
      throw std::invalid_argument("gaussian_w: mode multiplicity mismatch");
    }
    check_psd(m1.cov, "gaussian_w");
    check_psd(m2.cov, "gaussian_w");
    SymMat2 c1 = t.push(m1.cov);
    SymMat2 c2 = t.push(m2.cov);
    double dmx = (m1.mean_x - m2.mean_x) + t.b * (m1.mean_v - m2.mean_v);
    double dmv = t.s * (m1.mean_v - m2.mean_v);

    double cross = c1.xx * c2.xx + 2.0 * c1.xv * c2.xv + c1.vv * c2.vv;  // tr(C1 C2)
    double dets = std::sqrt(std::max(c1.det(), 0.0) * std::max(c2.det(), 0.0));
    double bures = c1.trace() + c2.trace() - 2.0 * std::sqrt(std::max(cross + 2.0 * dets, 0.0));
    double w2 = dmx * dmx + dmv * dmv + std::max(bures, 0.0);
    total += static_cast<double>(m1.multiplicity) * w2;
  }
  return std::sqrt(std::max(total, 0.0));
}

double exact_contraction_factor(const KlmcParams& params, double lambda,
                                const WeightedNorm& norm) {
  if (!(lambda > 0.0)) throw std::invalid_argument("exact_contraction_factor: lambda must be > 0");
  NormFactor t(norm);
  Mat2 s = transition_matrix(params, lambda);
  Mat2 tmat{1.0, t.b, 0.0, t.s};
  Mat2 tinv{1.0, -t.b / t.s, 0.0, 1.0 / t.s};
  Mat2 m = tmat * (s * tinv);
  double f = m.frobenius_sq();
  double det = m.det();
  double disc = std::max(f * f - 4.0 * det * det, 0.0);
  return 0.5 * (f + std::sqrt(disc));
}

GaussianLaw discrete_stationary_law(const KlmcParams& params,
                                    const std::vector<SpectrumMode>& spectrum) {
  GaussianLaw law;
  law.reserve(spectrum.size());
  for (const SpectrumMode& mode : spectrum) {
    law.push_back({mode.lambda, mode.multiplicity, 0.0, 0.0,
                   lyapunov_stationary(params, mode.lambda)});
  }
  return law;
}

GaussianLaw target_law(const KlmcParams& params, const std::vector<SpectrumMode>& spectrum) {
  GaussianLaw law;
  law.reserve(spectrum.size());
  for (const SpectrumMode& mode : spectrum) {
    if (!(mode.lambda > 0.0)) throw std::invalid_argument("target_law: lambda must be > 0");
    law.push_back(
        {mode.lambda, mode.multiplicity, 0.0, 0.0, {1.0 / mode.lambda, 0.0, params.eta}});
  }
  return law;
}

double exact_bias(const KlmcParams& params, const std::vector<SpectrumMode>& spectrum) {
  WeightedNorm norm = norm_for(params.gamma);
  return gaussian_w(norm, discrete_stationary_law(params, spectrum),
                    target_law(params, spectrum));
}

}  // namespace klmc::oracle
