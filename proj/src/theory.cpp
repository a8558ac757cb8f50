#include "klmc/theory.hpp"

#include <algorithm>
#include <cmath>

#include "klmc/numerics.hpp"

namespace klmc::theory {

namespace {

void require_positive_zeta(double zeta) {
  if (!(std::isfinite(zeta) && zeta > 0.0)) {
    throw std::invalid_argument("theory: zeta must be finite and > 0");
  }
}

}  // namespace

PolyCoeffs poly_coeffs(double zeta) {
  require_positive_zeta(zeta);
  double delta = std::exp(-zeta);
  double om = one_minus_exp(zeta);    // 1 - delta
  double om2 = one_minus_exp2(zeta);  // 1 - delta^2
  PolyCoeffs c;
  c.a1 = (2.0 / 3.0) * zeta * zeta + 2.0 * om * om;
  c.b1 = zeta - delta * om;
  c.e1 = 0.5 * om2;
  c.b2 = -zeta * (1.0 + delta) + om2;
  c.e2 = 0.5 * (1.0 + delta) * (1.0 + delta);
  c.b3 = -zeta * om - om * om;
  c.e3 = 0.5 * om * om;
  return c;
}

double p1(double r, const PolyCoeffs& c) { return -c.a1 * r * r + c.b1 * r + c.e1; }
double p2(double r, const PolyCoeffs& c) { return c.a1 * r * r + c.b2 * r + c.e2; }
double p3(double r, const PolyCoeffs& c) { return c.a1 * r * r + c.b3 * r + c.e3; }
double p1(double r, double zeta) { return p1(r, poly_coeffs(zeta)); }
double p2(double r, double zeta) { return p2(r, poly_coeffs(zeta)); }
double p3(double r, double zeta) { return p3(r, poly_coeffs(zeta)); }

double c_minus_numerator(double r, double zeta) {
  double delta = std::exp(-zeta);
  double om = one_minus_exp(zeta);
  double om2 = one_minus_exp2(zeta);
  double q = (4.0 / 3.0 - delta * delta) * zeta * zeta + 2.0 * delta * om * zeta +
             3.0 * om * om;
  return 2.0 * zeta * om2 * r - q * r * r;
}

double c_minus(double r, double zeta) {
  require_positive_zeta(zeta);
  if (!(r >= 0.0)) throw std::invalid_argument("c_minus: r must be >= 0");
  PolyCoeffs c = poly_coeffs(zeta);
  double root = std::sqrt(p2(r, c) * p3(r, c));
  if (r < 1e-3) {
    // p1 and sqrt(p2 p3) agree to O(r) here; the factored numerator avoids
    // the subtraction.
    return c_minus_numerator(r, zeta) / (p1(r, c) + root);
  }
  return p1(r, c) - root;
}

double r_max(double zeta) {
  require_positive_zeta(zeta);
  double delta = std::exp(-zeta);
  double om = one_minus_exp(zeta);
  double om2 = one_minus_exp2(zeta);
  return 2.0 * zeta * om2 /
         ((4.0 / 3.0 - delta * delta) * zeta * zeta + 2.0 * delta * om * zeta + 3.0 * om * om);
}

double r_lin(double zeta) {
  require_positive_zeta(zeta);
  double om = one_minus_exp(zeta);
  return zeta * om / (2.0 * zeta * zeta + 6.0 * om * om);
}

bool check_condition_general(const KlmcParams& params, const ConvexityProfile& profile) {
  double zeta = params.zeta();
  double om2 = one_minus_exp2(zeta);
  double lhs = params.eta * ((2.0 / 3.0) * params.h / (params.gamma * om2) +
                             1.5 / (params.gamma * params.gamma));
  return lhs <= 1.0 / profile.beta;
}

bool check_condition_linear(const KlmcParams& params, const ConvexityProfile& profile) {
  double zeta = params.zeta();
  double om = one_minus_exp(zeta);
  double lhs = params.eta * (2.0 * params.h / (params.gamma * om) +
                             6.0 / (params.gamma * params.gamma));
  return lhs < 1.0 / profile.beta;
}

ContractionReport contraction_exact(const KlmcParams& params, const ConvexityProfile& profile) {
  double zeta = params.zeta();
  DerivedParams derived = derive(params);

  ContractionReport report;
  report.condition_general_ok = check_condition_general(params, profile);
  report.condition_linear_ok = check_condition_linear(params, profile);
  report.r_lo = derived.r_of(profile.alpha);
  report.r_hi = derived.r_of(profile.beta);
  report.r_max = r_max(zeta);
  report.r_lin = r_lin(zeta);
  if (report.condition_linear_ok) {
    report.c_linear = params.h * params.eta * profile.alpha / params.gamma;
  }
  if (!report.condition_general_ok) {
    report.reason = "condition_general_violated";
    return report;
  }

  PolyCoeffs coeffs = poly_coeffs(zeta);
  auto value = [&](double r) {
    double root = std::sqrt(p2(r, coeffs) * p3(r, coeffs));
    if (r < 1e-3) return c_minus_numerator(r, zeta) / (p1(r, coeffs) + root);
    return p1(r, coeffs) - root;
  };

  double best_r = report.r_lo;
  double best_c = value(report.r_lo);
  if (report.r_hi > report.r_lo) {
    constexpr int kGrid = 4096;
    double width = report.r_hi - report.r_lo;
    int best_i = 0;
    for (int i = 1; i < kGrid; ++i) {
      double r = report.r_lo + width * static_cast<double>(i) / (kGrid - 1);
      double c = value(r);
      if (c < best_c) {
        best_c = c;
        best_r = r;
        best_i = i;
      }
    }
    if (best_i > 0 && best_i < kGrid - 1) {
      double lo = report.r_lo + width * static_cast<double>(best_i - 1) / (kGrid - 1);
      double hi = report.r_lo + width * static_cast<double>(best_i + 1) / (kGrid - 1);
      double refined = golden_section_min(value, lo, hi, 1e-12);
      double refined_c = value(refined);
      if (refined_c < best_c) {
        best_c = refined_c;
        best_r = refined;
      }
    }
    // endpoints stay candidates regardless of what the grid saw
    double c_hi = value(report.r_hi);
    if (c_hi < best_c) {
      best_c = c_hi;
      best_r = report.r_hi;
    }
  }
  report.c_exact = best_c;
  report.argmin_r = best_r;
  return report;
}

double contraction_linear(const KlmcParams& params, const ConvexityProfile& profile) {
  if (!check_condition_linear(params, profile)) {
    throw condition_violation("contraction_linear: Assumption 2 does not hold");
  }
  return params.h * params.eta * profile.alpha / params.gamma;
}

double f_pos(double zeta) {
  require_positive_zeta(zeta);
  if (zeta < 0.25) {
    // sum_{n>=5} 2 (-2)^{n-3} (n-1)(n-3)(n-4) / n! * zeta^n
    double base = zeta * zeta * zeta * zeta * zeta / 30.0;  // (-2)^2 zeta^5 / 5!
    double sum = 0.0;
    for (int n = 5; n < 80; ++n) {
      double term = 2.0 * base * (n - 1) * (n - 3) * (n - 4);
      sum += term;
      base *= -2.0 * zeta / (n + 1);
      if (std::abs(base) * 2.0 * (n + 1) * (n + 1) * (n + 1) <
          std::numeric_limits<double>::epsilon() * sum) {
        break;
      }
    }
    return sum;
  }
  double e2z = std::exp(-2.0 * zeta);
  return zeta * zeta - 3.0 +
         e2z * (3.0 + 6.0 * zeta + 5.0 * zeta * zeta + 2.0 * zeta * zeta * zeta);
}

double f_mom(double zeta) {
  require_positive_zeta(zeta);
  if (zeta < 0.1) {
    // sum_{n>=3} (-1)^{n-1} 2^{n-1} (n-1)(n-2) / n! * zeta^n
    double base = 2.0 * zeta * zeta * zeta / 3.0;  // 2^2 zeta^3 / 3! (sign +)
    double sum = 0.0;
    for (int n = 3; n < 80; ++n) {
      double term = base * (n - 1) * (n - 2);
      sum += term;
      base *= -2.0 * zeta / (n + 1);
      if (std::abs(base) * (n + 1) * (n + 1) < std::numeric_limits<double>::epsilon() * sum) {
        break;
      }
    }
    return sum;
  }
  double e2z = std::exp(-2.0 * zeta);
  return 1.0 - e2z * (1.0 + 2.0 * zeta + 2.0 * zeta * zeta);
}

BiasTerms bias_terms(const KlmcParams& params, const ConvexityProfile& profile, std::size_t d) {
  if (d < 1) throw std::invalid_argument("bias_terms: d must be >= 1");
  double zeta = params.zeta();
  double kappa = profile.kappa();
  double dd = static_cast<double>(d);
  double base = dd * kappa * kappa * params.eta / (params.gamma * params.gamma);
  double sdk = std::sqrt(dd) * kappa * std::sqrt(params.eta);

  BiasTerms t;
  t.e_pos = std::sqrt(0.5 * base * f_pos(zeta) / zeta);
  t.e_mom = std::sqrt(4.0 * base * f_mom(zeta) / zeta);
  t.e_pos_under_stated = (4.0 / 15.0) * sdk * params.gamma * params.h * params.h;
  t.e_pos_under_proof = std::sqrt(4.0 / 15.0) * sdk * params.gamma * params.h * params.h;
  t.e_mom_under = (4.0 / std::sqrt(3.0)) * sdk * params.h;
  t.e_pos_over = std::sqrt(0.5) * sdk * std::sqrt(params.h / params.gamma);
  t.e_mom_over = 4.0 * sdk / (std::sqrt(params.h) * params.gamma * std::sqrt(params.gamma));
  return t;
}

BiasReport bias_bounds(const KlmcParams& params, const ConvexityProfile& profile, std::size_t d) {
  if (!check_condition_linear(params, profile)) {
    throw condition_violation("bias_bounds: Assumption 2 does not hold");
  }
  BiasTerms t = bias_terms(params, profile, d);
  BiasReport report;
  report.e_pos = t.e_pos;
  report.e_mom = t.e_mom;
  report.e_pos_under_stated = t.e_pos_under_stated;
  report.e_pos_under_proof = t.e_pos_under_proof;
  report.e_mom_under = t.e_mom_under;
  report.e_pos_over = t.e_pos_over;
  report.e_mom_over = t.e_mom_over;
  report.zeta_critical = critical_zeta();
  report.regime = params.zeta() < report.zeta_critical ? "underdamped" : "overdamped";
  return report;
}

double critical_zeta() {
  static const double root = [] {
    auto g = [](double z) {
      return std::log((2.0 * z + 1.0) * (2.0 * z * z + 1.0)) - 2.0 * z;
    };
    double z = bisect_root(g, 1.0, 3.0, 1e-14);
    // Newton polish on the un-logged residual
    for (int i = 0; i < 4; ++i) {
      double e2z = std::exp(2.0 * z);
      double f = (2.0 * z + 1.0) * (2.0 * z * z + 1.0) - e2z;
      double fp = 2.0 * (2.0 * z * z + 1.0) + 4.0 * z * (2.0 * z + 1.0) - 2.0 * e2z;
      z -= f / fp;
    }
    return z;
  }();
  return root;
}

ComplexityPlan complexity_plan(const ConvexityProfile& profile, std::uint64_t d, double epsilon,
                               double gamma, double eta, double h0, double w0) {
  if (!(epsilon > 0.0) || !(w0 > 0.0) || d < 1) {
    throw std::invalid_argument("complexity_plan: need epsilon > 0, w0 > 0, d >= 1");
  }
  KlmcParams at_cap(h0, gamma, eta);
  if (!check_condition_linear(at_cap, profile)) {
    throw condition_violation(
        "complexity_plan: Assumption 2 fails at h0; shrink h0 or adjust (gamma, eta)");
  }
  double kappa = profile.kappa();
  double dd = static_cast<double>(d);
  double h1 = std::sqrt(5.0 / 4.0) * std::sqrt(epsilon) /
              (std::pow(dd, 0.25) * std::sqrt(kappa) * std::pow(eta, 0.25) * std::sqrt(gamma));
  double h2 = (1.0 / (4.0 * std::sqrt(3.0))) * epsilon / (std::sqrt(dd) * kappa * std::sqrt(eta));
  double h_uncapped = std::min(h1, h2);
  double h_star = h_uncapped < h0 ? h_uncapped : h0;  // tie resolves toward h0

  double t1 = std::sqrt(5.0) * std::pow(gamma, 1.5) * std::pow(dd, 0.25) * std::sqrt(kappa) /
              (std::pow(eta, 0.75) * profile.alpha * std::sqrt(epsilon));
  double t2 = 8.0 * std::sqrt(3.0) * gamma * std::sqrt(dd) * kappa /
              (std::sqrt(eta) * profile.alpha * epsilon);
  double t3 = h0 * gamma;
  double lead = std::max({t1, t2, t3});
  double n_real = lead * std::log(3.0 * w0 / epsilon);

  ComplexityPlan plan;
  plan.epsilon = epsilon;
  plan.h_star = h_star;
  plan.n_star = n_real > 1.0 ? static_cast<std::uint64_t>(std::ceil(n_real)) : 1;
  plan.w0 = w0;
  plan.alpha = profile.alpha;
  plan.beta = profile.beta;
  plan.gamma = gamma;
  plan.eta = eta;
  plan.h0 = h0;
  plan.d = d;
  plan.h_capped_at_h0 = h_star == h0;
  plan.h0_gamma_term_binding = t3 >= t1 && t3 >= t2;

  BiasTerms plugback = bias_terms(KlmcParams(h_star, gamma, eta), profile, d);
  plan.plugback_e_pos = plugback.e_pos;
  plan.plugback_e_mom = plugback.e_mom;
  return plan;
}

nlohmann::json to_json(const ContractionReport& report) {
  nlohmann::json j;
  j["condition_general_ok"] = report.condition_general_ok;
  j["condition_linear_ok"] = report.condition_linear_ok;
  j["c_exact"] = report.c_exact ? nlohmann::json(*report.c_exact) : nlohmann::json(nullptr);
  j["c_linear"] = report.c_linear ? nlohmann::json(*report.c_linear) : nlohmann::json(nullptr);
  j["argmin_r"] = report.argmin_r ? nlohmann::json(*report.argmin_r) : nlohmann::json(nullptr);
  j["r_lo"] = report.r_lo;
  j["r_hi"] = report.r_hi;
  j["r_max"] = report.r_max;
  j["r_lin"] = report.r_lin;
  if (!report.reason.empty()) j["reason"] = report.reason;
  return j;
}

nlohmann::json to_json(const BiasReport& report) {
  nlohmann::json j;
  j["e_pos"] = report.e_pos;
  j["e_mom"] = report.e_mom;
  j["e_pos_under"] = report.e_pos_under_proof;
  j["e_pos_under_stated"] = report.e_pos_under_stated;
  j["e_pos_under_proof"] = report.e_pos_under_proof;
  j["e_mom_under"] = report.e_mom_under;
  j["e_pos_over"] = report.e_pos_over;
  j["e_mom_over"] = report.e_mom_over;
  j["zeta_critical"] = report.zeta_critical;
  j["regime"] = report.regime;
  return j;
}

nlohmann::json to_json(const ComplexityPlan& plan) {
  nlohmann::json j;
  j["epsilon"] = plan.epsilon;
  j["h_star"] = plan.h_star;
  j["n_star"] = plan.n_star;
  j["w0"] = plan.w0;
  j["alpha"] = plan.alpha;
  j["beta"] = plan.beta;
  j["gamma"] = plan.gamma;
  j["eta"] = plan.eta;
  j["h0"] = plan.h0;
  j["d"] = plan.d;
  j["h_capped_at_h0"] = plan.h_capped_at_h0;
  j["h0_gamma_term_binding"] = plan.h0_gamma_term_binding;
  j["plugback_e_pos"] = plan.plugback_e_pos;
  j["plugback_e_mom"] = plan.plugback_e_mom;
  return j;
}

}  // namespace klmc::theory
