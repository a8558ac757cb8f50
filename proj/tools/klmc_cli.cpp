// Command-line front end: contraction curves and reports, bias sweeps, the
// iteration planner, seeded sampling runs, the verification suite, and the
// overdamped-limit sweep. Every subcommand is deterministic given its flags
// (seeded RNG, fixed float formatting), so reruns produce identical bytes.
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "klmc/integrator.hpp"
#include "klmc/model.hpp"
#include "klmc/oracle.hpp"
#include "klmc/potentials.hpp"
#include "klmc/sweeps.hpp"
#include "klmc/theory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCondition = 2;
constexpr int kExitVerifyFailed = 3;

std::string fmt(double value) {
  if (std::isnan(value)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value) {
  if (seed_opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("KLMC_SEED")) {
    return std::strtoull(env, nullptr, 0);
  }
  return klmc::kDefaultSeed;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

void write_json(const std::string& path, const nlohmann::json& payload) {
  auto out = open_out(path);
  out << payload.dump(2) << "\n";
}

struct CommonFlags {
  double alpha = 1.0;
  double beta = 1.0;
  double h = 0.1;
  double gamma = 1.0;
  double eta = 1.0;
  std::uint64_t d = 1;
  std::string out = "klmc_out";
  std::string format = "csv";
};

int cmd_contract(const CommonFlags& flags, std::vector<double> zetas) {
  klmc::KlmcParams params(flags.h, flags.gamma, flags.eta);
  klmc::ConvexityProfile profile(flags.alpha, flags.beta);
  if (zetas.empty()) zetas.push_back(params.zeta());

  auto curves = open_out(flags.out + "_curves.csv");
  curves << "zeta,r,c_minus\n";
  for (double zeta : zetas) {
    if (!(zeta > 0.0)) throw std::invalid_argument("contract: zeta values must be > 0");
    double top = 1.2 * klmc::theory::r_max(zeta);
    for (int i = 1; i <= 1024; ++i) {
      double r = top * static_cast<double>(i) / 1024.0;
      curves << fmt(zeta) << "," << fmt(r) << "," << fmt(klmc::theory::c_minus(r, zeta))
             << "\n";
    }
  }

  klmc::theory::ContractionReport report = klmc::theory::contraction_exact(params, profile);
  nlohmann::json j = klmc::theory::to_json(report);
  j["h"] = flags.h;
  j["gamma"] = flags.gamma;
  j["eta"] = flags.eta;
  j["alpha"] = flags.alpha;
  j["beta"] = flags.beta;
  write_json(flags.out + "_report.json", j);
  if (!report.condition_general_ok) {
    std::cerr << "contract: general contraction condition violated\n";
    return kExitCondition;
  }
  return kExitOk;
}

int cmd_bias(const CommonFlags& flags, std::vector<double> gammas, double h_min, double h_max,
             int points) {
  if (gammas.empty()) gammas.push_back(flags.gamma);
  if (!(h_min > 0.0) || !(h_max > h_min) || points < 2) {
    throw std::invalid_argument("bias: need 0 < h-min < h-max and points >= 2");
  }
  klmc::ConvexityProfile profile(flags.alpha, flags.beta);
  double zc = klmc::theory::critical_zeta();

  auto out = open_out(flags.out + ".csv");
  out << "gamma,h,zeta,e_pos,e_mom,zeta_crossing\n";
  for (double gamma : gammas) {
    bool crossed = false;
    for (int i = 0; i < points; ++i) {
      double h = h_min * std::pow(h_max / h_min, static_cast<double>(i) / (points - 1));
      klmc::KlmcParams params(h, gamma, flags.eta);
      klmc::theory::BiasTerms terms = klmc::theory::bias_terms(params, profile, flags.d);
      int crossing = 0;
      if (!crossed && params.zeta() >= zc) {
        crossing = 1;  // first grid point past zeta = h*gamma = 1.69
        crossed = true;
      }
      out << fmt(gamma) << "," << fmt(h) << "," << fmt(params.zeta()) << ","
          << fmt(terms.e_pos) << "," << fmt(terms.e_mom) << "," << crossing << "\n";
    }
  }
  return kExitOk;
}

int cmd_plan(const CommonFlags& flags, double epsilon, double h0, double w0) {
  klmc::ConvexityProfile profile(flags.alpha, flags.beta);
  klmc::theory::ComplexityPlan plan =
      klmc::theory::complexity_plan(profile, flags.d, epsilon, flags.gamma, flags.eta, h0, w0);
  write_json(flags.out + ".json", klmc::theory::to_json(plan));
  return kExitOk;
}

int cmd_sample(const CommonFlags& flags, const std::string& target, double lambda,
               double lambda_min, double lambda_max, double s, std::uint64_t steps,
               std::int64_t burn_in, std::uint64_t thin, std::uint64_t seed,
               std::uint64_t chains, int threads) {
  std::shared_ptr<const klmc::Potential> potential;
  if (target == "iso") {
    potential = std::make_shared<klmc::IsotropicQuadratic>(flags.d, lambda);
  } else if (target == "aniso" || target == "logcosh") {
    std::vector<double> spectrum(flags.d);
    for (std::uint64_t i = 0; i < flags.d; ++i) {
      double t = flags.d == 1 ? 0.0 : static_cast<double>(i) / (flags.d - 1);
      spectrum[i] = lambda_min + t * (lambda_max - lambda_min);
    }
    if (target == "aniso") {
      potential = std::make_shared<klmc::AnisotropicQuadratic>(std::move(spectrum));
    } else {
      potential = std::make_shared<klmc::LogCoshQuadratic>(std::move(spectrum), s);
    }
  } else {
    throw std::invalid_argument("sample: --target must be iso, aniso or logcosh");
  }

  klmc::KlmcParams params(flags.h, flags.gamma, flags.eta);
  klmc::Kernel kernel(params, potential);
  klmc::PhaseState init{std::vector<double>(flags.d, 0.0), std::vector<double>(flags.d, 0.0)};
  klmc::RunOptions options;
  options.thin = thin;
  if (burn_in >= 0) options.burn_in = static_cast<std::uint64_t>(burn_in);

  std::vector<klmc::RunResult> results =
      klmc::run_chains(kernel, init, steps, chains, seed, 0, options, threads);

  // thinned trajectory of chain 0: (step, x_0..x_{d-1}, v_0..v_{d-1})
  auto traj = open_out(flags.out + "_traj.csv");
  traj << "step";
  for (std::uint64_t i = 0; i < flags.d; ++i) traj << ",x_" << i;
  for (std::uint64_t i = 0; i < flags.d; ++i) traj << ",v_" << i;
  traj << "\n";
  for (const klmc::ThinnedRow& row : results.front().trajectory) {
    traj << row.step;
    for (double x : row.x) traj << "," << fmt(x);
    for (double v : row.v) traj << "," << fmt(v);
    traj << "\n";
  }

  if (flags.format == "json") {
    nlohmann::json chains_json = nlohmann::json::array();
    for (std::size_t c = 0; c < results.size(); ++c) {
      const klmc::RunningMoments& m = results[c].moments;
      nlohmann::json jc;
      jc["chain"] = c;
      jc["samples"] = m.count();
      jc["burn_in"] = results[c].burn_in;
      for (std::size_t i = 0; i < m.dim(); ++i) {
        jc["mean_x"].push_back(m.mean_x(i));
        jc["mean_v"].push_back(m.mean_v(i));
        jc["cov_xx"].push_back(m.cov_xx(i));
        jc["cov_vv"].push_back(m.cov_vv(i));
        jc["cov_xv"].push_back(m.cov_xv(i));
      }
      chains_json.push_back(jc);
    }
    write_json(flags.out + "_moments.json", chains_json);
  } else {
    auto moments = open_out(flags.out + "_moments.csv");
    moments << "chain,coord,mean_x,mean_v,cov_xx,cov_vv,cov_xv\n";
    for (std::size_t c = 0; c < results.size(); ++c) {
      const klmc::RunningMoments& m = results[c].moments;
      for (std::size_t i = 0; i < m.dim(); ++i) {
        moments << c << "," << i << "," << fmt(m.mean_x(i)) << "," << fmt(m.mean_v(i)) << ","
                << fmt(m.cov_xx(i)) << "," << fmt(m.cov_vv(i)) << "," << fmt(m.cov_xv(i))
                << "\n";
      }
    }
  }
  return kExitOk;
}

int cmd_verify(const std::string& out, std::size_t sweep_size, std::uint64_t seed, int threads) {
  using namespace klmc::sweeps;
  SandwichResult sandwich = contraction_sandwich(sweep_size, seed, threads);
  BiasSandwichResult bias = bias_sandwich(sweep_size, seed, threads);
  IdentitySweepResult identities = identity_sweep(10 * sweep_size, seed, threads);
  IdentitySweepResult blocks = block_sweep(10 * sweep_size, seed, threads);
  LyapunovSweepResult lyapunov = lyapunov_sweep(sweep_size, seed, threads);
  CouplingResult coupling = coupling_experiment(10000, seed);
  StationarityResult stationarity = stationarity_experiment(200000, seed);
  ConstantAuditResult audit = constant_audit(10 * sweep_size, seed, threads);

  auto csv = open_out(out + "_instances.csv");
  csv << "suite,h,gamma,eta,lambda_or_alpha,beta,c_exact,rho_sq,e_pos,e_mom,exact_bias,"
         "pass_flags\n";
  auto emit = [&](const char* suite, const std::vector<VerifyRow>& rows) {
    for (const VerifyRow& r : rows) {
      csv << suite << "," << fmt(r.h) << "," << fmt(r.gamma) << "," << fmt(r.eta) << ","
          << fmt(r.lambda_or_alpha) << "," << fmt(r.beta) << "," << fmt(r.c_exact) << ","
          << fmt(r.rho_sq) << "," << fmt(r.e_pos) << "," << fmt(r.e_mom) << ","
          << fmt(r.exact_bias) << "," << r.pass_flags << "\n";
    }
  };
  emit("contraction_sandwich", sandwich.rows);
  emit("bias_sandwich", bias.rows);

  bool pass = sandwich.pass && bias.pass && identities.pass && blocks.pass && lyapunov.pass &&
              coupling.pass && stationarity.pass && audit.pass;

  nlohmann::json report;
  report["pass"] = pass;
  report["seed"] = seed;
  report["sweep_size"] = sweep_size;
  report["contraction_sandwich"] = {{"pass", sandwich.pass},
                                    {"max_rho_excess", sandwich.max_rho_excess},
                                    {"max_lin_excess", sandwich.max_lin_excess}};
  report["bias_sandwich"] = {{"pass", bias.pass}, {"max_excess", bias.max_excess}};
  report["identity_suite"] = {{"pass", identities.pass},
                              {"n", identities.n},
                              {"max_residual", identities.max_residual},
                              {"sign_conditions_ok", identities.sign_conditions_ok}};
  report["block_residuals"] = {{"pass", blocks.pass},
                               {"n", blocks.n},
                               {"max_residual", blocks.max_residual}};
  report["lyapunov"] = {{"pass", lyapunov.pass},
                        {"max_solve_residual", lyapunov.max_solve_residual},
                        {"max_fixed_point_gap", lyapunov.max_fixed_point_gap},
                        {"spectral_radii_ok", lyapunov.spectral_radii_ok}};
  report["coupling"] = {{"pass", coupling.pass},
                        {"worst_excess_quadratic", coupling.worst_excess_quadratic},
                        {"worst_excess_logcosh", coupling.worst_excess_logcosh},
                        {"truncated", coupling.truncated}};
  report["stationarity"] = {{"pass", stationarity.pass},
                            {"z_xx", stationarity.z_xx},
                            {"z_xv", stationarity.z_xv},
                            {"z_vv", stationarity.z_vv}};
  report["constant_audit"] = {{"pass", audit.pass},
                              {"stated_dominates", audit.stated_dominates},
                              {"proof_dominates", audit.proof_dominates},
                              {"worst_stated_ratio", audit.worst_stated_ratio},
                              {"worst_proof_ratio", audit.worst_proof_ratio}};
  write_json(out + "_report.json", report);

  std::cout << (pass ? "verify: PASS\n" : "verify: FAIL\n");
  return pass ? kExitOk : kExitVerifyFailed;
}

int cmd_limit(const CommonFlags& flags, double h_lmc, double gamma_min, double gamma_max,
              int points) {
  if (!(h_lmc > 0.0) || !(gamma_min > 0.0) || !(gamma_max > gamma_min) || points < 2) {
    throw std::invalid_argument("limit: need h-lmc > 0, 0 < gamma-min < gamma-max, points >= 2");
  }
  klmc::ConvexityProfile profile(flags.alpha, flags.beta);
  double kappa = profile.kappa();
  double c_lin_limit = h_lmc * flags.alpha;
  double e_pos_limit =
      std::sqrt(0.5) * std::sqrt(static_cast<double>(flags.d)) * kappa * std::sqrt(h_lmc);

  auto out = open_out(flags.out + ".csv");
  out << "gamma,h,zeta,c_lin,c_lin_limit,e_pos,e_pos_limit,e_mom\n";
  for (int i = 0; i < points; ++i) {
    double gamma =
        gamma_min * std::pow(gamma_max / gamma_min, static_cast<double>(i) / (points - 1));
    double h = h_lmc * gamma;
    klmc::KlmcParams params(h, gamma, 1.0);
    klmc::theory::BiasTerms terms = klmc::theory::bias_terms(params, profile, flags.d);
    double c_lin = h * 1.0 * flags.alpha / gamma;  // eta = 1 in the overdamped scaling
    out << fmt(gamma) << "," << fmt(h) << "," << fmt(params.zeta()) << "," << fmt(c_lin) << ","
        << fmt(c_lin_limit) << "," << fmt(terms.e_pos) << "," << fmt(e_pos_limit) << ","
        << fmt(terms.e_mom) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KLMC exponential-integrator sampler and verification workbench"};
  app.set_help_flag("--help", "print help");  // frees -h for the step-size flag
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<double> zetas;
  std::vector<double> gammas;
  double h_min = 1e-2, h_max = 1e2;
  int points = 128;
  double epsilon = 0.05, h0 = 1.0, w0 = 10.0;
  std::string target = "iso";
  double lambda = 1.0, lambda_min = 1.0, lambda_max = 2.0, s = 0.5;
  std::uint64_t steps = 10000, thin = 0, chains = 1, seed_flag = klmc::kDefaultSeed;
  std::int64_t burn_in = -1;
  std::size_t sweep_size = 1000;
  int threads = 0;
  double h_lmc = 0.1, gamma_min = 1.0, gamma_max = 1e6;

  auto add_common = [&](CLI::App* sub, bool with_params) {
    sub->add_option("--alpha", flags.alpha, "strong convexity lower bound");
    sub->add_option("--beta", flags.beta, "smoothness upper bound");
    sub->add_option("-d,--dim", flags.d, "dimension");
    if (with_params) {
      sub->add_option("--h", flags.h, "step size");
      sub->add_option("--gamma", flags.gamma, "friction coefficient");
      sub->add_option("--eta", flags.eta, "inverse mass");
    }
    sub->add_option("-o,--out", flags.out, "output path prefix");
    sub->add_option("--format", flags.format, "summary format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* contract =
      app.add_subcommand("contract", "emit c_minus curves (CSV: zeta,r,c_minus; 1024 points over "
                                     "(0, 1.2 r_max]) and a contraction report JSON");
  add_common(contract, true);
  contract->add_option("--zetas", zetas, "zeta values for the curve sweep")->delimiter(',');

  CLI::App* bias = app.add_subcommand(
      "bias", "emit bias bounds over a log-spaced h grid (CSV: gamma,h,zeta,e_pos,e_mom,"
              "zeta_crossing; crossing marks the first point with zeta >= 1.69)");
  add_common(bias, true);
  bias->add_option("--gammas", gammas, "gamma values, one curve each")->delimiter(',');
  bias->add_option("--h-min", h_min, "smallest step size");
  bias->add_option("--h-max", h_max, "largest step size");
  bias->add_option("--points", points, "grid points per curve");

  CLI::App* plan = app.add_subcommand(
      "plan", "choose (h, n) meeting a Wasserstein accuracy target (JSON: epsilon,h_star,"
              "n_star,w0,...); w0 is the caller's upper bound on W_{a,b}(mu, pi_h)");
  add_common(plan, true);
  plan->add_option("--epsilon", epsilon, "target accuracy")->required();
  plan->add_option("--h0", h0, "step size cap (Assumption 2 must hold at h0)");
  plan->add_option("--w0", w0, "upper bound on the initial Wasserstein distance")->required();

  CLI::App* sample = app.add_subcommand(
      "sample", "run seeded chains; writes <out>_traj.csv (step,x_0..,v_0..) and "
                "<out>_moments.{csv|json}");
  add_common(sample, true);
  sample->add_option("--target", target, "iso | aniso | logcosh");
  sample->add_option("--lambda", lambda, "isotropic curvature");
  sample->add_option("--lambda-min", lambda_min, "smallest eigenvalue (aniso/logcosh)");
  sample->add_option("--lambda-max", lambda_max, "largest eigenvalue (aniso/logcosh)");
  sample->add_option("--s", s, "log-cosh perturbation scale");
  sample->add_option("--steps", steps, "post-burn-in steps per chain");
  sample->add_option("--burnin", burn_in, "burn-in steps (default 10*ceil(gamma/(h eta alpha)))");
  sample->add_option("--thin", thin, "keep every thin-th state (0: none)");
  CLI::Option* sample_seed = sample->add_option("--seed", seed_flag, "RNG seed");
  sample->add_option("--chains", chains, "number of chains");
  sample->add_option("--threads", threads, "worker threads (0: all)");

  CLI::App* verify = app.add_subcommand(
      "verify", "run the sandwich/identity/Lyapunov/coupling/stationarity suites; writes "
                "<out>_report.json and <out>_instances.csv; exit 3 on failure");
  verify->add_option("-o,--out", flags.out, "output path prefix");
  verify->add_option("--sweep-size", sweep_size, "instances per randomized suite");
  CLI::Option* verify_seed = verify->add_option("--seed", seed_flag, "RNG seed");
  verify->add_option("--threads", threads, "worker threads (0: all)");

  CLI::App* limit = app.add_subcommand(
      "limit", "overdamped sweep: fix h_LMC, sweep gamma log-spaced with h = h_LMC*gamma, "
               "eta = 1 (CSV: gamma,h,zeta,c_lin,c_lin_limit,e_pos,e_pos_limit,e_mom)");
  add_common(limit, false);
  limit->add_option("--h-lmc", h_lmc, "overdamped step size h_LMC");
  limit->add_option("--gamma-min", gamma_min, "smallest gamma");
  limit->add_option("--gamma-max", gamma_max, "largest gamma");
  limit->add_option("--points", points, "grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (contract->parsed()) return cmd_contract(flags, zetas);
    if (bias->parsed()) return cmd_bias(flags, gammas, h_min, h_max, points);
    if (plan->parsed()) return cmd_plan(flags, epsilon, h0, w0);
    if (sample->parsed()) {
      std::uint64_t seed = resolve_seed(sample_seed, seed_flag);
      return cmd_sample(flags, target, lambda, lambda_min, lambda_max, s, steps, burn_in, thin,
                        seed, chains, threads);
    }
    if (verify->parsed()) {
      std::uint64_t seed = resolve_seed(verify_seed, seed_flag);
      return cmd_verify(flags.out, sweep_size, seed, threads);
    }
    if (limit->parsed()) return cmd_limit(flags, h_lmc, gamma_min, gamma_max, points);
  } catch (const klmc::condition_violation& e) {
    std::cerr << "condition violation: " << e.what() << "\n";
    return kExitCondition;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerifyFailed;
  }
  return kExitUsage;
}
