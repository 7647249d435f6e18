#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scma/harness.hpp"

namespace {

// "a", or "a:b:step" expanded inclusively.
std::vector<double> expand_snr(const std::vector<std::string>& args) {
  std::vector<double> out;
  for (const auto& a : args) {
    const auto c1 = a.find(':');
    if (c1 == std::string::npos) {
      out.push_back(std::stod(a));
      continue;
    }
    const auto c2 = a.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::invalid_argument("snr range must be start:stop:step");
    }
    const double start = std::stod(a.substr(0, c1));
    const double stop = std::stod(a.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(a.substr(c2 + 1));
    if (step <= 0.0) throw std::invalid_argument("snr step must be positive");
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
  }
  return out;
}

struct CommonArgs {
  std::vector<double> gammas;
  std::vector<std::string> snr_args;
  int d_f = 2;
  int d_v = 3;
  int symbols = 200;
  int M = 4;
  double P = 1.0;
  int J = -1;
  int trials = 50;
  std::uint64_t seed = 1;
  double tau = 0.0;
  int tmax = 4000;
  double tau_stop = 1e-8;
  double damp = 0.5;
  int max_repairs = 3;
  double anneal_rho = 0.99;
  bool strict = true;
  bool damp_adapt = true;
  bool literal_first_nonzero = false;
  std::string support_mode = "per_symbol";
  std::string config_path;
  std::string out = "sweep.csv";
  std::string trace_path;
  int parallelism = 1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--gamma", a.gammas, "sparsity level d_f/K (repeatable)");
  cmd->add_option("--snr-db", a.snr_args,
                  "SNR in dB; a value or start:stop:step (repeatable)");
  cmd->add_option("--df", a.d_f, "nonzero subcarriers per codeword");
  cmd->add_option("--dv", a.d_v, "users per subcarrier");
  cmd->add_option("--symbols", a.symbols, "data symbols per frame (I)");
  cmd->add_option("--mod", a.M, "constellation size (power of 2)");
  cmd->add_option("--power", a.P, "per-symbol power budget");
  cmd->add_option("--antennas", a.J, "antenna count (default: N)");
  cmd->add_option("--trials", a.trials, "Monte-Carlo trials per point");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--tau", a.tau,
                  "activity threshold (<=0: amplitude/2 default)");
  cmd->add_option("--tmax", a.tmax, "iteration budget per recovery");
  cmd->add_option("--tau-stop", a.tau_stop, "relative stopping tolerance");
  cmd->add_option("--damp", a.damp, "damping ceiling in (0,1]");
  cmd->add_option("--max-repairs", a.max_repairs,
                  "row repair attempts before a fresh restart");
  cmd->add_option("--anneal-rho", a.anneal_rho,
                  "noise continuation decay per iteration");
  cmd->add_flag("--strict-paper-variances,!--no-strict-paper-variances",
                a.strict, "variance bookkeeping variant (default on)");
  cmd->add_flag("!--no-damp-adapt", a.damp_adapt,
                "disable adaptive damping");
  cmd->add_flag("--literal-first-nonzero", a.literal_first_nonzero,
                "phase pivot: literal first nonzero instead of the label");
  cmd->add_option("--support-mode", a.support_mode,
                  "per_symbol or per_frame");
  cmd->add_option("--config", a.config_path,
                  "key = value config file with system parameters");
  cmd->add_option("--parallelism", a.parallelism, "worker threads");
}

scma::SweepOptions to_options(const CommonArgs& a) {
  scma::SweepOptions o;
  o.d_f = a.d_f;
  o.d_v = a.d_v;
  o.I = a.symbols;
  o.M = a.M;
  o.P = a.P;
  o.J = a.J;
  std::vector<double> gammas = a.gammas;
  std::vector<double> snrs = expand_snr(a.snr_args);
  if (!a.config_path.empty()) {
    scma::SystemConfig cfg = scma::load_config_file(a.config_path);
    o.d_f = cfg.d_f;
    o.d_v = cfg.d_v;
    o.I = cfg.I;
    o.M = cfg.M;
    o.P = cfg.P;
    o.J = cfg.J;
    o.support_mode = cfg.support_mode;
    if (gammas.empty()) gammas.push_back(cfg.gamma());
    if (snrs.empty() && cfg.sigma2 > 0.0) {
      snrs.push_back(10.0 * std::log10(cfg.P / cfg.sigma2));
    }
  }
  if (gammas.empty()) gammas.push_back(0.1);
  if (snrs.empty()) snrs.push_back(17.5);
  for (double g : gammas) {
    for (double s : snrs) o.points.push_back({g, s});
  }
  o.trials = a.trials;
  o.master_seed = a.seed;
  o.parallelism = a.parallelism;
  if (a.config_path.empty()) {
    o.support_mode = scma::parse_support_mode(a.support_mode);
  } else if (a.support_mode != "per_symbol") {
    o.support_mode = scma::parse_support_mode(a.support_mode);
  }
  o.bigamp.t_max = a.tmax;
  o.bigamp.tau_stop = a.tau_stop;
  o.bigamp.damp = a.damp;
  o.bigamp.damp_adapt = a.damp_adapt;
  o.bigamp.strict_paper_variances = a.strict;
  o.bigamp.max_repairs = a.max_repairs;
  o.bigamp.anneal_rho = a.anneal_rho;
  o.detector.tau = a.tau;
  o.detector.literal_first_nonzero = a.literal_first_nonzero;
  return o;
}

int cmd_sweep(const CommonArgs& a) {
  scma::SweepOptions o = to_options(a);
  scma::SweepResult r = scma::sweep(o);
  scma::emit_csv(r, a.out);
  std::fputs(scma::format_csv(r).c_str(), stdout);
  std::fprintf(stderr, "wrote %s and %s.meta.json\n", a.out.c_str(),
               a.out.c_str());
  return 0;
}

int cmd_trial(const CommonArgs& a) {
  scma::SweepOptions o = to_options(a);
  if (o.points.size() != 1) {
    std::fprintf(stderr, "trial wants exactly one gamma and one snr-db\n");
    return 2;
  }
  if (!a.trace_path.empty()) {
    o.bigamp.trace = true;
    o.bigamp.trace_path = a.trace_path;
  }
  scma::SystemConfig cfg =
      scma::make_config(o.points[0].gamma, o.d_f, o.d_v, o.I, o.M, o.P, o.J);
  cfg.support_mode = o.support_mode;
  scma::TrialResult t = scma::run_trial(cfg, o.points[0].snr_db, a.seed,
                                        o.bigamp, o.detector);
  std::printf(
      "seed=%llu gamma=%g snr_db=%g ber=%.10g id_error_rate=%.10g "
      "iters=%d converged=%d diverged=%d repairs=%d restarts=%d "
      "residual=%.6g runtime_s=%.3f\n",
      static_cast<unsigned long long>(t.seed), o.points[0].gamma,
      o.points[0].snr_db, t.ber, t.id_error_rate, t.iters,
      t.converged ? 1 : 0, t.diverged ? 1 : 0, t.repairs, t.restarts,
      t.residual, t.runtime_s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grant-free SCMA uplink simulator"};
  app.require_subcommand(1);

  CommonArgs sweep_args, trial_args;
  CLI::App* sw = app.add_subcommand("sweep", "Monte-Carlo BER sweep -> CSV");
  add_common(sw, sweep_args);
  sw->add_option("--out", sweep_args.out, "output CSV path");

  CLI::App* tr = app.add_subcommand("trial", "single end-to-end trial");
  add_common(tr, trial_args);
  tr->add_option("--trace", trial_args.trace_path,
                 "per-iteration trace CSV path");

  try {
    app.parse(argc, argv);
    if (sw->parsed()) return cmd_sweep(sweep_args);
    if (tr->parsed()) return cmd_trial(trial_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
