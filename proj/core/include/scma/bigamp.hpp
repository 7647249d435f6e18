#pragma once

#include <string>
#include <vector>

#include "scma/codebook.hpp"
#include "scma/rng.hpp"
#include "scma/types.hpp"

namespace scma {

struct Priors {
  double gamma = 0.0;
  Constellation constellation;
  double beta_bar = 1.0;
  double sigma2 = 0.0;
  // Receiver-known structure: user count sizes the factorization, the frame
  // layout drives the support-consistency repair scan.
  int n_users = 0;
  int d_f = 0;
  FrameLayout layout;

  double sigma_x2() const {
    return gamma * constellation.amplitude * constellation.amplitude;
  }
};

struct BigAmpOptions {
  // Core iteration controls.
  int t_max = 4000;          // total iteration budget across all phases
  double tau_stop = 1e-8;    // stopping tolerance on the relative change of w_bar
  // An update stalled this far below tau_stop for freeze_window consecutive
  // iterations is a fixed point: the phase ends without waiting for the
  // annealing clock or the damping factor to arm the main stopping rule.
  double freeze_tol = 1e-14;
  int freeze_window = 40;
  double damp = 0.5;         // damping ceiling
  bool damp_adapt = true;
  double variance_floor = 1e-12;
  double variance_cap = 1e12;
  bool strict_paper_variances = true;  // false: consistent all-v_w_bar rows

  // Column 0 carries the known all-user label symbol, so its activity prior
  // is 1 instead of gamma. Disable to treat every column i.i.d.
  bool label_prior = true;

  // Cold starts only converge reliably when the assumed noise level starts
  // high and decays geometrically toward the true sigma2 (continuation).
  bool anneal = true;
  double anneal_rho = 0.99;   // per-iteration decay of the assumed noise level
  double anneal_snr0 = 0.3;   // assumed starting SNR: sigma2_start = power/(1+snr0)

  // Adaptive damping details.
  double damp_start = 0.3;
  double damp_min = 0.05;
  double stop_damp_min = 0.3;  // stopping rule armed only at/above this damp

  // Row repair: rows whose recovered support statistics are inconsistent are
  // reseeded and the annealing resumes from the measured residual level.
  int max_repairs = 3;
  double repair_flag_frac = 0.15;
  double repair_corr = 0.8;
  int phase_t_max = 1300;    // iteration cap of the initial phase
  int repair_t_max = 900;    // iteration cap of each repair phase

  bool trace = false;
  std::string trace_path;
};

// All per-iteration arrays of the recursion. `iterate` reads the previous
// iterates from here and commits the new ones in place.
struct BigAmpState {
  CMat h_hat;    // J x N
  RMat v_h;
  CMat x_hat;    // N x L
  RMat v_x;
  CMat s_hat;    // J x L
  RMat v_s;
  CMat w_bar;    // J x L plug-in mean
  RMat v_w_bar;  // plug-in variance
  RMat v_w;      // full output variance
  CMat w_hat;    // Onsager-corrected mean
  CMat z_hat;    // output posterior
  RMat v_z;
  CMat q_hat;    // J x N pseudo-measurements for h
  RMat v_q;
  CMat r_hat;    // N x L pseudo-measurements for x
  RMat v_r;
  int iter = 0;
  bool has_prev = false;     // false on the first pass of a phase: no blending
  double damp_cur = 0.3;
  double sigma2_assumed = 0.0;
  double sigma2_start_hint = 0.0;
};

struct BigAmpResult {
  CMat h_hat;
  RMat v_h;
  CMat x_hat;
  RMat v_x;
  int iters = 0;
  bool converged = false;
  bool diverged = false;
  int repairs = 0;
  int restarts = 0;
  double residual = 0.0;  // ||Y - h_hat x_hat|| / ||Y||
};

// Scalar posterior denoisers for the channel and symbol estimates.
void gaussian_posterior(cplx q_hat, double v_q, double beta_bar, cplx& mean,
                        double& var);
void discrete_posterior(cplx r_hat, double v_r, const Priors& p, cplx& mean,
                        double& var);

// Cold-start state: h ~ CN(0, beta_bar), v_h = beta_bar, x ~ prior-matched
// random draw, v_x = gamma * amplitude^2, s = 0.
BigAmpState initialize(const CMat& Y, const Priors& p, const BigAmpOptions& o,
                       Rng& rng);

// Warm start from given estimates (genie or resumed runs).
BigAmpState initialize_at(const CMat& Y, const Priors& p,
                          const BigAmpOptions& o, const CMat& h0,
                          const CMat& x0);

// One full pass of the recursion at the state's current damping factor and
// assumed noise level.
void iterate(BigAmpState& state, const CMat& Y, const Priors& p,
             const BigAmpOptions& o);

BigAmpResult run(const CMat& Y, const Priors& p, const BigAmpOptions& o,
                 Rng& rng);
BigAmpResult run_from(BigAmpState state, const CMat& Y, const Priors& p,
                      const BigAmpOptions& o, Rng& rng);

// Support-consistency scan used by the repair pass (exposed for tests):
// returns rows whose thresholded data blocks disagree with d_f too often,
// whose energy collapsed, or whose channel columns duplicate another row's.
std::vector<int> flag_inconsistent_rows(const BigAmpState& state,
                                        const Priors& p,
                                        const BigAmpOptions& o);

}  // namespace scma
