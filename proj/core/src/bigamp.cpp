#include "scma/bigamp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace scma {

void gaussian_posterior(cplx q_hat, double v_q, double beta_bar, cplx& mean,
                        double& var) {
  const double denom = beta_bar + v_q;
  mean = (beta_bar / denom) * q_hat;
  var = beta_bar * v_q / denom;
}

void discrete_posterior(cplx r_hat, double v_r, const Priors& p, cplx& mean,
                        double& var) {
  const auto& pts = p.constellation.points;
  const int M = static_cast<int>(pts.size());
  const double log_zero = std::log(1.0 - p.gamma);
  const double log_point = std::log(p.gamma / M);
  // max-log normalized weights over {0} u C
  double wmax = log_zero - std::norm(r_hat) / v_r;
  double logw[64];
  logw[0] = wmax;
  for (int k = 0; k < M; ++k) {
    logw[k + 1] = log_point - std::norm(r_hat - pts[k]) / v_r;
    wmax = std::max(wmax, logw[k + 1]);
  }
  double z = std::exp(logw[0] - wmax);
  cplx acc(0.0, 0.0);
  double acc2 = 0.0;
  for (int k = 0; k < M; ++k) {
    const double w = std::exp(logw[k + 1] - wmax);
    z += w;
    acc += w * pts[k];
    acc2 += w * std::norm(pts[k]);
  }
  mean = acc / z;
  var = acc2 / z - std::norm(mean);
  if (var < 0.0) var = 0.0;
}

namespace {

// Candidate buffers for one speculative pass; committing swaps them into the
// state so rejected damping trials never touch it.
class Engine {
 public:
  Engine(const CMat& Y, const Priors& p, const BigAmpOptions& o)
      : Y_(Y), p_(p), o_(o), p_label_(p) {
    // Every user transmits the known label symbol in column 0, so the
    // activity prior there is 1 (the symbol itself is still unknown up to
    // the per-row phase).
    p_label_.gamma = 1.0;
    use_label_prior_ = o.label_prior && p.layout.K > 0;
  }

  // One full recursion pass at damping d and assumed noise level sig2.
  void step(const BigAmpState& st, double d, double sig2) {
    const double floor = o_.variance_floor;
    const double vmax = o_.variance_cap;
    const auto J = Y_.rows();
    const auto L = Y_.cols();
    const auto N = st.h_hat.cols();

    A2h_ = st.h_hat.cwiseAbs2();
    A2x_ = st.x_hat.cwiseAbs2();

    vwbar_.noalias() = A2h_ * st.v_x;
    vwbar_.noalias() += st.v_h * A2x_;
    vwbar_ = vwbar_.cwiseMax(floor);
    wbar_.noalias() = st.h_hat * st.x_hat;
    vw_.noalias() = st.v_h * st.v_x;
    vw_ = (vw_ + vwbar_).cwiseMax(floor);
    if (st.has_prev) {
      vwbar_ = d * vwbar_ + (1.0 - d) * st.v_w_bar;
      vw_ = d * vw_ + (1.0 - d) * st.v_w;
    }
    what_ = wbar_ - st.s_hat.cwiseProduct(vwbar_);

    // output posterior and scaled residual
    const bool strict = o_.strict_paper_variances;
    vz_.resizeLike(vwbar_);
    zhat_.resizeLike(what_);
    vs_.resizeLike(vwbar_);
    s_.resizeLike(what_);
    cost_ = 0.0;
    for (Eigen::Index i = 0; i < vwbar_.size(); ++i) {
      const double vwb = vwbar_(i);
      const double vwf = vw_(i);
      const double denom = vwb + sig2;
      const cplx resid = Y_(i) - what_(i);
      vz_(i) = vwb * sig2 / denom;
      zhat_(i) = (vwb / denom) * resid + what_(i);
      const double vs_den = strict ? vwf : vwb;
      double vs_raw = (1.0 - vz_(i) / vs_den) / vs_den;
      vs_(i) = std::max(vs_raw, floor);
      s_(i) = resid / denom;
      cost_ += std::norm(resid) / (vwf + sig2) + std::log(vwf + sig2);
    }
    if (st.has_prev) {
      vs_ = d * vs_ + (1.0 - d) * st.v_s;
      s_ = d * s_ + (1.0 - d) * st.s_hat;
    }

    // pseudo-measurements for h
    dq_.noalias() = vs_ * A2x_.transpose();
    vsvx_.noalias() = vs_ * st.v_x.transpose();
    sxh_.noalias() = s_ * st.x_hat.adjoint();
    vq_.resize(J, N);
    qhat_.resize(J, N);
    hnew_.resize(J, N);
    vhnew_.resize(J, N);
    for (Eigen::Index i = 0; i < dq_.size(); ++i) {
      const double vq = std::min(1.0 / std::max(dq_(i), 1e-300), vmax);
      vq_(i) = vq;
      qhat_(i) = st.h_hat(i) * (1.0 - vq * vsvx_(i)) + vq * sxh_(i);
      cplx m;
      double v;
      gaussian_posterior(qhat_(i), vq, p_.beta_bar, m, v);
      hnew_(i) = m;
      vhnew_(i) = std::max(v, floor);
    }

    // pseudo-measurements for x
    dr_.noalias() = A2h_.transpose() * vs_;
    vhvs_.noalias() = st.v_h.transpose() * vs_;
    hhs_.noalias() = st.h_hat.adjoint() * s_;
    vr_.resize(N, L);
    rhat_.resize(N, L);
    xnew_.resize(N, L);
    vxnew_.resize(N, L);
    const Eigen::Index label_col =
        use_label_prior_ ? p_.layout.label_index() : -1;
    for (Eigen::Index l = 0; l < L; ++l) {
      const Priors& pc = l == label_col ? p_label_ : p_;
      for (Eigen::Index n = 0; n < N; ++n) {
        const Eigen::Index i = l * N + n;
        const double vr = std::min(1.0 / std::max(dr_(i), 1e-300), vmax);
        vr_(i) = vr;
        rhat_(i) = st.x_hat(i) * (1.0 - vr * vhvs_(i)) + vr * hhs_(i);
        cplx m;
        double v;
        discrete_posterior(rhat_(i), std::max(vr, floor), pc, m, v);
        xnew_(i) = m;
        vxnew_(i) = std::max(v, floor);
      }
    }

    if (st.has_prev) {
      hnew_ = d * hnew_ + (1.0 - d) * st.h_hat;
      xnew_ = d * xnew_ + (1.0 - d) * st.x_hat;
    }
  }

  double cost() const { return cost_; }

  double nll_of(const CMat& what, const RMat& vw, double sig2) const {
    double c = 0.0;
    for (Eigen::Index i = 0; i < what.size(); ++i) {
      const double denom = vw(i) + sig2;
      c += std::norm(Y_(i) - what(i)) / denom + std::log(denom);
    }
    return c;
  }

  // mean |x_hat change| of the pending candidate (for traces)
  double mean_dx(const BigAmpState& st) const {
    return (xnew_ - st.x_hat).cwiseAbs().mean();
  }

  double candidate_residual() const {
    return (Y_ - wbar_).norm() / Y_.norm();
  }

  void commit(BigAmpState& st, double d, double sig2) {
    st.h_hat.swap(hnew_);
    st.v_h.swap(vhnew_);
    st.x_hat.swap(xnew_);
    st.v_x.swap(vxnew_);
    st.s_hat.swap(s_);
    st.v_s.swap(vs_);
    st.w_bar.swap(wbar_);
    st.v_w_bar.swap(vwbar_);
    st.v_w.swap(vw_);
    st.w_hat.swap(what_);
    st.z_hat.swap(zhat_);
    st.v_z.swap(vz_);
    st.q_hat.swap(qhat_);
    st.v_q.swap(vq_);
    st.r_hat.swap(rhat_);
    st.v_r.swap(vr_);
    st.iter += 1;
    st.has_prev = true;
    st.damp_cur = d;
    st.sigma2_assumed = sig2;
  }

 private:
  const CMat& Y_;
  Priors p_;
  BigAmpOptions o_;
  Priors p_label_;
  bool use_label_prior_ = false;
  double cost_ = 0.0;

  RMat A2h_, A2x_, vwbar_, vw_, vz_, vs_, dq_, vsvx_, vq_, vhnew_, dr_, vhvs_,
      vr_, vxnew_;
  CMat wbar_, what_, zhat_, s_, sxh_, qhat_, hnew_, hhs_, rhat_, xnew_;
};

double frame_power(const CMat& Y) {
  return Y.squaredNorm() / static_cast<double>(Y.size());
}

struct PhaseOut {
  int iters = 0;
  bool converged = false;
  bool diverged = false;
};

PhaseOut run_phase(Engine& eng, BigAmpState& st, const CMat& Y,
                   const Priors& p, const BigAmpOptions& o, double sig_start,
                   int t_allow, std::ofstream* trace) {
  PhaseOut out;
  // Noiseless inputs anneal down to the variance floor instead of to zero.
  const double sig_true = std::max(p.sigma2, o.variance_floor);
  const double sig0 = std::max(sig_start, sig_true);
  double d = std::min(o.damp_start, o.damp);
  bool anneal_done = !o.anneal || sig0 <= sig_true * (1.0 + 1e-7);
  CMat wbar_old;
  int frozen = 0;
  for (int t = 1; t <= t_allow; ++t) {
    const double sig2 =
        o.anneal ? std::max(sig_true, sig0 * std::pow(o.anneal_rho, t))
                 : sig_true;
    if (!anneal_done && sig2 <= sig_true * (1.0 + 1e-7)) {
      anneal_done = true;
      d = std::max(d, std::min(o.damp_start, o.damp));
    }
    eng.step(st, d, sig2);
    if (o.damp_adapt && st.has_prev) {
      const double cost_prev = eng.nll_of(st.w_hat, st.v_w, sig2);
      // slack absorbs last-ulp noise at fixed points
      const double worse = cost_prev + 1e-12 * std::max(1.0, std::abs(cost_prev));
      if (eng.cost() > worse) {
        int tries = 0;
        while (eng.cost() > worse && d > o.damp_min && tries < 6) {
          d = std::max(d / 2.0, o.damp_min);
          eng.step(st, d, sig2);
          ++tries;
        }
      } else {
        d = std::min(d * 1.1, o.damp);
      }
    }
    if (trace && trace->is_open()) {
      (*trace) << st.iter + 1 << ',' << eng.candidate_residual() << ',' << d
               << ',' << (st.has_prev ? eng.mean_dx(st) : 0.0) << '\n';
    }
    eng.commit(st, d, sig2);
    out.iters = t;
    if (!st.h_hat.allFinite() || !st.x_hat.allFinite()) {
      out.diverged = true;
      return out;
    }
    const bool stop_armed =
        anneal_done && (!o.damp_adapt || d >= o.stop_damp_min);
    if (stop_armed && wbar_old.size() > 0) {
      const double num = (st.w_bar - wbar_old).squaredNorm();
      const double den = wbar_old.squaredNorm();
      if (num <= o.tau_stop * den) {
        out.converged = true;
        return out;
      }
    }
    wbar_old = st.w_bar;
  }
  return out;
}

BigAmpState make_state_common(const CMat& Y, const Priors& p,
                              const BigAmpOptions& o) {
  BigAmpState st;
  const auto J = Y.rows();
  const auto L = Y.cols();
  st.s_hat = CMat::Zero(J, L);
  st.v_s = RMat::Zero(J, L);
  st.w_bar = CMat::Zero(J, L);
  st.v_w_bar = RMat::Zero(J, L);
  st.v_w = RMat::Zero(J, L);
  st.w_hat = CMat::Zero(J, L);
  st.z_hat = CMat::Zero(J, L);
  st.v_z = RMat::Zero(J, L);
  st.iter = 0;
  st.has_prev = false;
  st.damp_cur = std::min(o.damp_start, o.damp);
  st.sigma2_assumed = p.sigma2;
  return st;
}

void reseed_rows(BigAmpState& st, const std::vector<int>& rows,
                 const Priors& p, Rng& rng) {
  const auto J = st.h_hat.rows();
  const auto L = st.x_hat.cols();
  const double sx2 = p.sigma_x2();
  for (int n : rows) {
    for (Eigen::Index j = 0; j < J; ++j) {
      st.h_hat(j, n) = rng.cnormal(p.beta_bar);
      st.v_h(j, n) = p.beta_bar;
    }
    for (Eigen::Index l = 0; l < L; ++l) {
      st.x_hat(n, l) = rng.cnormal(sx2);
      st.v_x(n, l) = sx2;
    }
  }
  // the scaled residual and the damping memory belong to the old basin
  st.s_hat.setZero();
  st.v_s.setZero();
  st.has_prev = false;
}

}  // namespace

BigAmpState initialize(const CMat& Y, const Priors& p, const BigAmpOptions& o,
                       Rng& rng) {
  if (p.n_users <= 0) throw std::invalid_argument("priors must set n_users");
  BigAmpState st = make_state_common(Y, p, o);
  const auto J = Y.rows();
  const auto L = Y.cols();
  const int N = p.n_users;
  const double sx2 = p.sigma_x2();
  st.h_hat.resize(J, N);
  for (Eigen::Index i = 0; i < st.h_hat.size(); ++i) {
    st.h_hat(i) = rng.cnormal(p.beta_bar);
  }
  st.v_h = RMat::Constant(J, N, p.beta_bar);
  // The prior mean E_x = 0 zeroes the variance-aggregate denominators used
  // by the first backward pass, so x starts from
  // a prior-matched random draw instead (see README notes).
  st.x_hat.resize(N, L);
  for (Eigen::Index i = 0; i < st.x_hat.size(); ++i) {
    st.x_hat(i) = rng.cnormal(sx2);
  }
  st.v_x = RMat::Constant(N, L, sx2);
  st.q_hat = CMat::Zero(J, N);
  st.v_q = RMat::Zero(J, N);
  st.r_hat = CMat::Zero(N, L);
  st.v_r = RMat::Zero(N, L);
  st.sigma2_start_hint = frame_power(Y) / (1.0 + o.anneal_snr0);
  return st;
}

BigAmpState initialize_at(const CMat& Y, const Priors& p,
                          const BigAmpOptions& o, const CMat& h0,
                          const CMat& x0) {
  BigAmpState st = make_state_common(Y, p, o);
  st.h_hat = h0;
  st.x_hat = x0;
  st.v_h = RMat::Constant(h0.rows(), h0.cols(), o.variance_floor);
  st.v_x = RMat::Constant(x0.rows(), x0.cols(), o.variance_floor);
  st.q_hat = CMat::Zero(h0.rows(), h0.cols());
  st.v_q = RMat::Zero(h0.rows(), h0.cols());
  st.r_hat = CMat::Zero(x0.rows(), x0.cols());
  st.v_r = RMat::Zero(x0.rows(), x0.cols());
  const double resid =
      (Y - h0 * x0).squaredNorm() / static_cast<double>(Y.size());
  st.sigma2_start_hint =
      std::max(p.sigma2, resid / (1.0 + o.anneal_snr0));
  return st;
}

void iterate(BigAmpState& state, const CMat& Y, const Priors& p,
             const BigAmpOptions& o) {
  Engine eng(Y, p, o);
  const double sig2 =
      state.sigma2_assumed > 0.0 ? state.sigma2_assumed : p.sigma2;
  eng.step(state, state.damp_cur, sig2);
  eng.commit(state, state.damp_cur, sig2);
  if (!state.h_hat.allFinite() || !state.x_hat.allFinite()) {
    throw std::runtime_error("recursion diverged at iteration " +
                             std::to_string(state.iter));
  }
}

std::vector<int> flag_inconsistent_rows(const BigAmpState& state,
                                        const Priors& p,
                                        const BigAmpOptions& o) {
  const int N = static_cast<int>(state.x_hat.rows());
  const int K = p.layout.K;
  const int I = p.layout.I;
  const int d_f = p.d_f;
  const auto L = state.x_hat.cols();
  const double amp = p.constellation.amplitude;
  const double thr = amp / 2.0;
  const double sx2 = p.sigma_x2();

  std::vector<double> flag_frac(N, 0.0);
  std::vector<char> bad(N, 0);
  for (int n = 0; n < N; ++n) {
    int wrong = 0;
    for (int i = 0; i < I; ++i) {
      int nz = 0;
      const int base = p.layout.data_begin() + i * K;
      for (int k = 0; k < K; ++k) {
        if (std::abs(state.x_hat(n, base + k)) >= thr) ++nz;
      }
      if (nz != d_f) ++wrong;
    }
    flag_frac[n] = I > 0 ? static_cast<double>(wrong) / I : 0.0;
    const double row_power = state.x_hat.row(n).squaredNorm() / L;
    if (flag_frac[n] > o.repair_flag_frac || row_power < 0.5 * sx2) bad[n] = 1;
  }
  // duplicated channel columns: reseed the one with the worse flag fraction
  for (int a = 0; a < N; ++a) {
    const double na = state.h_hat.col(a).norm();
    if (na <= 0.0) continue;
    for (int b = a + 1; b < N; ++b) {
      const double nb = state.h_hat.col(b).norm();
      if (nb <= 0.0) continue;
      const double corr =
          std::abs(state.h_hat.col(a).dot(state.h_hat.col(b))) / (na * nb);
      if (corr > o.repair_corr) {
        if (flag_frac[a] >= flag_frac[b]) bad[a] = 1;
        else bad[b] = 1;
      }
    }
  }
  std::vector<int> rows;
  for (int n = 0; n < N; ++n) {
    if (bad[n]) rows.push_back(n);
  }
  return rows;
}

BigAmpResult run_from(BigAmpState state, const CMat& Y, const Priors& p,
                      const BigAmpOptions& o, Rng& rng) {
  Engine eng(Y, p, o);
  std::ofstream trace;
  if (o.trace && !o.trace_path.empty()) {
    trace.open(o.trace_path);
    trace << "iter,residual,damp,mean_dx\n";
  }
  std::ofstream* tr = (o.trace && trace.is_open()) ? &trace : nullptr;

  int total = 0;
  int repairs = 0;
  PhaseOut ph = run_phase(eng, state, Y, p, o, state.sigma2_start_hint,
                          std::min(o.phase_t_max, o.t_max), tr);
  total += ph.iters;

  while (!ph.diverged && repairs < o.max_repairs && total < o.t_max &&
         p.layout.I > 0 && p.d_f > 0) {
    const std::vector<int> bad = flag_inconsistent_rows(state, p, o);
    if (bad.empty()) break;
    ++repairs;
    double sig_start;
    if (static_cast<int>(bad.size()) > p.n_users / 2) {
      state = initialize(Y, p, o, rng);
      sig_start = state.sigma2_start_hint;
    } else {
      reseed_rows(state, bad, p, rng);
      const double resid = (Y - state.h_hat * state.x_hat).squaredNorm() /
                           static_cast<double>(Y.size());
      sig_start = std::max(resid * 1.5, p.sigma2 * 10.0);
    }
    ph = run_phase(eng, state, Y, p, o, sig_start,
                   std::min(o.repair_t_max, o.t_max - total), tr);
    total += ph.iters;
  }

  BigAmpResult res;
  res.h_hat = state.h_hat;
  res.v_h = state.v_h;
  res.x_hat = state.x_hat;
  res.v_x = state.v_x;
  res.iters = total;
  res.converged = ph.converged;
  res.diverged = ph.diverged;
  res.repairs = repairs;
  res.residual = ph.diverged
                     ? std::numeric_limits<double>::infinity()
                     : (Y - state.h_hat * state.x_hat).norm() / Y.norm();
  return res;
}

BigAmpResult run(const CMat& Y, const Priors& p, const BigAmpOptions& o,
                 Rng& rng) {
  BigAmpResult first = run_from(initialize(Y, p, o, rng), Y, p, o, rng);
  if (!first.diverged) return first;
  // one restart with a fresh initialization seed before reporting failure
  BigAmpResult second = run_from(initialize(Y, p, o, rng), Y, p, o, rng);
  second.restarts = 1;
  second.iters += first.iters;
  return second;
}

}  // namespace scma
