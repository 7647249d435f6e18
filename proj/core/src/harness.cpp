#include "scma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace scma {
namespace {

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

// Round-trippable decimal form, trimmed of trailing zeros.
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    // shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
      char s[64];
      std::snprintf(s, sizeof(s), "%.*g", prec, v);
      double b = 0.0;
      std::sscanf(s, "%lf", &b);
      if (b == v) return s;
    }
  }
  return buf;
}

}  // namespace

TrialData build_trial(const SystemConfig& cfg, double sigma2, Rng& rng) {
  TrialData d;
  d.cfg = validate_config(cfg);
  d.cfg.sigma2 = sigma2;
  d.constellation = build_constellation(d.cfg.M, d.cfg.P, d.cfg.gamma());
  d.signatures = build_all_signatures(d.cfg, d.constellation);
  const int payload_bits =
      d.cfg.I * d.cfg.d_f * d.constellation.bits_per_symbol;
  d.payloads.resize(d.cfg.N);
  for (auto& p : d.payloads) {
    p.resize(payload_bits);
    for (auto& b : p) b = rng.bit();
  }
  d.X = build_signal_matrix(d.payloads, d.cfg, d.constellation, rng);
  d.channel = draw_channel(d.cfg, rng);
  d.rx = apply_channel(d.channel, d.X, sigma2, rng);
  return d;
}

TrialResult decode_trial(const TrialData& data, const BigAmpOptions& bigamp,
                         const DetectorOptions& detector, Rng& rng) {
  TrialResult out;
  const SystemConfig& cfg = data.cfg;
  const double t0 = wall_seconds();

  Priors p;
  p.gamma = cfg.gamma();
  p.constellation = data.constellation;
  p.beta_bar = cfg.beta_bar;
  p.sigma2 = data.rx.sigma2;
  p.n_users = cfg.N;
  p.d_f = cfg.d_f;
  p.layout = cfg.layout();

  BigAmpResult rec = run(data.rx.Y, p, bigamp, rng);
  out.iters = rec.iters;
  out.converged = rec.converged;
  out.diverged = rec.diverged;
  out.repairs = rec.repairs;
  out.restarts = rec.restarts;
  out.residual = rec.residual;

  const int total_bits =
      cfg.N * cfg.I * cfg.d_f * data.constellation.bits_per_symbol;
  if (rec.diverged) {
    out.ber = 1.0;
    out.id_error_rate = 1.0;
    out.runtime_s = wall_seconds() - t0;
    return out;
  }

  DetectionResult det =
      detect(rec.x_hat, cfg, data.constellation, data.signatures, detector);
  long errors = 0;
  int id_errors = 0;
  const int per_user = cfg.I * cfg.d_f * data.constellation.bits_per_symbol;
  for (int n = 0; n < cfg.N; ++n) {
    if (!det.id_success[n]) {
      ++id_errors;
      errors += per_user;
      continue;
    }
    const Bits& truth = data.payloads[n];
    const Bits& got = det.bits[n];
    for (int b = 0; b < per_user; ++b) {
      errors += (b < static_cast<int>(got.size()) ? got[b] != truth[b] : 1);
    }
  }
  out.ber = static_cast<double>(errors) / total_bits;
  out.id_error_rate = static_cast<double>(id_errors) / cfg.N;
  out.runtime_s = wall_seconds() - t0;
  return out;
}

std::uint64_t trial_seed(std::uint64_t master_seed, int point_index,
                         int trial_index) {
  return derive_seed({master_seed, static_cast<std::uint64_t>(point_index),
                      static_cast<std::uint64_t>(trial_index)});
}

TrialResult run_trial(const SystemConfig& cfg, double snr_db,
                      std::uint64_t seed, const BigAmpOptions& bigamp,
                      const DetectorOptions& detector) {
  Rng rng(seed);
  const double sigma2 = snr_to_sigma2(snr_db, cfg.P);
  TrialData data = build_trial(cfg, sigma2, rng);
  TrialResult r = decode_trial(data, bigamp, detector, rng);
  r.seed = seed;
  return r;
}

SweepResult sweep(const SweepOptions& options) {
  SweepResult result;
  result.options = options;
  result.points.resize(options.points.size());

  struct Job {
    int point;
    int trial;
  };
  std::vector<Job> jobs;
  std::vector<SystemConfig> cfgs(options.points.size());
  for (int pi = 0; pi < static_cast<int>(options.points.size()); ++pi) {
    const auto& pt = options.points[pi];
    SystemConfig cfg = make_config(pt.gamma, options.d_f, options.d_v,
                                   options.I, options.M, options.P, options.J);
    cfg.support_mode = options.support_mode;
    cfgs[pi] = cfg;
    auto& pr = result.points[pi];
    pr.gamma = pt.gamma;
    pr.K = cfg.K;
    pr.N = cfg.N;
    pr.J = cfg.J;
    pr.I = cfg.I;
    pr.snr_db = pt.snr_db;
    pr.trials = options.trials;
    pr.trial_results.resize(options.trials);
    for (int t = 0; t < options.trials; ++t) jobs.push_back({pi, t});
  }

  auto run_job = [&](const Job& j) {
    const std::uint64_t seed =
        trial_seed(options.master_seed, j.point, j.trial);
    result.points[j.point].trial_results[j.trial] =
        run_trial(cfgs[j.point], result.points[j.point].snr_db, seed,
                  options.bigamp, options.detector);
  };

  const int workers =
      std::max(1, std::min<int>(options.parallelism,
                                static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (const Job& j : jobs) run_job(j);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(jobs[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (auto& pr : result.points) {
    double ber_sum = 0.0, id_sum = 0.0, iter_sum = 0.0, rt_sum = 0.0;
    for (const auto& tr : pr.trial_results) {
      ber_sum += tr.ber;
      id_sum += tr.id_error_rate;
      iter_sum += tr.iters;
      rt_sum += tr.runtime_s;
    }
    const int n = pr.trials;
    pr.ber = ber_sum / n;
    pr.id_error_rate = id_sum / n;
    pr.mean_iters = iter_sum / n;
    pr.runtime_s = rt_sum;
    double var = 0.0;
    if (n > 1) {
      for (const auto& tr : pr.trial_results) {
        var += (tr.ber - pr.ber) * (tr.ber - pr.ber);
      }
      var /= (n - 1);
    }
    pr.ci95 = 1.96 * std::sqrt(var / n);
  }
  return result;
}

CMat map_oracle(const CMat& Y, const CMat& H, const SystemConfig& cfg,
                const Constellation& c,
                const std::vector<UserSignature>& signatures,
                double max_candidates) {
  const FrameLayout layout = cfg.layout();
  const int N = cfg.N, K = cfg.K, J = static_cast<int>(Y.rows());
  if (H.rows() != J || H.cols() != N) {
    throw std::invalid_argument("map_oracle: H must be J x N");
  }
  if (Y.cols() != layout.length()) {
    throw std::invalid_argument("map_oracle: Y column count != frame length");
  }

  // Per-user candidate list for one K-column block: every d_f-subset of K
  // positions times every assignment of constellation points to them.
  std::vector<std::vector<int>> supports;
  {
    std::vector<int> idx(cfg.d_f);
    for (int i = 0; i < cfg.d_f; ++i) idx[i] = i;
    for (;;) {
      supports.push_back(idx);
      int i = cfg.d_f - 1;
      while (i >= 0 && idx[i] == K - cfg.d_f + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < cfg.d_f; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  const int M = static_cast<int>(c.points.size());
  double per_user = static_cast<double>(supports.size());
  for (int i = 0; i < cfg.d_f; ++i) per_user *= M;
  if (std::pow(per_user, N) > max_candidates) {
    throw std::invalid_argument("map_oracle: candidate count too large");
  }

  std::vector<CVec> candidates;  // each: length-K sparse column block
  candidates.reserve(static_cast<size_t>(per_user));
  {
    std::vector<int> digits(cfg.d_f, 0);
    for (const auto& sup : supports) {
      std::fill(digits.begin(), digits.end(), 0);
      for (;;) {
        CVec v = CVec::Zero(K);
        for (int i = 0; i < cfg.d_f; ++i) v[sup[i]] = c.points[digits[i]];
        candidates.push_back(std::move(v));
        int i = cfg.d_f - 1;
        while (i >= 0 && digits[i] == M - 1) digits[i--] = 0;
        if (i < 0) break;
        ++digits[i];
      }
    }
  }

  CMat X = CMat::Zero(N, layout.length());
  const cplx x0 = build_symbol_label(c);
  for (int n = 0; n < N; ++n) {
    X(n, layout.label_index()) = x0;
    for (int k = 0; k < K; ++k) {
      X(n, layout.signature_begin() + k) = signatures[n].symbols[k];
    }
  }

  // Joint exhaustive search per data block: depth-first over users with a
  // running partial synthesis of the block's J x K contribution.
  std::vector<CMat> partial(N + 1, CMat::Zero(J, K));
  std::vector<int> choice(N, 0);
  for (int blk = 0; blk < cfg.I; ++blk) {
    const int col0 = layout.data_begin() + blk * K;
    const CMat Yb = Y.middleCols(col0, K);
    double best = -1.0;
    std::vector<int> best_choice(N, 0);
    int depth = 0;
    choice.assign(N, 0);
    for (;;) {
      if (depth == N) {
        const double cost = (Yb - partial[N]).squaredNorm();
        if (best < 0.0 || cost < best) {
          best = cost;
          best_choice = choice;
        }
        // backtrack to the deepest level with candidates left
        --depth;
        while (depth >= 0 &&
               choice[depth] + 1 == static_cast<int>(candidates.size())) {
          --depth;
        }
        if (depth < 0) break;
        ++choice[depth];
      }
      const CVec& cand = candidates[choice[depth]];
      partial[depth + 1] = partial[depth] + H.col(depth) * cand.transpose();
      ++depth;
      for (int d = depth; d < N; ++d) choice[d] = 0;
    }
    for (int n = 0; n < N; ++n) {
      X.block(n, col0, 1, K) = candidates[best_choice[n]].transpose();
    }
  }
  return X;
}

std::vector<Bits> frame_bits(const CMat& X, const SystemConfig& cfg,
                             const Constellation& c) {
  const FrameLayout layout = cfg.layout();
  std::vector<Bits> bits(cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    CVec span = X.row(n)
                    .segment(layout.data_begin(), layout.data_length())
                    .transpose();
    DemodResult d = demodulate(span, span, c, cfg.d_f, cfg.K);
    bits[n] = std::move(d.bits);
  }
  return bits;
}

std::string format_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "gamma,K,N,J,I,snr_db,trials,ber,ci95,id_error_rate,mean_iters,"
        "runtime_s\n";
  for (const auto& p : result.points) {
    os << fmt_double(p.gamma) << ',' << p.K << ',' << p.N << ',' << p.J << ','
       << p.I << ',' << fmt_double(p.snr_db) << ',' << p.trials << ','
       << fmt_double(p.ber) << ',' << fmt_double(p.ci95) << ','
       << fmt_double(p.id_error_rate) << ',' << fmt_double(p.mean_iters)
       << ',' << fmt_double(p.runtime_s) << '\n';
  }
  return os.str();
}

std::string format_metadata(const SweepResult& result) {
  using nlohmann::json;
  const SweepOptions& o = result.options;
  json meta;
  meta["tool"] = "scma_sim";
  meta["version"] = "1.0.0";
  json pts = json::array();
  for (const auto& p : o.points) {
    pts.push_back({{"gamma", p.gamma}, {"snr_db", p.snr_db}});
  }
  meta["points"] = pts;
  meta["d_f"] = o.d_f;
  meta["d_v"] = o.d_v;
  meta["I"] = o.I;
  meta["M"] = o.M;
  meta["P"] = o.P;
  meta["J"] = o.J;
  meta["trials"] = o.trials;
  meta["master_seed"] = o.master_seed;
  meta["parallelism"] = o.parallelism;
  meta["support_mode"] = to_string(o.support_mode);
  meta["seeding"] = "trial seed = derive_seed(master_seed, point, trial)";
  json ba;
  ba["t_max"] = o.bigamp.t_max;
  ba["tau_stop"] = o.bigamp.tau_stop;
  ba["damp"] = o.bigamp.damp;
  ba["damp_adapt"] = o.bigamp.damp_adapt;
  ba["variance_floor"] = o.bigamp.variance_floor;
  ba["strict_paper_variances"] = o.bigamp.strict_paper_variances;
  ba["anneal"] = o.bigamp.anneal;
  ba["anneal_rho"] = o.bigamp.anneal_rho;
  ba["anneal_snr0"] = o.bigamp.anneal_snr0;
  ba["damp_start"] = o.bigamp.damp_start;
  ba["damp_min"] = o.bigamp.damp_min;
  ba["stop_damp_min"] = o.bigamp.stop_damp_min;
  ba["max_repairs"] = o.bigamp.max_repairs;
  ba["phase_t_max"] = o.bigamp.phase_t_max;
  ba["repair_t_max"] = o.bigamp.repair_t_max;
  meta["bigamp"] = ba;
  json det;
  det["tau"] = o.detector.tau;  // <= 0: amplitude/2 default
  det["literal_first_nonzero"] = o.detector.literal_first_nonzero;
  meta["detector"] = det;

  if (!result.points.empty()) {
    // Constellation of the first point (amplitude depends on gamma).
    const auto& p0 = result.points.front();
    Constellation c = build_constellation(
        o.M, o.P, static_cast<double>(o.d_f) / p0.K);
    json cj = json::array();
    for (size_t i = 0; i < c.points.size(); ++i) {
      Bits b = symbol_to_bits(c.points[i], c);
      std::string bs;
      for (auto bit : b) bs.push_back(bit ? '1' : '0');
      cj.push_back({{"re", c.points[i].real()},
                    {"im", c.points[i].imag()},
                    {"bits", bs}});
    }
    meta["constellation_first_point"] = cj;
  }

  json per_point = json::array();
  for (size_t pi = 0; pi < result.points.size(); ++pi) {
    const auto& p = result.points[pi];
    json pj;
    pj["gamma"] = p.gamma;
    pj["snr_db"] = p.snr_db;
    pj["ber"] = p.ber;
    pj["ci95"] = p.ci95;
    pj["id_error_rate"] = p.id_error_rate;
    pj["mean_iters"] = p.mean_iters;
    pj["runtime_s"] = p.runtime_s;
    json seeds = json::array();
    json conv = json::array();
    for (const auto& t : p.trial_results) {
      seeds.push_back(t.seed);
      conv.push_back(t.converged);
    }
    pj["trial_seeds"] = seeds;
    pj["trial_converged"] = conv;
    per_point.push_back(pj);
  }
  meta["results"] = per_point;
  json notes = json::array({
      "recovery runs a deterministic noise-level continuation with "
      "adaptive damping; see README",
      "runtime_s is wall-clock and not reproducible across runs; every "
      "other column is deterministic for a fixed master_seed",
  });
  for (const auto& n : o.metadata_notes) notes.push_back(n);
  meta["notes"] = notes;
  return meta.dump(2) + "\n";
}

void emit_csv(const SweepResult& result, const std::string& path) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit_csv: cannot open " + path);
    os << format_csv(result);
  }
  std::ofstream ms(path + ".meta.json", std::ios::binary);
  if (!ms) throw std::runtime_error("emit_csv: cannot open metadata file");
  ms << format_metadata(result);
}

}  // namespace scma
