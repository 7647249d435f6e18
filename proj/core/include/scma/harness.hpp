#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scma/bigamp.hpp"
#include "scma/channel.hpp"
#include "scma/codebook.hpp"
#include "scma/detector.hpp"
#include "scma/model.hpp"
#include "scma/txframe.hpp"
#include "scma/types.hpp"

namespace scma {

// One fully materialized transmission: everything the transmitter and the
// channel produced, kept around so tests can compare against ground truth.
struct TrialData {
  SystemConfig cfg;
  Constellation constellation;
  std::vector<UserSignature> signatures;
  std::vector<Bits> payloads;   // per user, I*d_f*bits_per_symbol bits
  SignalMatrix X;
  ChannelRealization channel;
  ReceivedMatrix rx;
};

// Receiver-side outcome of one trial.
struct TrialResult {
  double ber = 0.0;            // payload bit error rate over all users
  double id_error_rate = 0.0;  // fraction of users not identified
  int iters = 0;
  bool converged = false;
  bool diverged = false;
  int repairs = 0;
  int restarts = 0;
  double residual = 0.0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
};

struct SweepPointConfig {
  double gamma = 0.1;
  double snr_db = 17.5;
};

struct SweepOptions {
  std::vector<SweepPointConfig> points;
  int d_f = 2;
  int d_v = 3;
  int I = 200;
  int M = 4;
  double P = 1.0;
  int J = -1;  // -1: J = N
  int trials = 50;
  std::uint64_t master_seed = 1;
  int parallelism = 1;
  SupportMode support_mode = SupportMode::per_symbol;
  BigAmpOptions bigamp;
  DetectorOptions detector;
  // Free-form annotations appended to the emitted metadata (e.g. why a
  // run deviates from a reference configuration).
  std::vector<std::string> metadata_notes;
};

struct SweepPointResult {
  double gamma = 0.0;
  int K = 0, N = 0, J = 0, I = 0;
  double snr_db = 0.0;
  int trials = 0;
  double ber = 0.0;
  double ci95 = 0.0;
  double id_error_rate = 0.0;
  double mean_iters = 0.0;
  double runtime_s = 0.0;
  std::vector<TrialResult> trial_results;
};

struct SweepResult {
  SweepOptions options;
  std::vector<SweepPointResult> points;
};

// Transmit side: payloads, signatures, frame matrix, channel, noise. All
// randomness comes from `rng`, in a fixed draw order.
TrialData build_trial(const SystemConfig& cfg, double sigma2, Rng& rng);

// Receive side: dictionary-learning recovery plus detection, scored against
// the ground truth in `data`. A user that is not identified scores BER 1 on
// its payload; a diverged recovery scores BER 1 for everyone.
TrialResult decode_trial(const TrialData& data, const BigAmpOptions& bigamp,
                         const DetectorOptions& detector, Rng& rng);

// Per-trial counter-based seeding: the result depends only on
// (master_seed, point_index, trial_index), never on scheduling.
std::uint64_t trial_seed(std::uint64_t master_seed, int point_index,
                         int trial_index);

TrialResult run_trial(const SystemConfig& cfg, double snr_db,
                      std::uint64_t seed, const BigAmpOptions& bigamp,
                      const DetectorOptions& detector);

SweepResult sweep(const SweepOptions& options);

// Exhaustive maximum-likelihood recovery of the frame matrix given the true
// channel. Each K-column block is searched jointly over every (support,
// symbol-values) choice of every user; label and signature columns are
// reconstructed from the known frame layout. Refuses instances whose
// per-block candidate count exceeds `max_candidates`.
CMat map_oracle(const CMat& Y, const CMat& H, const SystemConfig& cfg,
                const Constellation& c,
                const std::vector<UserSignature>& signatures,
                double max_candidates = 1e6);

// Payload bits of every user read directly off a frame matrix with exact
// per-block supports (as produced by map_oracle or build_signal_matrix).
std::vector<Bits> frame_bits(const CMat& X, const SystemConfig& cfg,
                             const Constellation& c);

// Writes `gamma,K,N,J,I,snr_db,trials,ber,ci95,id_error_rate,mean_iters,
// runtime_s` rows plus a sibling `<path>.meta.json` with the full run
// configuration. Every column except runtime_s is reproducible byte for byte
// across parallelism settings.
void emit_csv(const SweepResult& result, const std::string& path);

std::string format_csv(const SweepResult& result);
std::string format_metadata(const SweepResult& result);

}  // namespace scma
